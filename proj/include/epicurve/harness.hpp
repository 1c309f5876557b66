#pragma once

#include "epicurve/curves.hpp"
#include "epicurve/epidemic.hpp"
#include "epicurve/models.hpp"
#include "epicurve/rng.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iosfwd>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace epicurve {

/// A statistic compared against a declared bound.
struct Check {
    std::string name;
    double value;
    std::string relation; ///< "<=", "<" or ">="
    double bound;
    bool pass;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<std::string> spec_summary;
    std::vector<std::string> columns;          ///< per-replicate record columns
    std::vector<std::vector<double>> records;  ///< one row per replicate
    std::vector<std::pair<std::string, double>> statistics;
    std::vector<Check> checks;

    bool passed() const;
    void add_statistic(const std::string& name, double value) { statistics.emplace_back(name, value); }
    /// Appends a check; relation is one of "<=", "<", ">=".
    const Check& check(const std::string& name, double value, const std::string& relation, double bound);
    /// Records as CSV after a '#' header carrying the model summary.
    void write_csv(std::ostream& out) const;
    /// Statistics and checks as "key = value" lines followed by one PASS/FAIL line per check.
    void write_summary(std::ostream& out) const;
};

/// Number of worker threads used by parallel_map; at least 1.
unsigned worker_count();

/**
 * Evaluates f(0), ..., f(n - 1) on a worker pool and returns the results in index order.
 * The first exception thrown by any task is rethrown after all workers stop.
 */
template <class F>
auto parallel_map(std::size_t n, F&& f, unsigned workers = worker_count()) -> std::vector<decltype(f(std::size_t{}))> {
    using T = decltype(f(std::size_t{}));
    std::vector<T> out(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    const unsigned k = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (k <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < k; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

double median(std::vector<double> x);
/// Linear-interpolation quantile, p in [0, 1].
double quantile(std::vector<double> x, double p);
/// Kolmogorov-Smirnov distance between the sample and a continuous cdf.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

struct ConvergenceOptions {
    double u_lo = -3.0;
    double u_hi = 5.0;
    double u_step = 0.02;
    double tolerance = 0.10;       ///< bound on the median sup-distance at the largest N
    double final_tolerance = 0.02; ///< bound on |mean final fraction - s_inf| at the largest N
    double threshold_factor = 1.0;
    long max_attempts_per_major = 50;
};

/// Aligned epidemic curves against the limit curve for each N; M major outbreaks per N.
ExperimentReport curve_convergence(const ModelSpec& spec, const std::vector<long>& N_list, int M, const RandomStream& rng,
                                   const ConvergenceOptions& options = {});

struct ReedFrostOptions {
    int r_lo = -2;
    int r_hi = 4;
    double tolerance = 0.05; ///< bound on the median deviation at the first N
};

/// Discrete-generation limit check for the Reed-Frost epidemic; M[j] replicates at N_list[j].
ExperimentReport reed_frost_check(double mu, const std::vector<long>& N_list, const std::vector<int>& M,
                                  const RandomStream& rng, const ReedFrostOptions& options = {});

/// Minor-outbreak frequency against q_forward^I0 with a binomial 3 sigma band.
ExperimentReport extinction_check(const ModelSpec& spec, long N, int M, long I0, const RandomStream& rng,
                                  double sigmas = 3.0);

struct StationaryOptions {
    long min_births = 10'000;
    int runs = 10;
    double tolerance = 0.03;          ///< KS bound
    double fraction_tolerance = 0.02; ///< multitype birth fractions against zeta
    double identity_tolerance = 1e-8;
    int max_attempts = 1000;
};

/// Ages and residual birth times of forward runs at time T against Exp(lambda) and the residual law.
ExperimentReport stationary_laws_check(const ModelSpec& spec, double T, const RandomStream& rng,
                                       const StationaryOptions& options = {});

struct CrossValidationOptions {
    int samples = 10'000;
    double growth = 1e3;        ///< horizon with e^{lambda T} >= growth
    double tolerance = 0.02;    ///< sup-distance bound
    double mean_sigmas = 4.0;   ///< standard errors allowed for the W-hat mean
};

/// Limit curve from the functional equation against the Monte Carlo transform of backward W-hat samples.
ExperimentReport curve_cross_validation(const ModelSpec& spec, const RandomStream& rng,
                                        const CrossValidationOptions& options = {});

} // namespace epicurve
