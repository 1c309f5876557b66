#pragma once

#include "epicurve/models.hpp"
#include "epicurve/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace epicurve {

struct InfectionEvent {
    double time;
    int type;
};

/// One finite-population epidemic. Initial infecteds appear as events at time 0.
struct Trajectory {
    std::vector<InfectionEvent> events; ///< ordered by time
    std::vector<long> type_sizes;       ///< N_l
    long N = 0;
    long initial = 0;
    long threshold = 0; ///< infections needed for a major outbreak
    double tau_N = std::numeric_limits<double>::infinity(); ///< time of the threshold-th infection, +inf for minor outbreaks
    bool major = false;
    bool generations = false; ///< event times are generation indices

    /// Contacts that landed on an already infected individual.
    long ghosts = 0;
    /// Configuration model only.
    long self_loops = 0;
    long multi_edges = 0;
    /// Configuration model only: type whose count was adjusted to make the half-edge total even, or -1.
    int padded_type = -1;

    int types() const { return static_cast<int>(type_sizes.size()); }
    long infections() const { return static_cast<long>(events.size()); }
    /// S_l(t), right-continuous.
    long susceptible(int type, double t) const;
    long susceptible_total(double t) const;
    long final_susceptible(int type) const;
    /// Infections per type with time <= t.
    std::vector<long> infected_by(double t) const;

    /// Rebuilds the per-type lookup tables; called by every simulator.
    void index();

private:
    std::vector<std::vector<double>> type_times_;
};

struct EpidemicOptions {
    /// Contacts avoid the infective's own label (same-type contacts only).
    bool without_replacement = false;
    /// Major outbreak threshold is floor(factor * sqrt(N)).
    double threshold_factor = 1.0;
};

long major_threshold(long N, double factor = 1.0);

Trajectory simulate_single(const ModelSpec& spec, long N, long I0, RandomStream& rng, const EpidemicOptions& options = {});

/// Chain binomial: each infective of generation g infects each susceptible independently with probability mu / N.
Trajectory simulate_reed_frost(double mu, long N, long I0, RandomStream& rng, const EpidemicOptions& options = {});

/// Type sizes by largest remainder from N pi.
std::vector<long> apportion(long N, const std::vector<double>& proportions);

Trajectory simulate_multitype(const ModelSpec& spec, long N, int initial_type, RandomStream& rng,
                              const EpidemicOptions& options = {});

/**
 * Epidemic on a configuration-model graph whose half-edges are matched when their vertex is
 * infected. The initial vertex is chosen uniformly. Types are degree classes (index i = degree i + 1).
 */
Trajectory simulate_config(const ModelSpec& spec, long N, RandomStream& rng, const EpidemicOptions& options = {});

/// Degree-class sizes with an even half-edge total; padded_type is set when a vertex had to be added.
std::vector<long> configuration_sizes(long N, const std::vector<double>& degree_probs, int* padded_type = nullptr);

/// Dispatches on the model kind; I0 initial infecteds of type 0 for single-type models.
Trajectory simulate(const ModelSpec& spec, long N, long I0, RandomStream& rng, const EpidemicOptions& options = {});

/// aligned[l][i] = S_l(tau_N + (log(N)/2 + u_i) / lambda) / N_l; NaN for empty types.
std::vector<std::vector<double>> align_curve(const Trajectory& traj, double lambda, const std::vector<double>& u);

/// Least-squares slope of log(cumulative infections) against time between the given counts.
double growth_rate_estimate(const Trajectory& traj, long from, long to);

/// Rows time,type,cum_infections,S_0..S_{d-1} after a '#' header block.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::uint64_t seed,
                          const std::vector<std::string>& header = {});

} // namespace epicurve
