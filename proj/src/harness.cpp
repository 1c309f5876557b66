#include "epicurve/harness.hpp"
#include "epicurve/errors.hpp"
#include "epicurve/format.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace epicurve {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string n_label(long N) { return "N=" + std::to_string(N); }

} // namespace

bool ExperimentReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check& ExperimentReport::check(const std::string& name, double value, const std::string& relation, double bound) {
    bool pass;
    if (relation == "<=")
        pass = value <= bound;
    else if (relation == "<")
        pass = value < bound;
    else if (relation == ">=")
        pass = value >= bound;
    else
        throw InvalidArgument("ExperimentReport::check: unknown relation " + relation);
    checks.push_back({name, value, relation, bound, pass});
    return checks.back();
}

void ExperimentReport::write_csv(std::ostream& out) const {
    out << "# experiment = " << experiment << '\n';
    for (const auto& s : spec_summary) out << "# " << s << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : records) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
        out << '\n';
    }
}

void ExperimentReport::write_summary(std::ostream& out) const {
    out << "experiment = " << experiment << '\n';
    for (const auto& [k, v] : statistics) out << k << " = " << fmt(v) << '\n';
    for (const auto& c : checks)
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << fmt(c.value) << ' ' << c.relation << ' ' << fmt(c.bound)
            << '\n';
    out << "result = " << (passed() ? "PASS" : "FAIL") << '\n';
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double p) {
    if (x.empty()) return kNaN;
    std::sort(x.begin(), x.end());
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) return kNaN;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

ExperimentReport curve_convergence(const ModelSpec& spec, const std::vector<long>& N_list, int M, const RandomStream& rng,
                                   const ConvergenceOptions& options) {
    if (M < 50) throw InvalidArgument("curve_convergence: need at least 50 replicates per N");
    if (N_list.empty()) throw InvalidArgument("curve_convergence: empty N list");
    const DerivedConstants consts = constants(spec);
    const LimitCurve curve = solve_s_hat(spec, consts, Grid{options.u_lo, options.u_hi, options.u_step});
    const double s_inf = final_size_and_extinction(spec).s_inf;
    EpidemicOptions eopt;
    eopt.threshold_factor = options.threshold_factor;

    ExperimentReport rep;
    rep.experiment = "curve_convergence";
    rep.spec_summary = spec.describe();
    rep.spec_summary.push_back("replicates = " + std::to_string(M));
    rep.spec_summary.push_back("u_range = " + fmt(options.u_lo) + " " + fmt(options.u_hi) + " " + fmt(options.u_step));
    rep.columns = {"N", "attempt", "major", "tau_N", "final_fraction", "sup_distance", "ghosts", "self_loops", "multi_edges"};

    struct Row {
        bool major = false;
        double tau = kNaN, final_fraction = kNaN, sup = kNaN;
        long ghosts = 0, loops = 0, multi = 0;
    };

    std::vector<double> medians;
    double last_final = kNaN;
    for (std::size_t j = 0; j < N_list.size(); ++j) {
        const long N = N_list[j];
        const RandomStream stream = rng.split(j);
        std::vector<double> sups, finals;
        long attempts = 0, minors = 0;
        const long budget = options.max_attempts_per_major * M;
        while (static_cast<int>(sups.size()) < M) {
            if (attempts >= budget)
                throw InsufficientOutbreaks("curve_convergence: only " + std::to_string(sups.size()) +
                                                " major outbreaks in " + std::to_string(attempts) + " attempts at " +
                                                n_label(N),
                                            static_cast<long>(sups.size()));
            const auto batch = static_cast<std::size_t>(std::max<long>(1, M - static_cast<long>(sups.size())));
            const long base = attempts;
            const auto rows = parallel_map(batch, [&](std::size_t i) {
                RandomStream r = stream.split(static_cast<std::uint64_t>(base) + i);
                const Trajectory t = simulate(spec, N, 1, r, eopt);
                Row row;
                row.major = t.major;
                row.ghosts = t.ghosts;
                row.loops = t.self_loops;
                row.multi = t.multi_edges;
                if (!t.major) return row;
                row.tau = t.tau_N;
                row.final_fraction = static_cast<double>(t.susceptible_total(std::numeric_limits<double>::infinity())) /
                                     static_cast<double>(t.N);
                const auto aligned = align_curve(t, consts.lambda, curve.u);
                double sup = 0;
                for (int l = 0; l < t.types(); ++l) {
                    if (t.type_sizes[static_cast<std::size_t>(l)] == 0) continue;
                    for (std::size_t i2 = 0; i2 < curve.u.size(); ++i2)
                        sup = std::max(sup, std::abs(aligned[static_cast<std::size_t>(l)][i2] -
                                                     curve.values[static_cast<std::size_t>(l)][i2]));
                }
                row.sup = sup;
                return row;
            });
            for (std::size_t i = 0; i < rows.size() && static_cast<int>(sups.size()) < M; ++i) {
                const Row& r = rows[i];
                ++attempts;
                rep.records.push_back({static_cast<double>(N), static_cast<double>(base) + static_cast<double>(i),
                                       r.major ? 1.0 : 0.0, r.tau, r.final_fraction, r.sup, static_cast<double>(r.ghosts),
                                       static_cast<double>(r.loops), static_cast<double>(r.multi)});
                if (r.major) {
                    sups.push_back(r.sup);
                    finals.push_back(r.final_fraction);
                } else {
                    ++minors;
                }
            }
        }
        const double med = median(sups);
        medians.push_back(med);
        last_final = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());
        rep.add_statistic("median_sup_distance[" + n_label(N) + "]", med);
        rep.add_statistic("q1_sup_distance[" + n_label(N) + "]", quantile(sups, 0.25));
        rep.add_statistic("q3_sup_distance[" + n_label(N) + "]", quantile(sups, 0.75));
        rep.add_statistic("minor_frequency[" + n_label(N) + "]", static_cast<double>(minors) / static_cast<double>(attempts));
        rep.add_statistic("mean_final_fraction[" + n_label(N) + "]", last_final);
    }
    rep.add_statistic("s_inf", s_inf);
    for (std::size_t j = 1; j < medians.size(); ++j)
        rep.check("median decreases " + n_label(N_list[j - 1]) + " -> " + n_label(N_list[j]), medians[j], "<",
                  medians[j - 1]);
    rep.check("median sup-distance at " + n_label(N_list.back()), medians.back(), "<=", options.tolerance);
    rep.check("final fraction error at " + n_label(N_list.back()), std::abs(last_final - s_inf), "<=",
              options.final_tolerance);
    return rep;
}

ExperimentReport reed_frost_check(double mu, const std::vector<long>& N_list, const std::vector<int>& M,
                                  const RandomStream& rng, const ReedFrostOptions& options) {
    if (!(mu > 1)) throw InvalidArgument("reed_frost_check: mu must exceed 1");
    if (N_list.empty() || N_list.size() != M.size())
        throw InvalidArgument("reed_frost_check: need one replicate count per N");
    ExperimentReport rep;
    rep.experiment = "reed_frost_check";
    rep.spec_summary = {"model = reed_frost", "mu = " + fmt(mu),
                        "r_range = " + std::to_string(options.r_lo) + " " + std::to_string(options.r_hi)};
    rep.columns = {"N", "replicate", "n", "theta", "W", "r", "observed", "predicted", "deviation"};

    std::vector<double> medians;
    for (std::size_t j = 0; j < N_list.size(); ++j) {
        const long N = N_list[j];
        const int n = static_cast<int>(std::floor(0.5 * std::log(static_cast<double>(N)) / std::log(mu)));
        const double theta = std::pow(mu, n) / std::sqrt(static_cast<double>(N));
        const RandomStream stream = rng.split(j);
        struct Rep {
            double W;
            std::vector<double> observed, predicted;
        };
        const auto reps = parallel_map(static_cast<std::size_t>(M[j]), [&](std::size_t i) {
            RandomStream r = stream.split(i);
            const Trajectory t = simulate_reed_frost(mu, N, 1, r);
            const auto zn = std::count_if(t.events.begin(), t.events.end(),
                                          [&](const InfectionEvent& e) { return e.time == static_cast<double>(n); });
            Rep out{static_cast<double>(zn) * std::pow(mu, -n), {}, {}};
            if (out.W == 0) return out;
            for (int rr = options.r_lo; rr <= options.r_hi; ++rr) {
                out.observed.push_back(static_cast<double>(t.susceptible_total(2.0 * n + rr)) / static_cast<double>(N));
                out.predicted.push_back(gw_psi(mu, out.W * theta * theta * std::pow(mu, rr + 1) / (mu - 1)));
            }
            return out;
        });
        std::vector<double> devs;
        long excluded = 0;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            const Rep& r = reps[i];
            if (r.W == 0) {
                ++excluded;
                rep.records.push_back({static_cast<double>(N), static_cast<double>(i), static_cast<double>(n), theta, 0.0,
                                       kNaN, kNaN, kNaN, kNaN});
                continue;
            }
            for (std::size_t k = 0; k < r.observed.size(); ++k) {
                const double d = std::abs(r.observed[k] - r.predicted[k]);
                devs.push_back(d);
                rep.records.push_back({static_cast<double>(N), static_cast<double>(i), static_cast<double>(n), theta, r.W,
                                       static_cast<double>(options.r_lo + static_cast<int>(k)), r.observed[k],
                                       r.predicted[k], d});
            }
        }
        medians.push_back(median(devs));
        rep.add_statistic("n[" + n_label(N) + "]", n);
        rep.add_statistic("theta[" + n_label(N) + "]", theta);
        rep.add_statistic("excluded[" + n_label(N) + "]", static_cast<double>(excluded));
        rep.add_statistic("median_deviation[" + n_label(N) + "]", medians.back());
    }
    rep.check("median deviation at " + n_label(N_list.front()), medians.front(), "<=", options.tolerance);
    for (std::size_t j = 1; j < medians.size(); ++j)
        rep.check("median deviation decreases " + n_label(N_list[j - 1]) + " -> " + n_label(N_list[j]), medians[j], "<",
                  medians[j - 1]);
    return rep;
}

ExperimentReport extinction_check(const ModelSpec& spec, long N, int M, long I0, const RandomStream& rng, double sigmas) {
    if (M < 1) throw InvalidArgument("extinction_check: need at least one replicate");
    if (!supercritical(spec)) throw SubcriticalError("extinction_check: model is not supercritical");
    const FinalSize fs = final_size_and_extinction(spec);
    const double q = spec.kind() == ModelKind::Multitype ? fs.q_forward_by_type(0) : fs.q_forward;
    const double expected = std::pow(q, static_cast<double>(I0));

    ExperimentReport rep;
    rep.experiment = "extinction_check";
    rep.spec_summary = spec.describe();
    rep.spec_summary.push_back("N = " + std::to_string(N));
    rep.spec_summary.push_back("I0 = " + std::to_string(I0));
    rep.spec_summary.push_back("replicates = " + std::to_string(M));
    rep.columns = {"replicate", "minor", "infections"};
    const auto rows = parallel_map(static_cast<std::size_t>(M), [&](std::size_t i) {
        RandomStream r = rng.split(i);
        const Trajectory t = simulate(spec, N, I0, r);
        return std::pair<bool, long>{!t.major, t.infections()};
    });
    long minors = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        minors += rows[i].first;
        rep.records.push_back({static_cast<double>(i), rows[i].first ? 1.0 : 0.0, static_cast<double>(rows[i].second)});
    }
    const double freq = static_cast<double>(minors) / M;
    const double sigma = std::sqrt(expected * (1 - expected) / M);
    rep.add_statistic("minor_frequency", freq);
    rep.add_statistic("expected", expected);
    rep.add_statistic("sigma", sigma);
    rep.check("|minor frequency - q^I0|", std::abs(freq - expected), "<=", sigmas * sigma);
    return rep;
}

ExperimentReport stationary_laws_check(const ModelSpec& spec, double T, const RandomStream& rng,
                                       const StationaryOptions& options) {
    if (!(T > 0)) throw InvalidArgument("stationary_laws_check: T must be positive");
    const DerivedConstants consts = constants(spec);
    const double lambda = consts.lambda;
    const ResidualLaw F(spec, lambda);
    const int d = spec.type_count();

    ExperimentReport rep;
    rep.experiment = "stationary_laws_check";
    rep.spec_summary = spec.describe();
    rep.spec_summary.push_back("T = " + fmt(T));
    rep.columns = {"attempt", "accepted", "births", "residuals"};

    std::vector<double> ages;
    std::vector<std::vector<double>> residuals(static_cast<std::size_t>(d));
    std::vector<double> type_births(static_cast<std::size_t>(d), 0.0);
    int accepted = 0, attempt = 0;
    for (; accepted < options.runs; ++attempt) {
        if (attempt >= options.max_attempts)
            throw InsufficientOutbreaks("stationary_laws_check: too few surviving runs", accepted);
        RandomStream r = rng.split(static_cast<std::uint64_t>(attempt));
        const BranchingRealization real = simulate_forward(spec, StopRule::time(T), 0, r);
        const bool ok = !real.extinct && static_cast<long>(real.births.size()) >= options.min_births;
        if (!ok) {
            rep.records.push_back({static_cast<double>(attempt), 0.0, static_cast<double>(real.births.size()), 0.0});
            continue;
        }
        ++accepted;
        const ResidualAgeLaws laws = residual_and_age_laws(real, T);
        ages.insert(ages.end(), laws.ages.begin(), laws.ages.end());
        for (std::size_t i = 0; i < laws.residuals.size(); ++i)
            residuals[static_cast<std::size_t>(laws.residual_types[i])].push_back(laws.residuals[i]);
        for (int t : laws.age_types) type_births[static_cast<std::size_t>(t)] += 1;
        rep.records.push_back({static_cast<double>(attempt), 1.0, static_cast<double>(real.births.size()),
                               static_cast<double>(laws.residuals.size())});
    }
    rep.add_statistic("accepted_runs", accepted);
    rep.add_statistic("rejected_runs", attempt - accepted);
    rep.add_statistic("lambda", lambda);

    const double ks_age = ks_distance(ages, [&](double a) { return -std::expm1(-lambda * a); });
    rep.check("KS(ages, Exp(lambda))", ks_age, "<=", options.tolerance);
    for (int l = 0; l < d; ++l) {
        if (residuals[static_cast<std::size_t>(l)].empty()) continue;
        const double ks = ks_distance(residuals[static_cast<std::size_t>(l)], [&](double s) { return F(s, l); });
        rep.check(d == 1 ? "KS(residuals, F)" : "KS(residuals, F_" + std::to_string(l) + ")", ks, "<=", options.tolerance);
    }
    if (d > 1 && spec.kind() == ModelKind::Multitype) {
        const double total = std::accumulate(type_births.begin(), type_births.end(), 0.0);
        for (int l = 0; l < d; ++l)
            rep.check("|birth fraction - zeta| type " + std::to_string(l),
                      std::abs(type_births[static_cast<std::size_t>(l)] / total - consts.zeta(l)), "<=",
                      options.fraction_tolerance);
    }
    if (spec.is_single_type()) {
        rep.check("|F(0)|", std::abs(F(0.0)), "<=", options.identity_tolerance);
        boost::math::quadrature::exp_sinh<double> integrator;
        const double integral =
            integrator.integrate(
                [&](double s) {
                    const double w = lambda * std::exp(-lambda * s);
                    return w > 0 ? w * F(s) : 0.0;
                },
                0.0,
                                 std::numeric_limits<double>::infinity(), 1e-13);
        const double target = consts.m_star1 / (spec.single_mean() - 1.0);
        rep.add_statistic("residual_transform", integral);
        rep.add_statistic("residual_transform_target", target);
        rep.check("|int lambda e^{-lambda s} F(s) ds - m*/(mu-1)|", std::abs(integral - target), "<=",
                  options.identity_tolerance);
    }
    return rep;
}

ExperimentReport curve_cross_validation(const ModelSpec& spec, const RandomStream& rng,
                                        const CrossValidationOptions& options) {
    const DerivedConstants consts = constants(spec);
    const Grid grid;
    const LimitCurve curve = solve_s_hat(spec, consts, grid);
    const double T = default_horizon(spec, consts.lambda, options.growth);

    ExperimentReport rep;
    rep.experiment = "curve_cross_validation";
    rep.spec_summary = spec.describe();
    rep.spec_summary.push_back("samples = " + std::to_string(options.samples));
    rep.spec_summary.push_back("horizon = " + fmt(T));
    rep.columns = {"type", "sup_distance", "w_hat_mean", "w_hat_se", "expected_mean"};
    const auto per_type = parallel_map(static_cast<std::size_t>(spec.type_count()), [&](std::size_t l) {
        RandomStream r = rng.split(l);
        return sample_W(spec, Direction::Backward, consts.lambda, T, options.samples, r, static_cast<int>(l));
    });
    for (int l = 0; l < spec.type_count(); ++l) {
        const auto& samples = per_type[static_cast<std::size_t>(l)];
        const auto mc = s_hat_monte_carlo(samples, consts.m_star2, grid);
        double sup = 0;
        for (std::size_t i = 0; i < mc.size(); ++i)
            sup = std::max(sup, std::abs(mc[i] - curve.values[static_cast<std::size_t>(l)][i]));
        double sum = 0, sum2 = 0;
        for (const auto& s : samples) {
            sum += s.value;
            sum2 += s.value * s.value;
        }
        const double n = static_cast<double>(samples.size());
        const double mean = sum / n;
        const double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / (n - 1));
        const double expected = consts.w_hat_mean(l);
        rep.records.push_back({static_cast<double>(l), sup, mean, se, expected});
        const std::string tag = spec.type_count() == 1 ? "" : " type " + std::to_string(l);
        rep.check("sup |s_hat - Monte Carlo|" + tag, sup, "<=", options.tolerance);
        rep.check("|mean W-hat - E W-hat| / se" + tag, std::abs(mean - expected) / se, "<=", options.mean_sigmas);
    }
    return rep;
}

} // namespace epicurve
