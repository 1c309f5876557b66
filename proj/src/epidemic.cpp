#include "epicurve/epidemic.hpp"
#include "epicurve/errors.hpp"
#include "epicurve/format.hpp"

#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <queue>

namespace epicurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Scheduled {
    double time;
    std::uint64_t seq;
    int target_type;
    long target;      ///< vertex id (configuration) or -1
    int source_type;
    long source;
};

struct Later {
    bool operator()(const Scheduled& a, const Scheduled& b) const {
        return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
};

using Queue = std::priority_queue<Scheduled, std::vector<Scheduled>, Later>;

void finish(Trajectory& t, double factor) {
    t.N = std::accumulate(t.type_sizes.begin(), t.type_sizes.end(), 0L);
    t.threshold = major_threshold(t.N, factor);
    t.major = t.infections() >= t.threshold;
    t.tau_N = t.major ? t.events[static_cast<std::size_t>(t.threshold - 1)].time : kInf;
    t.index();
}

// Random labelling within types: a type-k contact hits a uniform label among the N_k.
Trajectory run_labeled(const ModelSpec& spec, std::vector<long> sizes, int initial_type, long I0, RandomStream& rng,
                       const EpidemicOptions& opt) {
    Trajectory traj;
    traj.type_sizes = sizes;
    traj.initial = I0;
    std::vector<std::vector<char>> infected(sizes.size());
    for (std::size_t l = 0; l < sizes.size(); ++l) infected[l].assign(static_cast<std::size_t>(sizes[l]), 0);

    Queue queue;
    std::uint64_t seq = 0;
    auto infect = [&](double t, int type, long label) {
        infected[static_cast<std::size_t>(type)][static_cast<std::size_t>(label)] = 1;
        traj.events.push_back({t, type});
        for (const auto& c : sample_history(spec, type, rng).contacts)
            queue.push({t + c.time, seq++, c.target_type, -1, type, label});
    };
    for (long i = 0; i < I0; ++i) infect(0.0, initial_type, i);

    while (!queue.empty()) {
        const Scheduled e = queue.top();
        queue.pop();
        const long n = sizes[static_cast<std::size_t>(e.target_type)];
        long label;
        if (opt.without_replacement && e.target_type == e.source_type) {
            if (n < 2) continue;
            label = static_cast<long>(rng.below(static_cast<std::uint64_t>(n - 1)));
            if (label >= e.source) ++label;
        } else {
            if (n < 1) continue;
            label = static_cast<long>(rng.below(static_cast<std::uint64_t>(n)));
        }
        if (infected[static_cast<std::size_t>(e.target_type)][static_cast<std::size_t>(label)]) {
            ++traj.ghosts;
            continue;
        }
        infect(e.time, e.target_type, label);
    }
    finish(traj, opt.threshold_factor);
    return traj;
}

} // namespace

long major_threshold(long N, double factor) {
    if (!(factor > 0)) throw InvalidArgument("major_threshold: factor must be positive");
    return std::max(1L, static_cast<long>(std::floor(factor * std::sqrt(static_cast<double>(N)))));
}

void Trajectory::index() {
    type_times_.assign(type_sizes.size(), {});
    for (const auto& e : events) type_times_[static_cast<std::size_t>(e.type)].push_back(e.time);
}

long Trajectory::susceptible(int type, double t) const {
    const auto& times = type_times_.at(static_cast<std::size_t>(type));
    const auto k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    return type_sizes[static_cast<std::size_t>(type)] - static_cast<long>(k);
}

long Trajectory::susceptible_total(double t) const {
    long s = 0;
    for (int l = 0; l < types(); ++l) s += susceptible(l, t);
    return s;
}

long Trajectory::final_susceptible(int type) const {
    return type_sizes.at(static_cast<std::size_t>(type)) -
           static_cast<long>(type_times_.at(static_cast<std::size_t>(type)).size());
}

std::vector<long> Trajectory::infected_by(double t) const {
    std::vector<long> out(type_sizes.size());
    for (int l = 0; l < types(); ++l) out[static_cast<std::size_t>(l)] = type_sizes[static_cast<std::size_t>(l)] - susceptible(l, t);
    return out;
}

Trajectory simulate_single(const ModelSpec& spec, long N, long I0, RandomStream& rng, const EpidemicOptions& options) {
    if (!spec.is_single_type()) throw InvalidArgument("simulate_single: single-type model required");
    if (spec.kind() == ModelKind::ReedFrost)
        return simulate_reed_frost(spec.as<ReedFrost>().mu, N, I0, rng, options);
    if (N < 2) throw InvalidArgument("simulate_single: N must be at least 2");
    if (I0 < 1 || I0 >= N) throw InvalidArgument("simulate_single: need 1 <= I0 < N");
    return run_labeled(spec, {N}, 0, I0, rng, options);
}

Trajectory simulate_reed_frost(double mu, long N, long I0, RandomStream& rng, const EpidemicOptions& options) {
    if (!(mu > 1)) throw InvalidArgument("simulate_reed_frost: mu must exceed 1");
    if (N < 2) throw InvalidArgument("simulate_reed_frost: N must be at least 2");
    if (I0 < 1 || I0 >= N) throw InvalidArgument("simulate_reed_frost: need 1 <= I0 < N");
    const double p = mu / static_cast<double>(N);
    if (p >= 1) throw InvalidArgument("simulate_reed_frost: mu / N must be below 1");
    Trajectory traj;
    traj.type_sizes = {N};
    traj.initial = I0;
    traj.generations = true;
    traj.events.assign(static_cast<std::size_t>(I0), {0.0, 0});
    long S = N - I0, I = I0;
    const double log_escape = std::log1p(-p);
    for (int g = 1; I > 0 && S > 0; ++g) {
        const double hit = -std::expm1(static_cast<double>(I) * log_escape);
        const long fresh = boost::random::binomial_distribution<long, double>(S, hit)(rng);
        traj.events.insert(traj.events.end(), static_cast<std::size_t>(fresh), InfectionEvent{static_cast<double>(g), 0});
        S -= fresh;
        I = fresh;
    }
    finish(traj, options.threshold_factor);
    return traj;
}

std::vector<long> apportion(long N, const std::vector<double>& proportions) {
    const double total = std::accumulate(proportions.begin(), proportions.end(), 0.0);
    if (!(total > 0)) throw InvalidArgument("apportion: proportions must have positive sum");
    std::vector<long> out(proportions.size());
    std::vector<double> rem(proportions.size());
    long assigned = 0;
    for (std::size_t i = 0; i < proportions.size(); ++i) {
        const double x = static_cast<double>(N) * proportions[i] / total;
        out[i] = static_cast<long>(std::floor(x));
        rem[i] = x - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<std::size_t> order(proportions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (long r = 0; r < N - assigned; ++r) ++out[order[static_cast<std::size_t>(r) % order.size()]];
    return out;
}

Trajectory simulate_multitype(const ModelSpec& spec, long N, int initial_type, RandomStream& rng,
                              const EpidemicOptions& options) {
    if (spec.kind() != ModelKind::Multitype) throw InvalidArgument("simulate_multitype: multitype model required");
    const auto& m = spec.as<Multitype>();
    if (initial_type < 0 || initial_type >= m.types()) throw InvalidArgument("simulate_multitype: invalid initial type");
    const auto sizes = apportion(N, m.proportions);
    if (sizes[static_cast<std::size_t>(initial_type)] < 2)
        throw InvalidArgument("simulate_multitype: initial type needs at least 2 members");
    return run_labeled(spec, sizes, initial_type, 1, rng, options);
}

std::vector<long> configuration_sizes(long N, const std::vector<double>& degree_probs, int* padded_type) {
    auto sizes = apportion(N, degree_probs);
    const std::size_t K = sizes.size();
    if (padded_type) *padded_type = -1;
    long M = 0;
    for (std::size_t k = 0; k < K; ++k) M += static_cast<long>(k + 1) * sizes[k];
    if (M % 2 == 0) return sizes;
    // swap one vertex between classes of opposite degree parity, staying within floor/ceil
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b) {
            if ((a + b) % 2 == 0) continue;
            const double xa = static_cast<double>(N) * degree_probs[a], xb = static_cast<double>(N) * degree_probs[b];
            const bool a_down = static_cast<double>(sizes[a]) > xa && static_cast<double>(sizes[a] - 1) >= std::floor(xa);
            const bool b_up = static_cast<double>(sizes[b]) < xb && static_cast<double>(sizes[b] + 1) <= std::ceil(xb);
            if (a_down && b_up) {
                --sizes[a];
                ++sizes[b];
                return sizes;
            }
        }
    // otherwise add one vertex to the most common odd-degree class
    std::size_t best = K;
    for (std::size_t k = 0; k < K; k += 2)
        if (degree_probs[k] > 0 && (best == K || degree_probs[k] > degree_probs[best])) best = k;
    if (best == K) throw InvalidArgument("configuration_sizes: infeasible degree sequence");
    ++sizes[best];
    if (padded_type) *padded_type = static_cast<int>(best);
    return sizes;
}

Trajectory simulate_config(const ModelSpec& spec, long N, RandomStream& rng, const EpidemicOptions& options) {
    if (spec.kind() != ModelKind::Configuration) throw InvalidArgument("simulate_config: configuration model required");
    if (N < 2) throw InvalidArgument("simulate_config: N must be at least 2");
    const auto& cfg = spec.as<Configuration>();
    Trajectory traj;
    traj.type_sizes = configuration_sizes(N, cfg.degree_probs, &traj.padded_type);
    traj.initial = 1;
    const long n = std::accumulate(traj.type_sizes.begin(), traj.type_sizes.end(), 0L);

    // vertices grouped by class; half-edges of vertex v are first_half[v] .. first_half[v] + degree - 1
    std::vector<int> cls(static_cast<std::size_t>(n));
    std::vector<long> first_half(static_cast<std::size_t>(n) + 1);
    {
        long v = 0, h = 0;
        for (int k = 0; k < cfg.max_degree(); ++k)
            for (long i = 0; i < traj.type_sizes[static_cast<std::size_t>(k)]; ++i, ++v) {
                cls[static_cast<std::size_t>(v)] = k;
                first_half[static_cast<std::size_t>(v)] = h;
                h += k + 1;
            }
        first_half[static_cast<std::size_t>(n)] = h;
    }
    const long M = first_half[static_cast<std::size_t>(n)];
    std::vector<long> owner(static_cast<std::size_t>(M));
    for (long v = 0; v < n; ++v)
        for (long h = first_half[static_cast<std::size_t>(v)]; h < first_half[static_cast<std::size_t>(v) + 1]; ++h)
            owner[static_cast<std::size_t>(h)] = v;

    // unused half-edges; a uniform draw from this pool has the law of re-sampling until an unused one comes up
    std::vector<long> pool(static_cast<std::size_t>(M));
    std::vector<long> pos(static_cast<std::size_t>(M));
    std::iota(pool.begin(), pool.end(), 0L);
    std::iota(pos.begin(), pos.end(), 0L);
    std::vector<long> partner(static_cast<std::size_t>(M), -1);
    auto take = [&](long h) {
        const long i = pos[static_cast<std::size_t>(h)];
        const long last = pool.back();
        pool[static_cast<std::size_t>(i)] = last;
        pos[static_cast<std::size_t>(last)] = i;
        pool.pop_back();
        pos[static_cast<std::size_t>(h)] = -1;
    };

    std::vector<char> infected(static_cast<std::size_t>(n), 0);
    Queue queue;
    std::uint64_t seq = 0;
    std::vector<long> neighbours;
    auto develop = [&](double t, long w) {
        infected[static_cast<std::size_t>(w)] = 1;
        const int k = cls[static_cast<std::size_t>(w)];
        traj.events.push_back({t, k});
        const double T = cfg.Phi(k).sample(rng);
        neighbours.clear();
        for (long h = first_half[static_cast<std::size_t>(w)]; h < first_half[static_cast<std::size_t>(w) + 1]; ++h)
            if (partner[static_cast<std::size_t>(h)] >= 0)
                neighbours.push_back(owner[static_cast<std::size_t>(partner[static_cast<std::size_t>(h)])]);
        for (long h = first_half[static_cast<std::size_t>(w)]; h < first_half[static_cast<std::size_t>(w) + 1]; ++h) {
            if (pos[static_cast<std::size_t>(h)] < 0) continue;
            take(h);
            if (pool.empty()) break;
            const long g = pool[static_cast<std::size_t>(rng.below(pool.size()))];
            take(g);
            partner[static_cast<std::size_t>(h)] = g;
            partner[static_cast<std::size_t>(g)] = h;
            const long x = owner[static_cast<std::size_t>(g)];
            if (x == w) {
                ++traj.self_loops;
                continue;
            }
            if (std::find(neighbours.begin(), neighbours.end(), x) != neighbours.end()) ++traj.multi_edges;
            neighbours.push_back(x);
            const int l = cls[static_cast<std::size_t>(x)];
            const double V = cfg.G(k, l).sample(rng);
            if (!(V < T)) continue;
            if (infected[static_cast<std::size_t>(x)]) {
                ++traj.ghosts;
                continue;
            }
            queue.push({t + V, seq++, l, x, k, w});
        }
    };

    develop(0.0, static_cast<long>(rng.below(static_cast<std::uint64_t>(n))));
    while (!queue.empty()) {
        const Scheduled e = queue.top();
        queue.pop();
        if (infected[static_cast<std::size_t>(e.target)]) {
            ++traj.ghosts;
            continue;
        }
        develop(e.time, e.target);
    }
    finish(traj, options.threshold_factor);
    return traj;
}

Trajectory simulate(const ModelSpec& spec, long N, long I0, RandomStream& rng, const EpidemicOptions& options) {
    switch (spec.kind()) {
    case ModelKind::Multitype:
        if (I0 != 1) throw InvalidArgument("simulate: multitype runs start from one infective");
        return simulate_multitype(spec, N, 0, rng, options);
    case ModelKind::Configuration:
        if (I0 != 1) throw InvalidArgument("simulate: configuration runs start from one infective");
        return simulate_config(spec, N, rng, options);
    default:
        return simulate_single(spec, N, I0, rng, options);
    }
}

std::vector<std::vector<double>> align_curve(const Trajectory& traj, double lambda, const std::vector<double>& u) {
    if (!traj.major) throw InvalidArgument("align_curve: minor outbreak has no alignment time");
    if (!(lambda > 0)) throw InvalidArgument("align_curve: lambda must be positive");
    const double shift = 0.5 * std::log(static_cast<double>(traj.N));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(traj.types()), std::vector<double>(u.size()));
    for (int l = 0; l < traj.types(); ++l) {
        const long n = traj.type_sizes[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < u.size(); ++i)
            out[static_cast<std::size_t>(l)][i] =
                n > 0 ? static_cast<double>(traj.susceptible(l, traj.tau_N + (shift + u[i]) / lambda)) / static_cast<double>(n)
                      : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double growth_rate_estimate(const Trajectory& traj, long from, long to) {
    if (from < 1 || to <= from) throw InvalidArgument("growth_rate_estimate: need 1 <= from < to");
    if (traj.infections() < to) throw InvalidArgument("growth_rate_estimate: trajectory too short");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (long c = from; c <= to; ++c) {
        const double x = traj.events[static_cast<std::size_t>(c - 1)].time;
        const double y = std::log(static_cast<double>(c));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    const double dn = static_cast<double>(n);
    return (sxy - sx * sy / dn) / (sxx - sx * sx / dn);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::uint64_t seed,
                          const std::vector<std::string>& header) {
    for (const auto& h : header) out << "# " << h << '\n';
    out << "# N = " << traj.N << '\n';
    out << "# type_sizes =";
    for (long s : traj.type_sizes) out << ' ' << s;
    out << '\n';
    out << "# seed = " << seed << '\n';
    out << "# tau_N = " << fmt(traj.tau_N) << '\n';
    out << "# major = " << (traj.major ? "true" : "false") << '\n';
    out << "# ghosts = " << traj.ghosts << '\n';
    if (traj.self_loops || traj.multi_edges || traj.padded_type >= 0)
        out << "# self_loops = " << traj.self_loops << "\n# multi_edges = " << traj.multi_edges
            << "\n# padded_type = " << traj.padded_type << '\n';
    out << "time,type,cum_infections";
    for (int l = 0; l < traj.types(); ++l) out << ",S_" << l;
    out << '\n';
    std::vector<long> S = traj.type_sizes;
    long cum = 0;
    for (const auto& e : traj.events) {
        --S[static_cast<std::size_t>(e.type)];
        out << fmt(e.time) << ',' << e.type << ',' << ++cum;
        for (long s : S) out << ',' << s;
        out << '\n';
    }
}

} // namespace epicurve
