#include "epicurve/branching.hpp"
#include "epicurve/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace epicurve {

namespace {

struct Event {
    double time;
    std::uint64_t seq;
    int type;
    std::int64_t parent;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
};

// Children of one backward individual: offspring delays are independent of one another.
std::vector<Contact> backward_children(const ModelSpec& spec, int type, bool root, RandomStream& rng) {
    std::vector<Contact> out;
    switch (spec.kind()) {
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        for (int k = 0; k < m.types(); ++k) {
            const double mean = m.means(k, type);
            if (mean <= 0) continue;
            const long n = OffspringLaw::poisson(mean).sample(rng);
            for (long i = 0; i < n; ++i) out.push_back({m.G(k, type).sample(rng), k});
        }
        break;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        const int slots = root ? type + 1 : type;
        for (int r = 0; r < slots; ++r) {
            // the neighbour on this half-edge is a potential infector of type k
            double u = rng.uniform01() * c.mean_degree();
            int k = 0;
            for (; k < c.max_degree() - 1; ++k) {
                u -= (k + 1) * c.degree_probs[static_cast<std::size_t>(k)];
                if (u < 0) break;
            }
            const double v = c.G(k, type).sample(rng);
            const double t = c.Phi(k).sample(rng);
            if (v < t) out.push_back({v, k});
        }
        break;
    }
    default: {
        const long n = OffspringLaw::poisson(spec.single_mean()).sample(rng);
        const TimeDistribution g = spec.single_intensity();
        out.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) out.push_back({g.sample(rng), 0});
        break;
    }
    }
    return out;
}

std::vector<Contact> forward_children(const ModelSpec& spec, int type, bool root, RandomStream& rng) {
    if (spec.kind() == ModelKind::Configuration)
        return sample_configuration_history(spec.as<Configuration>(), type, root ? type + 1 : type, rng).contacts;
    return sample_history(spec, type, rng).contacts;
}

class Engine {
public:
    Engine(const ModelSpec& spec, Direction dir, RandomStream& rng, const BranchingOptions& opt)
        : spec_(spec), dir_(dir), rng_(rng), opt_(opt) {}

    // Runs until the stop rule; on_birth(time, type, parent, id) is called for each birth.
    template <class OnBirth>
    void run(StopRule stop, int initial_type, OnBirth&& on_birth) {
        if (initial_type < 0 || initial_type >= spec_.type_count())
            throw InvalidArgument("branching: invalid initial type");
        std::int64_t born = 0;
        queue_.push({0.0, seq_++, initial_type, -1});
        while (!queue_.empty()) {
            const Event e = queue_.top();
            if (!stop.by_count && e.time > stop.horizon) break;
            queue_.pop();
            const std::int64_t id = born++;
            on_birth(e.time, e.type, e.parent, id);
            if (born > opt_.population_cap)
                throw PopulationCapExceeded("branching: population cap of " + std::to_string(opt_.population_cap) +
                                            " births exceeded");
            const auto children = dir_ == Direction::Forward ? forward_children(spec_, e.type, id == 0, rng_)
                                                             : backward_children(spec_, e.type, id == 0, rng_);
            for (const auto& c : children) queue_.push({e.time + c.time, seq_++, c.target_type, id});
            last_time_ = e.time;
            if (stop.by_count && born >= stop.births) break;
        }
        horizon_ = stop.by_count ? last_time_ : stop.horizon;
    }

    bool extinct() const { return queue_.empty(); }
    double horizon() const { return horizon_; }

    std::vector<PendingBirth> drain() {
        std::vector<PendingBirth> out;
        out.reserve(queue_.size());
        while (!queue_.empty()) {
            const Event e = queue_.top();
            queue_.pop();
            out.push_back({e.time, e.type, e.parent});
        }
        return out;
    }

private:
    const ModelSpec& spec_;
    Direction dir_;
    RandomStream& rng_;
    const BranchingOptions& opt_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::uint64_t seq_ = 0;
    double last_time_ = 0;
    double horizon_ = 0;
};

BranchingRealization realize(const ModelSpec& spec, Direction dir, StopRule stop, int initial_type,
                             RandomStream& rng, const BranchingOptions& options) {
    BranchingRealization out;
    Engine engine(spec, dir, rng, options);
    engine.run(stop, initial_type, [&](double t, int type, std::int64_t parent, std::int64_t) {
        out.births.push_back({t, type, parent});
    });
    out.extinct = engine.extinct();
    out.horizon = engine.horizon();
    out.pending = engine.drain();
    return out;
}

double lattice_span(const ModelSpec& spec) {
    if (spec.kind() == ModelKind::ReedFrost) return 1.0;
    if (spec.kind() == ModelKind::CountTimes && spec.as<CountTimes>().times.is_lattice())
        return spec.as<CountTimes>().times.param1();
    return 0.0;
}

double round_to_lattice(const ModelSpec& spec, double T) {
    const double span = lattice_span(spec);
    if (span <= 0) return T;
    return std::ceil(T / span - 1e-12) * span;
}

} // namespace

BranchingRealization simulate_forward(const ModelSpec& spec, StopRule stop, int initial_type, RandomStream& rng,
                                      const BranchingOptions& options) {
    if (stop.by_count ? stop.births <= 0 : !(stop.horizon > 0))
        throw InvalidArgument("simulate_forward: stop criterion must be positive");
    return realize(spec, Direction::Forward, stop, initial_type, rng, options);
}

BranchingRealization simulate_backward(const ModelSpec& spec, double T, int initial_type, RandomStream& rng,
                                       const BranchingOptions& options) {
    if (!(T > 0)) throw InvalidArgument("simulate_backward: horizon must be positive");
    return realize(spec, Direction::Backward, StopRule::time(T), initial_type, rng, options);
}

double default_horizon(const ModelSpec& spec, double lambda, double growth) {
    if (!(lambda > 0)) throw InvalidArgument("default_horizon: lambda must be positive");
    return round_to_lattice(spec, std::log(growth) / lambda);
}

std::vector<LimitSample> sample_W(const ModelSpec& spec, Direction direction, double lambda, double T, int n,
                                  RandomStream& rng, int initial_type, const BranchingOptions& options) {
    if (!(lambda > 0)) throw InvalidArgument("sample_W: lambda must be positive");
    if (!(T > 0)) throw InvalidArgument("sample_W: horizon must be positive");
    const double horizon = round_to_lattice(spec, T);
    const double scale = std::exp(-lambda * horizon);
    std::vector<LimitSample> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        RandomStream stream = rng.split(static_cast<std::uint64_t>(i));
        Engine engine(spec, direction, stream, options);
        std::int64_t count = 0;
        engine.run(StopRule::time(horizon), initial_type, [&](double, int, std::int64_t, std::int64_t) { ++count; });
        const bool survived = !engine.extinct();
        out.push_back({survived ? scale * static_cast<double>(count) : 0.0, horizon, survived});
    }
    return out;
}

ResidualAgeLaws residual_and_age_laws(const BranchingRealization& r, double t) {
    if (t > r.horizon) throw InvalidArgument("residual_and_age_laws: t beyond the realization horizon");
    if (t < 0) throw InvalidArgument("residual_and_age_laws: t must be nonnegative");
    ResidualAgeLaws out;
    auto parent_born = [&](std::int64_t p) { return p >= 0 && r.births[static_cast<std::size_t>(p)].time <= t; };
    for (const auto& b : r.births) {
        if (b.time <= t) {
            out.ages.push_back(t - b.time);
            out.age_types.push_back(b.type);
        } else if (parent_born(b.parent)) {
            out.residuals.push_back(b.time - t);
            out.residual_types.push_back(b.type);
        }
    }
    for (const auto& p : r.pending)
        if (p.time > t && parent_born(p.parent)) {
            out.residuals.push_back(p.time - t);
            out.residual_types.push_back(p.type);
        }
    return out;
}

} // namespace epicurve
