#include <doctest.h>

#include "epicurve/branching.hpp"
#include "epicurve/curves.hpp"
#include "epicurve/epidemic.hpp"
#include "epicurve/errors.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

using namespace epicurve;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_invariants(const Trajectory& t) {
    REQUIRE(t.infections() <= t.N);
    CHECK(t.N == std::accumulate(t.type_sizes.begin(), t.type_sizes.end(), 0L));
    CHECK(t.susceptible_total(-1e-12) == t.N);
    CHECK(t.susceptible_total(0.0) == t.N - t.initial);
    long prev = t.N;
    for (const auto& e : t.events) {
        const long s = t.susceptible_total(e.time);
        CHECK(s <= prev);
        prev = s;
    }
    for (std::size_t i = 1; i < t.events.size(); ++i) CHECK(t.events[i].time >= t.events[i - 1].time);
    CHECK(t.major == (t.infections() >= t.threshold));
    CHECK(t.major == std::isfinite(t.tau_N));
}

ModelSpec symmetric_two_type() {
    Eigen::MatrixXd m(2, 2);
    m << 1.5, 0.5, 0.5, 1.5;
    return ModelSpec::multitype({0.5, 0.5}, m, std::vector<TimeDistribution>(4, TimeDistribution::exponential(1)));
}

} // namespace

TEST_CASE("property: trajectory invariants across models and seeds") {
    const std::vector<ModelSpec> specs{ModelSpec::markov_sir(2, 1), ModelSpec::reed_frost(2), symmetric_two_type(),
                                       ModelSpec::volz({0.2, 0.3, 0.3, 0.2}, 1, 0.5),
                                       ModelSpec::count_times(OffspringLaw::poisson(2), TimeDistribution::uniform(0, 2))};
    for (const auto& spec : specs)
        for (std::uint64_t seed = 0; seed < 15; ++seed) {
            RandomStream rng(seed);
            check_invariants(simulate(spec, 2000, 1, rng));
        }
}

TEST_CASE("determinism") {
    const auto spec = ModelSpec::volz({0, 0, 1}, 1, 0.5);
    RandomStream a(77), b(77);
    const auto t1 = simulate_config(spec, 5000, a);
    const auto t2 = simulate_config(spec, 5000, b);
    REQUIRE(t1.events.size() == t2.events.size());
    for (std::size_t i = 0; i < t1.events.size(); ++i) {
        CHECK(t1.events[i].time == t2.events[i].time);
        CHECK(t1.events[i].type == t2.events[i].type);
    }
}

TEST_CASE("no contacts means no spread") {
    const auto spec = ModelSpec::count_times(OffspringLaw::fixed(0), TimeDistribution::exponential(1));
    RandomStream rng(1);
    const auto t = simulate_single(spec, 100, 99, rng);
    CHECK(t.infections() == 99);
    CHECK(t.susceptible_total(kInf) == 1);
}

TEST_CASE("instant removal on a network gives no secondary cases") {
    const int K = 3;
    const auto spec = ModelSpec::configuration({0.3, 0.3, 0.4},
                                               std::vector<TimeDistribution>(K * K, TimeDistribution::exponential(1)),
                                               std::vector<TimeDistribution>(K, TimeDistribution::point_mass(0)));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RandomStream rng(seed);
        CHECK(simulate_config(spec, 1000, rng).infections() == 1);
    }
}

TEST_CASE("parameter checks") {
    RandomStream rng(1);
    CHECK_THROWS_AS(simulate_reed_frost(2.0, 2, 1, rng), InvalidArgument); // mu / N >= 1
    CHECK_THROWS_AS(simulate_reed_frost(0.5, 100, 1, rng), InvalidArgument);
    CHECK_THROWS_AS(simulate_single(ModelSpec::markov_sir(2, 1), 10, 10, rng), InvalidArgument);
    CHECK_THROWS_AS(simulate_single(ModelSpec::markov_sir(2, 1), 10, 0, rng), InvalidArgument);
    CHECK_THROWS_AS(simulate_multitype(ModelSpec::markov_sir(2, 1), 10, 0, rng), InvalidArgument);
}

TEST_CASE("one-type multitype runs reproduce the single-type simulator bit for bit") {
    Eigen::MatrixXd m(1, 1);
    m << 2.0;
    const auto multi = ModelSpec::multitype({1.0}, m, {TimeDistribution::gamma(2, 2)});
    const auto single = ModelSpec::count_times(OffspringLaw::poisson(2.0), TimeDistribution::gamma(2, 2));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RandomStream a(seed), b(seed);
        const auto t1 = simulate_multitype(multi, 3000, 0, a);
        const auto t2 = simulate_single(single, 3000, 1, b);
        REQUIRE(t1.events.size() == t2.events.size());
        for (std::size_t i = 0; i < t1.events.size(); ++i) CHECK(t1.events[i].time == t2.events[i].time);
        CHECK(t1.ghosts == t2.ghosts);
    }
}

TEST_CASE("property: largest-remainder apportionment") {
    RandomStream rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(1 + rng.below(6));
        for (auto& x : p) x = rng.uniform01() + 1e-3;
        const double t = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p) x /= t;
        const long N = 1 + static_cast<long>(rng.below(100'000));
        const auto n = apportion(N, p);
        CHECK(std::accumulate(n.begin(), n.end(), 0L) == N);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(n[i] >= static_cast<long>(std::floor(N * p[i] - 1e-9)));
            CHECK(n[i] <= static_cast<long>(std::ceil(N * p[i] + 1e-9)));
        }
    }
}

TEST_CASE("property: configuration sizes have an even half-edge total") {
    RandomStream rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(4);
        for (auto& x : p) x = rng.uniform01();
        const double t = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& x : p) x /= t;
        const long N = 10 + static_cast<long>(rng.below(10'000));
        int padded = -2;
        const auto n = configuration_sizes(N, p, &padded);
        long M = 0;
        for (std::size_t k = 0; k < n.size(); ++k) M += static_cast<long>(k + 1) * n[k];
        CHECK(M % 2 == 0);
        CHECK(std::accumulate(n.begin(), n.end(), 0L) == N + (padded >= 0 ? 1 : 0));
    }
    int padded = -2;
    const auto odd = configuration_sizes(7, {0, 0, 1}, &padded);
    CHECK(odd[2] == 8);
    CHECK(padded == 2);
}

TEST_CASE("alignment is monotone, bounded and reaches the final size") {
    const auto spec = ModelSpec::markov_sir(2, 1);
    RandomStream rng(40);
    std::vector<double> u;
    for (double x = -20; x <= 30; x += 0.1) u.push_back(x);
    int majors = 0;
    for (std::uint64_t i = 0; majors < 5; ++i) {
        RandomStream r = rng.split(i);
        const auto t = simulate_single(spec, 20'000, 1, r);
        if (!t.major) {
            CHECK_THROWS_AS(align_curve(t, 1.0, u), InvalidArgument);
            continue;
        }
        ++majors;
        const auto a = align_curve(t, 1.0, u)[0];
        for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k] <= a[k - 1]);
        for (double v : a) CHECK((v >= 0 && v <= 1));
        CHECK(a.front() >= 1 - 1.0 / std::sqrt(20'000.0));
        CHECK(a.back() == Approx(static_cast<double>(t.susceptible_total(kInf)) / t.N));
    }
}

TEST_CASE("minor outbreak frequency and final size for markov SIR") {
    const auto spec = ModelSpec::markov_sir(2, 1);
    RandomStream rng(41);
    int minor = 0;
    double final_sum = 0;
    const int reps = 400;
    for (int i = 0; i < reps; ++i) {
        RandomStream r = rng.split(static_cast<std::uint64_t>(i));
        const auto t = simulate_single(spec, 20'000, 1, r);
        if (t.major)
            final_sum += static_cast<double>(t.susceptible_total(kInf)) / t.N;
        else
            ++minor;
    }
    CHECK(std::abs(minor / static_cast<double>(reps) - 0.5) <= 3 * std::sqrt(0.25 / reps));
    CHECK(final_sum / (reps - minor) == Approx(oracle::final_size(2)).epsilon(0.1));
}

TEST_CASE("reed-frost early generations follow the Poisson branching law") {
    // generation-one sizes from one initial case: Bin(N - 1, mu / N) ~ Po(mu)
    RandomStream rng(42);
    std::vector<int> counts(8, 0);
    const int reps = 4000;
    for (int i = 0; i < reps; ++i) {
        RandomStream r = rng.split(static_cast<std::uint64_t>(i));
        const auto t = simulate_reed_frost(2.0, 100'000, 1, r);
        const auto z1 = std::count_if(t.events.begin(), t.events.end(), [](const InfectionEvent& e) { return e.time == 1.0; });
        ++counts[std::min<std::size_t>(static_cast<std::size_t>(z1), 7)];
    }
    double chi2 = 0, tail = 1;
    for (int k = 0; k < 7; ++k) {
        const double p = std::exp(-2.0) * std::pow(2.0, k) / std::tgamma(k + 1.0);
        tail -= p;
        chi2 += (counts[k] - reps * p) * (counts[k] - reps * p) / (reps * p);
    }
    chi2 += (counts[7] - reps * tail) * (counts[7] - reps * tail) / (reps * tail);
    CHECK(chi2 < 18.48); // 7 degrees of freedom, 1% level
}

TEST_CASE("early infection times match the forward branching process") {
    // time of the 10th infection, epidemic against branching process, conditional on reaching it
    const auto spec = ModelSpec::markov_sir(2, 1);
    RandomStream rng(43);
    std::vector<double> epi, bp;
    for (std::uint64_t i = 0; epi.size() < 1000; ++i) {
        RandomStream r = rng.split(i);
        const auto t = simulate_single(spec, 100'000, 1, r);
        if (t.infections() >= 10) epi.push_back(t.events[9].time);
    }
    RandomStream rng2(44);
    for (std::uint64_t i = 0; bp.size() < 1000; ++i) {
        RandomStream r = rng2.split(i);
        const auto real = simulate_forward(spec, StopRule::count(10), 0, r);
        if (real.births.size() == 10) bp.push_back(real.births[9].time);
    }
    CHECK(oracle::ks_two_sample(epi, bp) < oracle::ks_two_sample_critical_1pct(epi.size(), bp.size()));
}

TEST_CASE("two-type symmetric epidemic") {
    const auto spec = symmetric_two_type();
    RandomStream rng(45);
    double diff = 0, total = 0;
    int majors = 0;
    for (std::uint64_t i = 0; majors < 40; ++i) {
        RandomStream r = rng.split(i);
        const auto t = simulate_multitype(spec, 20'000, 0, r);
        if (!t.major) continue;
        ++majors;
        const double s0 = static_cast<double>(t.final_susceptible(0)) / t.type_sizes[0];
        const double s1 = static_cast<double>(t.final_susceptible(1)) / t.type_sizes[1];
        diff += s0 - s1;
        total += static_cast<double>(t.susceptible_total(kInf)) / t.N;
    }
    CHECK(std::abs(diff / majors) <= 0.02);
    CHECK(total / majors == Approx(oracle::final_size(2)).epsilon(0.1));
}

TEST_CASE("volz network: final size and early growth") {
    const auto spec = ModelSpec::volz({0, 0, 1}, 1.0, 0.5);
    RandomStream rng(46);
    double fin = 0, growth = 0;
    int majors = 0;
    long loops = 0;
    for (std::uint64_t i = 0; majors < 20; ++i) {
        RandomStream r = rng.split(i);
        const auto t = simulate_config(spec, 100'000, r);
        loops += t.self_loops + t.multi_edges;
        if (!t.major) continue;
        ++majors;
        fin += static_cast<double>(t.susceptible_total(kInf)) / t.N;
        growth += growth_rate_estimate(t, 10, t.threshold);
    }
    CHECK(fin / majors == Approx(std::pow(oracle::kVolzRegular3QTilde, 3)).epsilon(0.16));
    CHECK(growth / majors == Approx(oracle::kVolzRegular3Lambda).epsilon(0.10));
    CHECK(loops < 100); // self-loops and multi-edges stay O(1) per run
}

TEST_CASE("without-replacement contacts never target the infective itself") {
    // with N = 2 every contact of the index case hits the other label, so it is infected
    // exactly when at least one contact precedes removal: probability beta / (beta + gamma)
    const auto spec = ModelSpec::markov_sir(3, 1);
    EpidemicOptions opt;
    opt.without_replacement = true;
    RandomStream rng(47);
    const int reps = 20'000;
    int both = 0, both_with = 0;
    for (int i = 0; i < reps; ++i) {
        RandomStream r = rng.split(static_cast<std::uint64_t>(i));
        both += simulate_single(spec, 2, 1, r, opt).infections() == 2;
        RandomStream r2 = rng.split(static_cast<std::uint64_t>(i));
        both_with += simulate_single(spec, 2, 1, r2).infections() == 2;
    }
    const double sigma = std::sqrt(0.75 * 0.25 / reps);
    CHECK(std::abs(both / static_cast<double>(reps) - 0.75) <= 4 * sigma);
    // with replacement half the contacts land on the infective itself: (3/8) / (3/8 + 1/4) = 3/5
    CHECK(std::abs(both_with / static_cast<double>(reps) - 0.6) <= 4 * sigma);
}

TEST_CASE("csv output") {
    RandomStream rng(48);
    const auto t = simulate_single(ModelSpec::markov_sir(2, 1), 500, 2, rng);
    std::ostringstream out;
    write_trajectory_csv(out, t, 48);
    const std::string s = out.str();
    CHECK(s.find("# N = 500") != std::string::npos);
    CHECK(s.find("# seed = 48") != std::string::npos);
    CHECK(s.find("# tau_N = ") != std::string::npos);
    CHECK(s.find("# major = ") != std::string::npos);
    CHECK(s.find("time,type,cum_infections,S_0\n") != std::string::npos);
    const auto lines = std::count(s.begin(), s.end(), '\n');
    CHECK(lines == t.infections() + 7);
}
