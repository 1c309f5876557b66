#include <doctest.h>

#include "epicurve/errors.hpp"
#include "epicurve/harness.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

using namespace epicurve;
using doctest::Approx;

TEST_CASE("order statistics") {
    CHECK(median({3, 1, 2}) == 2);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK(quantile({0, 10}, 0.25) == Approx(2.5));
    CHECK(quantile({5, 1, 3}, 0.0) == 1);
    CHECK(quantile({5, 1, 3}, 1.0) == 5);
    CHECK(std::isnan(median({})));
}

TEST_CASE("ks distance against a uniform cdf") {
    auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_distance({0.5}, uniform) == Approx(0.5));
    CHECK(ks_distance({0.25, 0.75}, uniform) == Approx(0.25));
    RandomStream rng(1);
    std::vector<double> x(20'000);
    for (auto& v : x) v = rng.uniform01();
    CHECK(ks_distance(x, uniform) < 1.63 / std::sqrt(20'000.0));
}

TEST_CASE("parallel map keeps index order and rethrows") {
    const auto sq = parallel_map(1000, [](std::size_t i) { return static_cast<double>(i * i); }, 4);
    for (std::size_t i = 0; i < sq.size(); ++i) CHECK(sq[i] == static_cast<double>(i * i));
    CHECK_THROWS_AS(parallel_map(
                        100,
                        [](std::size_t i) -> int {
                            if (i == 37) throw std::runtime_error("boom");
                            return 0;
                        },
                        3),
                    std::runtime_error);
    CHECK(parallel_map(0, [](std::size_t) { return 1; }).empty());
}

TEST_CASE("report checks and serialization") {
    ExperimentReport r;
    r.experiment = "demo";
    r.spec_summary = {"kind = demo"};
    r.columns = {"a", "b"};
    r.records = {{1, 0.5}, {2, 0.25}};
    r.add_statistic("mean", 0.375);
    CHECK(r.check("small", 0.1, "<=", 0.1).pass);
    CHECK_FALSE(r.check("strict", 0.1, "<", 0.1).pass);
    CHECK(r.check("large", 3, ">=", 2).pass);
    CHECK_FALSE(r.passed());
    CHECK_FALSE(r.check("nan", NAN, "<=", 1).pass);
    std::ostringstream csv, sum;
    r.write_csv(csv);
    r.write_summary(sum);
    CHECK(csv.str().find("a,b\n1,0.5\n2,0.25\n") != std::string::npos);
    CHECK(sum.str().find("mean = 0.375") != std::string::npos);
    CHECK(sum.str().find("PASS small") != std::string::npos);
    CHECK(sum.str().find("FAIL strict") != std::string::npos);
    CHECK(sum.str().find("result = FAIL") != std::string::npos);
}

TEST_CASE("experiment parameter validation") {
    const RandomStream rng(1);
    CHECK_THROWS_AS(curve_convergence(ModelSpec::markov_sir(2, 1), {1000}, 10, rng), InvalidArgument);
    CHECK_THROWS_AS(curve_convergence(ModelSpec::markov_sir(0.5, 1), {1000}, 100, rng), SubcriticalError);
    CHECK_THROWS_AS(stationary_laws_check(ModelSpec::markov_sir(2, 1), 0.0, rng), InvalidArgument);
    CHECK_THROWS_AS(extinction_check(ModelSpec::markov_sir(2, 1), 100, 10, 200, rng), InvalidArgument);
}

TEST_CASE("extinction check on a small population") {
    const RandomStream rng(5);
    const auto r = extinction_check(ModelSpec::markov_sir(2, 1), 2000, 400, 1, rng);
    CHECK(r.records.size() == 400);
    CHECK(r.passed());
}

TEST_CASE("experiments are reproducible") {
    const RandomStream rng(77);
    CrossValidationOptions opt;
    opt.samples = 500;
    opt.tolerance = 0.05;
    const auto a = curve_cross_validation(ModelSpec::markov_sir(2, 1), rng, opt);
    const auto b = curve_cross_validation(ModelSpec::markov_sir(2, 1), rng, opt);
    std::ostringstream sa, sb;
    a.write_summary(sa);
    a.write_csv(sa);
    b.write_summary(sb);
    b.write_csv(sb);
    CHECK(sa.str() == sb.str());
}

TEST_CASE("reed-frost check drops replicates whose limit variable is zero") {
    const RandomStream rng(3);
    const auto r = reed_frost_check(2, {10'000}, {40}, rng);
    double excluded = -1;
    for (const auto& [k, v] : r.statistics)
        if (k.find("excluded") != std::string::npos) excluded = v;
    // excluded replicates leave a single row with W = 0, kept ones one row per generation offset
    std::size_t zero = 0;
    std::set<double> replicates;
    for (const auto& row : r.records) {
        zero += row[4] == 0.0;
        replicates.insert(row[1]);
    }
    CHECK(replicates.size() == 40);
    CHECK(r.records.size() == zero + 7 * (40 - zero));
    CHECK(excluded == static_cast<double>(zero));
    CHECK(zero > 0);
}
