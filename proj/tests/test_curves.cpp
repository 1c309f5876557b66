#include <doctest.h>

#include "epicurve/branching.hpp"
#include "epicurve/curves.hpp"
#include "epicurve/errors.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

using namespace epicurve;
using doctest::Approx;

namespace {

ModelSpec symmetric_two_type() {
    Eigen::MatrixXd m(2, 2);
    m << 1.5, 0.5, 0.5, 1.5;
    return ModelSpec::multitype({0.5, 0.5}, m, std::vector<TimeDistribution>(4, TimeDistribution::exponential(1)));
}

std::vector<ModelSpec> shipped() {
    return {ModelSpec::markov_sir(2, 1),
            ModelSpec::count_times(OffspringLaw::poisson(2), TimeDistribution::uniform(0, 2)),
            ModelSpec::reed_frost(2),
            symmetric_two_type(),
            ModelSpec::volz({0, 0, 1}, 1, 0.5),
            ModelSpec::volz({0.2, 0.3, 0.3, 0.2}, 1, 0.5)};
}

} // namespace

TEST_CASE("markov SIR constants") {
    const auto c = constants(ModelSpec::markov_sir(2, 1));
    CHECK(c.lambda == Approx(1.0).epsilon(1e-12));
    CHECK(c.m_star1 == Approx(0.5).epsilon(1e-12));
    CHECK(c.R0 == Approx(2.0).epsilon(1e-12));
    CHECK(c.w_hat_mean(0) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("property: markov SIR constants match closed forms") {
    RandomStream rng(1);
    for (int i = 0; i < 40; ++i) {
        const double gamma = 0.2 + 2 * rng.uniform01();
        const double beta = gamma * (1.05 + 3 * rng.uniform01());
        const auto c = constants(ModelSpec::markov_sir(beta, gamma));
        CHECK(c.lambda == Approx(oracle::sir_lambda(beta, gamma)).epsilon(1e-10));
        CHECK(c.m_star1 == Approx(oracle::sir_m_star(beta, gamma)).epsilon(1e-10));
        CHECK(c.R0 == Approx(beta / gamma).epsilon(1e-12));
    }
}

TEST_CASE("symmetric two-type constants") {
    const auto c = constants(symmetric_two_type());
    CHECK(c.lambda == Approx(1.0).epsilon(1e-10));
    CHECK(c.zeta(0) == Approx(0.5).epsilon(1e-10));
    CHECK(c.zeta(1) == Approx(0.5).epsilon(1e-10));
    CHECK(c.eta(0) == Approx(1.0).epsilon(1e-10));
    CHECK(c.eta(1) == Approx(1.0).epsilon(1e-10));
    CHECK(c.m_star1 == Approx(0.5).epsilon(1e-10));
}

TEST_CASE("volz 3-regular constants") {
    const auto c = constants(ModelSpec::volz({0, 0, 1}, 1, 0.5));
    CHECK(c.lambda == Approx(oracle::kVolzRegular3Lambda).epsilon(1e-10));
    CHECK(c.m0 == Approx(oracle::kVolzRegular3M0).epsilon(1e-10));
    CHECK(c.m_star1 == Approx(oracle::kVolzRegular3MStar1).epsilon(1e-10));
    CHECK(c.m_star2 == Approx(oracle::kVolzRegular3MStar2).epsilon(1e-10));
    CHECK(c.m_star1_backward == Approx(c.m_star1).epsilon(1e-12));
    CHECK(c.Z_hat * c.H_hat == Approx(1.0).epsilon(1e-12));
    // per-half-edge boundary slope 1/3, so class l has slope (l + 1) / 3
    for (int l = 0; l < 3; ++l) CHECK(c.boundary(l) == Approx((l + 1) / 3.0).epsilon(1e-10));
}

TEST_CASE("property: volz growth rate and m0 match closed forms") {
    RandomStream rng(2);
    for (int i = 0; i < 30; ++i) {
        std::vector<double> p(5);
        for (auto& x : p) x = rng.uniform01();
        double t = 0;
        for (double x : p) t += x;
        for (auto& x : p) x /= t;
        const double alpha = 0.5 + rng.uniform01(), beta = 0.2 + 0.3 * rng.uniform01();
        const double lam = oracle::volz_lambda(p, alpha, beta);
        const auto spec = ModelSpec::volz(p, alpha, beta);
        if (lam <= 0.05) {
            if (lam < 0) CHECK_THROWS_AS(constants(spec), SubcriticalError);
            continue;
        }
        const auto c = constants(spec);
        CHECK(c.lambda == Approx(lam).epsilon(1e-9));
        CHECK(c.m0 == Approx(oracle::volz_m0(lam, alpha, beta)).epsilon(1e-9));
        CHECK(c.Z_hat * c.H_hat == Approx(1.0).epsilon(1e-10));
        CHECK(c.m_star1_backward == Approx(c.m_star1).epsilon(1e-10));
    }
}

TEST_CASE("subcritical models are rejected") {
    CHECK_THROWS_AS(constants(ModelSpec::markov_sir(0.5, 1)), SubcriticalError);
    CHECK_THROWS_AS(malthusian(ModelSpec::reed_frost(0.9)), SubcriticalError);
    CHECK_FALSE(supercritical(ModelSpec::markov_sir(1, 1)));
}

TEST_CASE("final sizes and extinction") {
    CHECK(final_size_root(2) == Approx(oracle::kFinalSizeR0Two).epsilon(1e-12));
    CHECK(final_size_root(0.8) == 1.0);
    RandomStream rng(3);
    for (int i = 0; i < 30; ++i) {
        const double r0 = 1.01 + 5 * rng.uniform01();
        CHECK(final_size_root(r0) == Approx(oracle::final_size(r0)).epsilon(1e-10));
    }
    const auto sir = final_size_and_extinction(ModelSpec::markov_sir(2, 1));
    CHECK(sir.q_forward == Approx(0.5).epsilon(1e-10));
    CHECK(sir.q_backward == Approx(oracle::kFinalSizeR0Two).epsilon(1e-10));
    const auto rf = final_size_and_extinction(ModelSpec::reed_frost(2));
    CHECK(rf.q_forward == Approx(oracle::kFinalSizeR0Two).epsilon(1e-10));
    const auto volz = final_size_and_extinction(ModelSpec::volz({0, 0, 1}, 1, 0.5));
    CHECK(volz.half_edge(2) == Approx(oracle::kVolzRegular3QTilde).epsilon(1e-10));
    CHECK(volz.s_inf == Approx(0.125).epsilon(1e-10));
    CHECK(volz.q_forward == Approx(oracle::kVolzRegular3QForward).epsilon(1e-10));
    const auto two = final_size_and_extinction(symmetric_two_type());
    CHECK(two.s_inf == Approx(oracle::kFinalSizeR0Two).epsilon(1e-10));
}

TEST_CASE("markov SIR limit curve equals the Kermack-McKendrick solution") {
    const auto spec = ModelSpec::markov_sir(2, 1);
    const auto c = constants(spec);
    const auto curve = solve_s_hat(spec, c, Grid{});
    const auto km = oracle::km_sir_curve(2, 1, curve.u);
    double sup = 0;
    for (std::size_t i = 0; i < km.size(); ++i) sup = std::max(sup, std::abs(km[i] - curve.values[0][i]));
    CHECK(sup < 1e-5);
    // the symmetric two-type epidemic traces the same curve in each type
    const auto two = solve_s_hat(symmetric_two_type(), constants(symmetric_two_type()), Grid{});
    for (int l = 0; l < 2; ++l)
        for (std::size_t i = 0; i < km.size(); ++i) CHECK(two.values[static_cast<std::size_t>(l)][i] == Approx(km[i]).epsilon(1e-4));
}

TEST_CASE("property: limit curves are decreasing, bounded and solve their equation") {
    for (const auto& spec : shipped()) {
        const auto c = constants(spec);
        const auto curve = solve_s_hat(spec, c, Grid{});
        const auto fs = final_size_and_extinction(spec);
        for (int l = 0; l < curve.types(); ++l) {
            const auto& v = curve.values[static_cast<std::size_t>(l)];
            for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1] + 1e-12);
            for (double x : v) CHECK((x >= 0 && x <= 1));
            // left end: 1 - s ~ boundary e^u
            CHECK((1 - v.front()) / std::exp(curve.u.front()) == Approx(c.boundary(l)).epsilon(0.02));
            // right end approaches the backward extinction probability
            const double q = fs.q_backward_by_type.size() > l ? fs.q_backward_by_type(l) : fs.q_backward;
            CHECK(v.back() == Approx(q).epsilon(0.03));
        }
        CHECK(curve.max_picard_residual <= 1e-12);
        CHECK(s_hat_residual(spec, c, curve) <= 1e-6);
    }
}

TEST_CASE("volz ODE agrees with the functional equation") {
    for (const auto& p : {std::vector<double>{0, 0, 1}, std::vector<double>{0.2, 0.3, 0.3, 0.2}}) {
        const auto spec = ModelSpec::volz(p, 1, 0.5);
        const auto c = constants(spec);
        const auto ode = volz_ode(spec, c);
        const auto curve = solve_s_hat(spec, c);
        CHECK(ode.from_ode);
        CHECK(ode.max_identity_deviation <= 1e-6);
        CHECK(ode.max_system_deviation <= 1e-6);
        for (int l = 0; l < curve.types(); ++l)
            for (std::size_t i = 0; i < curve.u.size(); ++i)
                CHECK(std::abs(ode.s_hat[static_cast<std::size_t>(l)][i] - curve.values[static_cast<std::size_t>(l)][i]) < 1e-4);
    }
    // identical non-exponential laws go through the functional equation
    const auto gen = ModelSpec::configuration({0, 0, 1}, std::vector<TimeDistribution>(9, TimeDistribution::gamma(2, 2)),
                                              std::vector<TimeDistribution>(3, TimeDistribution::uniform(0, 3)));
    const auto sol = volz_ode(gen, constants(gen));
    CHECK_FALSE(sol.from_ode);
    CHECK_THROWS_AS(volz_ode(ModelSpec::markov_sir(2, 1), constants(ModelSpec::markov_sir(2, 1))), InvalidArgument);
}

TEST_CASE("residual law identities") {
    for (const double beta : {2.0, 3.0}) {
        const auto spec = ModelSpec::markov_sir(beta, 1);
        const auto c = constants(spec);
        const ResidualLaw F(spec, c.lambda);
        CHECK(F(0.0) == Approx(0.0).epsilon(1e-12));
        CHECK(F(60.0) == Approx(1.0).epsilon(1e-9));
        boost::math::quadrature::exp_sinh<double> q;
        const double integral = q.integrate(
            [&](double s) {
                const double w = c.lambda * std::exp(-c.lambda * s);
                return w > 0 ? w * F(s) : 0.0;
            },
            0.0, INFINITY);
        CHECK(integral == Approx(c.m_star1 / (beta - 1)).epsilon(1e-9));
        for (double s = 0.1; s < 10; s += 0.7) CHECK(F(s) >= F(s - 0.1));
    }
}

TEST_CASE("galton-watson transform") {
    for (double t : {0.0, 0.01, 0.3, 1.0, 5.0, 40.0}) CHECK(gw_psi(2, t) == Approx(oracle::gw_psi(2, t)).epsilon(1e-9));
    CHECK(gw_psi(2, 0.0) == 1.0);
    // psi(infinity) is the extinction probability
    CHECK(gw_psi(2, 1e6) == Approx(oracle::kFinalSizeR0Two).epsilon(1e-8));
    CHECK_THROWS_AS(gw_psi(1.0, 1.0), InvalidArgument);
}

TEST_CASE("monte carlo transform of reed-frost limit samples tracks the GW transform") {
    const auto spec = ModelSpec::reed_frost(2);
    const auto c = constants(spec);
    RandomStream rng(9);
    const auto w = sample_W(spec, Direction::Backward, c.lambda, default_horizon(spec, c.lambda), 4000, rng);
    const Grid g{-3, 5, 0.5};
    const auto mc = s_hat_monte_carlo(w, c.m_star2, g);
    const auto curve = solve_s_hat(spec, c, g);
    for (std::size_t i = 0; i < mc.size(); ++i) {
        // W-hat here has mean mu / (mu - 1), so psi(e^u lambda mu / (mu - 1)) on the mean-one scale
        const double theta = std::exp(g.at(i)) * c.lambda * 2.0;
        CHECK(curve.values[0][i] == Approx(oracle::gw_psi(2, theta)).epsilon(2e-4));
        CHECK(std::abs(mc[i] - curve.values[0][i]) < 0.03);
    }
}
