#include "epicurve/curves.hpp"
#include "epicurve/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>

namespace epicurve {

namespace {

struct DegreePgf {
    std::vector<double> p;
    double g1(double s) const {
        double v = 0;
        for (std::size_t k = 0; k < p.size(); ++k) v += static_cast<double>(k + 1) * p[k] * std::pow(s, static_cast<double>(k));
        return v;
    }
    double g2(double s) const {
        double v = 0;
        for (std::size_t k = 1; k < p.size(); ++k)
            v += static_cast<double>((k + 1) * k) * p[k] * std::pow(s, static_cast<double>(k) - 1.0);
        return v;
    }
};

} // namespace

VolzSolution volz_ode(const ModelSpec& spec, const DerivedConstants& consts, const Grid& grid) {
    if (spec.kind() != ModelKind::Configuration) throw InvalidArgument("volz_ode: configuration model required");
    const auto& c = spec.as<Configuration>();
    const int K = c.max_degree();
    VolzSolution out;
    out.u = grid.points();

    if (!c.volz_rates) {
        if (!c.identical_laws())
            throw InvalidArgument("volz_ode: contact and infectious-period laws must be identical across classes");
        const LimitCurve curve = solve_s_hat(spec, consts, grid);
        out.from_ode = false;
        out.h = curve.state[0];
        out.s_hat = curve.values;
        return out;
    }

    namespace ode = boost::numeric::odeint;
    const double alpha = c.volz_rates->first, beta = c.volz_rates->second;
    const double lam = consts.lambda;
    const double m = c.mean_degree();
    const DegreePgf g{c.degree_probs};

    // all classes share h; take the expansion of the highest class present
    int ref = K - 1;
    while (ref > 0 && c.degree_probs[static_cast<std::size_t>(ref)] <= 0) --ref;
    const BoundaryExpansion be = boundary_expansion(spec, consts);
    const double u_start = std::min(grid.lo, -6.0) - 2.0;
    const double eu = std::exp(u_start);
    const double h0 = 1.0 - be.first(ref) * eu + be.second(ref) * eu * eu;

    // times in the real-time clock t = u / lambda
    std::vector<double> times{u_start / lam};
    for (double u : out.u) times.push_back(u / lam);

    using S1 = std::array<double, 1>;
    using S3 = std::array<double, 3>;
    auto scalar = [&](const S1& x, S1& dx, double) {
        dx[0] = alpha / m * g.g1(x[0]) - (alpha + beta) * x[0] + beta;
    };
    auto system = [&](const S3& x, S3& dx, double) {
        const double h = x[0], ps = x[1], pi = x[2];
        const double ratio = h * g.g2(h) / g.g1(h);
        dx[0] = -alpha * pi * h;
        dx[1] = alpha * ps * pi * (1.0 - ratio);
        dx[2] = alpha * ps * pi * ratio - alpha * pi * (1.0 - pi) - beta * pi;
    };

    const double tol = 1e-13;
    std::vector<double> h1;
    S1 x1{h0};
    ode::integrate_times(ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<S1>()), scalar, x1, times.begin(),
                         times.end(), 1e-3, [&](const S1& x, double) { h1.push_back(x[0]); });

    const double ps0 = g.g1(h0) / (m * h0);
    const double pi0 = 1.0 - ps0 + beta / alpha * (1.0 - 1.0 / h0);
    std::vector<S3> h3;
    S3 x3{h0, ps0, pi0};
    ode::integrate_times(ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<S3>()), system, x3, times.begin(),
                         times.end(), 1e-3, [&](const S3& x, double) { h3.push_back(x); });

    out.s_hat.assign(static_cast<std::size_t>(K), std::vector<double>(out.u.size()));
    for (std::size_t i = 0; i < out.u.size(); ++i) {
        const double h = h1[i + 1];
        const S3& y = h3[i + 1];
        out.h.push_back(h);
        out.p_s.push_back(y[1]);
        out.p_i.push_back(y[2]);
        const double ps = g.g1(h) / (m * h);
        const double pi = 1.0 - ps + beta / alpha * (1.0 - 1.0 / h);
        out.max_identity_deviation =
            std::max({out.max_identity_deviation, std::abs(y[1] - ps), std::abs(y[2] - pi)});
        out.max_system_deviation = std::max(out.max_system_deviation, std::abs(y[0] - h));
        for (int l = 0; l < K; ++l) out.s_hat[static_cast<std::size_t>(l)][i] = std::pow(h, l + 1);
    }
    return out;
}

} // namespace epicurve
