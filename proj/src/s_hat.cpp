#include "epicurve/curves.hpp"
#include "epicurve/errors.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <cmath>
#include <limits>
#include <memory>

namespace epicurve {

namespace {

// One term coef * int f_src(u - lambda v) K(dv) in the equation for type dst.
struct Term {
    int src;
    int dst;
    double coef;
    CensoredKernel kernel;
};

// Equation family: x = exp(-S) with f = 1 - x, or x = 1 - S with f = 1 - x^src.
struct Family {
    bool configuration;
    std::vector<Term> terms;
    int types;
};

Family family_of(const ModelSpec& spec) {
    Family fam{spec.kind() == ModelKind::Configuration, {}, spec.type_count()};
    switch (spec.kind()) {
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        for (int k = 0; k < m.types(); ++k)
            for (int l = 0; l < m.types(); ++l)
                if (m.means(k, l) > 0) fam.terms.push_back({k, l, m.means(k, l), CensoredKernel(m.G(k, l))});
        break;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        for (int k = 1; k < c.max_degree(); ++k) {
            if (c.size_biased(k) <= 0) continue;
            for (int l = 0; l < c.max_degree(); ++l) {
                CensoredKernel K = edge_kernel(c, k, l);
                if (K.mass() > 0) fam.terms.push_back({k, l, c.size_biased(k), K});
            }
        }
        break;
    }
    default:
        fam.terms.push_back({0, 0, spec.single_mean(), CensoredKernel(spec.single_intensity())});
        break;
    }
    return fam;
}

double source(const Family& fam, int k, double x) {
    return fam.configuration ? 1.0 - std::pow(x, k) : 1.0 - x;
}

double closure(const Family& fam, double s) { return fam.configuration ? 1.0 - s : std::exp(-s); }

double to_s_hat(const Family& fam, int l, double x) { return fam.configuration ? std::pow(x, l + 1) : x; }

// Source expansion f_k(x) = F1_k e^x - F2_k e^{2x} implied by the state expansion.
void source_expansion(const Family& fam, const BoundaryExpansion& b, Eigen::VectorXd& F1, Eigen::VectorXd& F2) {
    F1 = b.first;
    F2 = b.second;
    if (!fam.configuration) return;
    for (int k = 0; k < fam.types; ++k) {
        const double n = k;
        F1(k) = n * b.first(k);
        F2(k) = n * b.second(k) + 0.5 * n * (n - 1) * b.first(k) * b.first(k);
    }
}

} // namespace

BoundaryExpansion boundary_expansion(const ModelSpec& spec, const DerivedConstants& consts) {
    const Family fam = family_of(spec);
    const int d = fam.types;
    const double lam = consts.lambda;
    BoundaryExpansion out;
    out.first.resize(d);
    for (int l = 0; l < d; ++l) out.first(l) = fam.configuration ? consts.boundary(l) / (l + 1) : consts.boundary(l);
    // second-order terms solve a linear system with the mean matrix at 2 lambda
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
    for (const auto& t : fam.terms) {
        const double L2 = t.coef * t.kernel.laplace(2 * lam);
        if (fam.configuration) {
            const double n = t.src;
            A(t.dst, t.src) += L2 * n;
            r(t.dst) += L2 * 0.5 * n * (n - 1) * out.first(t.src) * out.first(t.src);
        } else {
            A(t.dst, t.src) += L2;
        }
    }
    if (!fam.configuration) r = 0.5 * out.first.array().square().matrix();
    out.second = (Eigen::MatrixXd::Identity(d, d) - A).partialPivLu().solve(r);
    return out;
}

LimitCurve solve_s_hat(const ModelSpec& spec, const DerivedConstants& consts, const Grid& grid,
                       const SolverOptions& options) {
    const Family fam = family_of(spec);
    const int d = fam.types;
    const double lam = consts.lambda;
    if (!(lam > 0)) throw InvalidArgument("solve_s_hat: constants carry no positive lambda");
    const std::size_t n_out = grid.size();
    const int r = std::max(1, static_cast<int>(std::lround(grid.step / options.fine_step)));
    const double h = grid.step / r;
    const long lead_steps = static_cast<long>(std::ceil(options.lead_in / grid.step - 1e-9)) * r;
    const double u0 = grid.lo - static_cast<double>(lead_steps) * h;
    const std::size_t n = static_cast<std::size_t>(lead_steps) + (n_out - 1) * static_cast<std::size_t>(r) + 1;

    const BoundaryExpansion be = boundary_expansion(spec, consts);
    Eigen::VectorXd F1, F2;
    source_expansion(fam, be, F1, F2);

    // product-integration weights in y = lambda v, cells [jh, (j+1)h]
    struct Weights {
        std::vector<double> wl, wr, t1, t2, c;
        std::size_t last = 0;
    };
    std::vector<Weights> W(fam.terms.size());
    for (std::size_t p = 0; p < fam.terms.size(); ++p) {
        const auto& K = fam.terms[p].kernel;
        auto& w = W[p];
        w.last = n;
        w.wl.assign(n, 0.0);
        w.wr.assign(n, 0.0);
        w.t1.assign(n, 0.0);
        w.t2.assign(n, 0.0);
        const double L1 = K.laplace(lam), L2 = K.laplace(2 * lam), mass = K.mass();
        double cdf_prev = K.cdf(0.0), pm_prev = lam * K.partial_mean(0.0);
        bool exhausted = false;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = static_cast<double>(j) * h / lam;
            w.t1[j] = exhausted ? 0.0 : L1 - K.partial_laplace(lam, v);
            w.t2[j] = exhausted ? 0.0 : L2 - K.partial_laplace(2 * lam, v);
            if (exhausted) continue;
            const double vb = static_cast<double>(j + 1) * h / lam;
            const double cdf = K.cdf(vb), pm = lam * K.partial_mean(vb);
            const double m0 = cdf - cdf_prev, m1 = pm - pm_prev;
            const double a = static_cast<double>(j) * h, b = a + h;
            w.wl[j] = (b * m0 - m1) / h;
            w.wr[j] = (m1 - a * m0) / h;
            cdf_prev = cdf;
            pm_prev = pm;
            if (mass - cdf <= 1e-18 * mass) {
                exhausted = true;
                w.last = j;
            }
        }
        w.c.assign(n, 0.0);
        w.c[0] = w.wl[0];
        for (std::size_t j = 1; j < n; ++j) w.c[j] = w.wl[j] + w.wr[j - 1];
    }

    std::vector<std::vector<double>> x(static_cast<std::size_t>(d), std::vector<double>(n, 1.0));
    std::vector<std::vector<double>> f(static_cast<std::size_t>(d), std::vector<double>(n, 0.0));
    std::vector<double> known(fam.terms.size()), implicit(fam.terms.size());
    double max_resid = 0;

    for (std::size_t i = 0; i < n; ++i) {
        const double u = u0 + static_cast<double>(i) * h;
        const double e1 = std::exp(u), e2 = e1 * e1;
        for (std::size_t p = 0; p < fam.terms.size(); ++p) {
            const auto& t = fam.terms[p];
            const auto& w = W[p];
            const auto& fs = f[static_cast<std::size_t>(t.src)];
            double s = F1(t.src) * e1 * w.t1[i] - F2(t.src) * e2 * w.t2[i];
            if (i >= 1) {
                const std::size_t top = std::min(i - 1, w.last + 1);
                for (std::size_t m = 1; m <= top; ++m) s += w.c[m] * fs[i - m];
                s += w.wr[i - 1] * fs[0];
                implicit[p] = w.wl[0];
            } else {
                implicit[p] = 0.0;
            }
            known[p] = s;
        }
        // Picard iteration at node i, damped once it oscillates
        std::vector<double> cur(static_cast<std::size_t>(d)), next(static_cast<std::size_t>(d)),
            prev_delta(static_cast<std::size_t>(d), 0.0);
        for (int l = 0; l < d; ++l) cur[static_cast<std::size_t>(l)] = i ? x[static_cast<std::size_t>(l)][i - 1] : 1.0;
        bool damped = false;
        double delta = 1;
        int it = 0;
        for (; it < options.max_iterations; ++it) {
            std::vector<double> S(static_cast<std::size_t>(d), 0.0);
            for (std::size_t p = 0; p < fam.terms.size(); ++p) {
                const auto& t = fam.terms[p];
                S[static_cast<std::size_t>(t.dst)] +=
                    t.coef * (implicit[p] * source(fam, t.src, cur[static_cast<std::size_t>(t.src)]) + known[p]);
            }
            delta = 0;
            bool flipped = false;
            for (int l = 0; l < d; ++l) {
                const auto li = static_cast<std::size_t>(l);
                double target = closure(fam, S[li]);
                const double dl = target - cur[li];
                if (dl * prev_delta[li] < 0 && std::abs(dl) > 0.5 * std::abs(prev_delta[li])) flipped = true;
                prev_delta[li] = dl;
                next[li] = damped ? cur[li] + 0.5 * dl : target;
                delta = std::max(delta, std::abs(dl));
            }
            if (flipped) damped = true;
            cur.swap(next);
            if (delta <= options.tolerance) break;
        }
        if (delta > 1e-9)
            throw ConvergenceError("solve_s_hat: Picard iteration did not converge at u = " + std::to_string(u), delta);
        max_resid = std::max(max_resid, delta);
        for (int l = 0; l < d; ++l) {
            const auto li = static_cast<std::size_t>(l);
            x[li][i] = cur[li];
            f[li][i] = source(fam, l, cur[li]);
        }
    }

    LimitCurve out;
    out.u = grid.points();
    out.values.assign(static_cast<std::size_t>(d), std::vector<double>(n_out));
    out.state.assign(static_cast<std::size_t>(d), std::vector<double>(n_out));
    out.max_picard_residual = max_resid;
    for (int l = 0; l < d; ++l)
        for (std::size_t o = 0; o < n_out; ++o) {
            const std::size_t i = static_cast<std::size_t>(lead_steps) + o * static_cast<std::size_t>(r);
            const double xv = x[static_cast<std::size_t>(l)][i];
            out.state[static_cast<std::size_t>(l)][o] = xv;
            out.values[static_cast<std::size_t>(l)][o] = to_s_hat(fam, l, xv);
        }
    return out;
}

double s_hat_residual(const ModelSpec& spec, const DerivedConstants& consts, const LimitCurve& curve) {
    const Family fam = family_of(spec);
    const int d = fam.types;
    const double lam = consts.lambda;
    if (curve.u.size() < 4) throw InvalidArgument("s_hat_residual: grid too small");
    const double lo = curve.u.front(), hi = curve.u.back();
    const double step = curve.u[1] - curve.u[0];
    const BoundaryExpansion be = boundary_expansion(spec, consts);
    Eigen::VectorXd F1, F2;
    source_expansion(fam, be, F1, F2);

    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    std::vector<std::unique_ptr<Spline>> splines;
    for (int l = 0; l < d; ++l) {
        const auto& s = curve.state[static_cast<std::size_t>(l)];
        splines.push_back(std::make_unique<Spline>(s.begin(), s.end(), lo, step));
    }
    auto f_at = [&](int k, double x) {
        if (x < lo) return F1(k) * std::exp(x) - F2(k) * std::exp(2 * x);
        return source(fam, k, (*splines[static_cast<std::size_t>(k)])(std::min(x, hi)));
    };

    double worst = 0;
    for (std::size_t i = 0; i < curve.u.size(); ++i) {
        const double u = curve.u[i];
        std::vector<double> S(static_cast<std::size_t>(d), 0.0);
        for (const auto& t : fam.terms) {
            const double vmax = (u - lo) / lam;
            const double inside =
                t.kernel.integrate([&](double v) { return f_at(t.src, u - lam * v); }, 0.0, vmax);
            const double T1 = t.kernel.laplace(lam) - t.kernel.partial_laplace(lam, vmax);
            const double T2 = t.kernel.laplace(2 * lam) - t.kernel.partial_laplace(2 * lam, vmax);
            const double tail = F1(t.src) * std::exp(u) * T1 - F2(t.src) * std::exp(2 * u) * T2;
            S[static_cast<std::size_t>(t.dst)] += t.coef * (inside + tail);
        }
        for (int l = 0; l < d; ++l) {
            const double xv = curve.state[static_cast<std::size_t>(l)][i];
            const double lhs = fam.configuration ? 1.0 - xv : -std::log(xv);
            worst = std::max(worst, std::abs(lhs - S[static_cast<std::size_t>(l)]));
        }
    }
    return worst;
}

std::vector<double> s_hat_monte_carlo(const std::vector<LimitSample>& samples, double m_star2, const Grid& grid) {
    if (samples.empty()) throw InvalidArgument("s_hat_monte_carlo: no samples");
    const auto u = grid.points();
    std::vector<double> out(u.size(), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double scale = std::exp(u[i]) * m_star2;
        double acc = 0;
        for (const auto& s : samples) acc += std::exp(-s.value * scale);
        out[i] = acc / static_cast<double>(samples.size());
    }
    return out;
}

} // namespace epicurve
