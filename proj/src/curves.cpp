#include "epicurve/curves.hpp"
#include "epicurve/errors.hpp"
#include "epicurve/linalg.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace epicurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

std::string vec(const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v(i));
    return s;
}

// Degree classes that can appear as offspring and have offspring: index >= 1 and p > 0.
std::vector<int> active_classes(const Configuration& c) {
    std::vector<int> a;
    for (int i = 1; i < c.max_degree(); ++i)
        if (c.degree_probs[static_cast<std::size_t>(i)] > 0) a.push_back(i);
    return a;
}

Eigen::MatrixXd restrict(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) r(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    return r;
}

// Growth matrix whose Perron root decides criticality.
Eigen::MatrixXd growth_matrix(const ModelSpec& spec, double s) {
    Eigen::MatrixXd full = mean_matrix(spec, s);
    if (spec.kind() != ModelKind::Configuration) return full;
    const auto idx = active_classes(spec.as<Configuration>());
    if (idx.empty()) return Eigen::MatrixXd::Zero(1, 1);
    return restrict(full, idx);
}

double growth_root(const ModelSpec& spec, double s) {
    if (spec.is_single_type()) return spec.single_mean() * spec.single_intensity().laplace(s);
    return perron_root(growth_matrix(spec, s));
}

double lattice_span_of(const ModelSpec& spec) {
    if (spec.kind() == ModelKind::ReedFrost) return 1.0;
    if (spec.kind() == ModelKind::CountTimes && spec.as<CountTimes>().times.is_lattice())
        return spec.as<CountTimes>().times.param1();
    return 0.0;
}

// Minimal fixed point of a monotone map on [0,1]^d, iterated from 0.
Eigen::VectorXd minimal_fixed_point(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, int d,
                                    const char* what) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    double delta = 1;
    for (long it = 0; it < 10'000'000; ++it) {
        Eigen::VectorXd y = f(x);
        delta = (y - x).lpNorm<Eigen::Infinity>();
        x = y;
        if (delta <= 1e-16) return x;
    }
    if (delta > 1e-12) throw ConvergenceError(std::string(what) + ": fixed-point iteration did not converge", delta);
    return x;
}

void extend_right(Eigen::VectorXd& v, const Eigen::MatrixXd& full, const std::vector<int>& active, int d) {
    for (int j = 1; j < d; ++j) {
        if (std::find(active.begin(), active.end(), j) != active.end()) continue;
        double s = 0;
        for (int k : active) s += full(j, k) * v(k);
        v(j) = s;
    }
}

} // namespace

std::size_t Grid::size() const {
    if (!(step > 0) || !(hi >= lo)) throw InvalidArgument("grid: need step > 0 and hi >= lo");
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

std::vector<double> Grid::points() const {
    std::vector<double> p(size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = at(i);
    return p;
}

std::vector<std::string> DerivedConstants::describe() const {
    std::vector<std::string> out{"lambda = " + num(lambda), "R0 = " + num(R0)};
    if (types == 1 && kind != ModelKind::Configuration) {
        out.push_back("m_star = " + num(m_star1));
    } else {
        out.push_back("m_star1 = " + num(m_star1));
        out.push_back("m_star2 = " + num(m_star2));
        out.push_back("m_star1_backward = " + num(m_star1_backward));
        if (m0 > 0) out.push_back("m0 = " + num(m0));
        out.push_back("zeta = " + vec(zeta));
        out.push_back("eta = " + vec(eta));
        out.push_back("zeta_hat = " + vec(zeta_hat));
        out.push_back("eta_hat = " + vec(eta_hat));
        out.push_back("H = " + num(H));
        out.push_back("Z = " + num(Z));
        out.push_back("H_hat = " + num(H_hat));
        out.push_back("Z_hat = " + num(Z_hat));
    }
    out.push_back("c = " + vec(c));
    out.push_back("mean_W = " + vec(w_mean));
    out.push_back("mean_W_hat = " + vec(w_hat_mean));
    out.push_back("boundary_slope = " + vec(boundary));
    if (lattice_span > 0) out.push_back("lattice_span = " + num(lattice_span));
    out.push_back("malthus_residual = " + num(malthus_residual));
    out.push_back("eigen_residual = " + num(eigen_residual));
    return out;
}

double reproduction_number(const ModelSpec& spec) { return growth_root(spec, 0.0); }

bool supercritical(const ModelSpec& spec) { return reproduction_number(spec) > 1.0; }

double malthusian(const ModelSpec& spec) {
    const double r0 = reproduction_number(spec);
    if (!(r0 > 1.0))
        throw SubcriticalError("malthusian: model is not supercritical (reproduction number " + num(r0) + ")");
    auto f = [&](double s) { return growth_root(spec, s) - 1.0; };
    double lo = 0.0, hi = 1.0;
    while (f(hi) > 0) {
        lo = hi;
        hi *= 2;
        if (hi > 1e8) throw ConvergenceError("malthusian: no sign change found", f(hi));
    }
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(a); };
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi), tol, iters);
    const double lam = 0.5 * (r.first + r.second);
    return lam;
}

DerivedConstants constants(const ModelSpec& spec) {
    DerivedConstants k;
    k.kind = spec.kind();
    k.types = spec.type_count();
    k.lambda = malthusian(spec);
    k.R0 = reproduction_number(spec);
    const double lam = k.lambda;
    const int d = k.types;

    if (spec.is_single_type()) {
        const double mu = spec.single_mean();
        const TimeDistribution g = spec.single_intensity();
        k.malthus_residual = std::abs(mu * g.laplace(lam) - 1.0);
        k.m_star1 = k.m_star2 = k.m_star1_backward = mu * lam * g.laplace_moment(lam);
        k.zeta = k.eta = k.zeta_hat = k.eta_hat = Eigen::VectorXd::Ones(1);
        k.c = Eigen::VectorXd::Constant(1, mu - 1.0);
        k.lattice_span = lattice_span_of(spec);
        // along a lattice of span d, the renewal limit gains the factor lambda d / (1 - e^{-lambda d})
        double factor = 1.0;
        if (k.lattice_span > 0) factor = lam * k.lattice_span / -std::expm1(-lam * k.lattice_span);
        k.w_mean = k.w_hat_mean = Eigen::VectorXd::Constant(1, factor / k.m_star1);
        k.boundary = k.m_star2 * k.w_hat_mean;
        return k;
    }

    if (spec.kind() == ModelKind::Multitype) {
        const auto& m = spec.as<Multitype>();
        const Eigen::MatrixXd A = mean_matrix(spec, lam);
        const Eigen::MatrixXd dA = mean_matrix_slope(spec, lam);
        const PerronPair p = perron(A);
        k.malthus_residual = std::abs(p.root - 1.0);
        k.zeta = p.left;
        k.eta = p.right;
        k.H = k.eta.sum();
        k.Z = 1.0;
        k.zeta_hat = k.eta / k.H;
        k.eta_hat = k.H * k.zeta;
        k.H_hat = 1.0;
        k.Z_hat = 1.0;
        k.m_star1 = lam * k.zeta.dot(dA * k.eta);
        k.m_star1_backward = lam * k.zeta_hat.dot(dA.transpose() * k.eta_hat);
        double m2 = 0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                m2 += k.zeta(a) * lam * dA(a, b) * k.eta(b) / (m.proportions[static_cast<std::size_t>(b)] * k.H);
        k.m_star2 = m2;
        k.c = (k.zeta.transpose() * m.means).transpose() - k.zeta;
        k.w_mean = k.eta / k.m_star1;
        k.w_hat_mean = k.eta_hat / k.m_star1;
        k.boundary = k.m_star2 * k.w_hat_mean;
        k.eigen_residual = std::max({(k.zeta.transpose() * A - k.zeta.transpose()).lpNorm<Eigen::Infinity>(),
                                     (A * k.eta - k.eta).lpNorm<Eigen::Infinity>()});
        return k;
    }

    // configuration model
    const auto& c = spec.as<Configuration>();
    const auto active = active_classes(c);
    const Eigen::MatrixXd A = mean_matrix(spec, lam);
    const Eigen::MatrixXd dA = mean_matrix_slope(spec, lam);
    const Eigen::MatrixXd Ab = backward_mean_matrix(spec, lam);
    const PerronPair p = perron(restrict(A, active));
    k.malthus_residual = std::abs(p.root - 1.0);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(d), e = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < active.size(); ++i) {
        z(active[i]) = p.left(static_cast<Eigen::Index>(i));
        e(active[i]) = p.right(static_cast<Eigen::Index>(i));
    }
    for (int i : active) z(0) += z(i) * A(i, 0);
    extend_right(e, A, active, d);
    k.Z = z.sum();
    k.zeta = z / k.Z;
    k.H = k.zeta.dot(e);
    k.eta = e / k.H;

    // backward vectors from the forward ones: zeta1_hat = eta1' D2 D1^{-1}, eta1_hat = D2^{-1} D1 zeta1
    Eigen::VectorXd zh = Eigen::VectorXd::Zero(d), eh = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < active.size(); ++i) {
        const int a = active[i];
        const double d1 = a, d2 = c.size_biased(a);
        zh(a) = p.right(static_cast<Eigen::Index>(i)) * d2 / d1;
        eh(a) = p.left(static_cast<Eigen::Index>(i)) * d1 / d2;
    }
    for (int i : active) zh(0) += zh(i) * Ab(i, 0);
    extend_right(eh, Ab, active, d);
    k.Z_hat = zh.sum();
    k.zeta_hat = zh / k.Z_hat;
    k.H_hat = k.zeta_hat.dot(eh);
    k.eta_hat = eh / k.H_hat;

    k.m_star1 = lam * k.zeta.dot(dA * k.eta);
    Eigen::MatrixXd dAb(d, d);
    for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j) dAb(l, j) = l * c.size_biased(j) * edge_kernel(c, j, l).laplace_moment(lam);
    k.m_star1_backward = lam * k.zeta_hat.dot(dAb * k.eta_hat);

    const double m = c.mean_degree();
    double m2 = 0;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            if (k.zeta(a) == 0 || k.zeta_hat(b) == 0 || a == 0 || b == 0) continue;
            m2 += k.zeta(a) * a * b * k.zeta_hat(b) * lam * edge_kernel(c, a, b).laplace_moment(lam);
        }
    k.m_star2 = m2 / m;
    if (c.identical_laws()) k.m0 = lam * edge_kernel(c, 0, 0).laplace_moment(lam);

    const Eigen::MatrixXd A0 = mean_matrix(spec, 0.0);
    k.c = (k.zeta.transpose() * A0).transpose() - k.zeta;

    // per-half-edge means: b_l = sum_k (k p_k / m) U_kl(lambda) eta_hat_k / m_star1
    k.w_mean.resize(d);
    k.w_hat_mean.resize(d);
    k.boundary.resize(d);
    for (int l = 0; l < d; ++l) {
        double bf = 0, bb = 0;
        for (int j = 0; j < d; ++j) {
            bf += c.size_biased(j) * edge_kernel(c, l, j).laplace(lam) * k.eta(j);
            bb += c.size_biased(j) * edge_kernel(c, j, l).laplace(lam) * k.eta_hat(j);
        }
        k.w_mean(l) = (l + 1) * bf / k.m_star1;
        k.w_hat_mean(l) = (l + 1) * bb / k.m_star1;
        k.boundary(l) = k.m_star2 * k.w_hat_mean(l);
    }

    k.eigen_residual = std::max({(k.zeta.transpose() * A - k.zeta.transpose()).lpNorm<Eigen::Infinity>(),
                                 (A * k.eta - k.eta).lpNorm<Eigen::Infinity>(),
                                 (k.zeta_hat.transpose() * Ab - k.zeta_hat.transpose()).lpNorm<Eigen::Infinity>(),
                                 (Ab * k.eta_hat - k.eta_hat).lpNorm<Eigen::Infinity>()});
    return k;
}

// residual law

ResidualLaw::ResidualLaw(const ModelSpec& spec, double lambda) : lambda_(lambda) {
    if (!(lambda > 0)) throw InvalidArgument("residual_cdf: lambda must be positive");
    const int d = spec.type_count();
    terms_.resize(static_cast<std::size_t>(d));
    norm_.assign(static_cast<std::size_t>(d), 0.0);
    if (spec.is_single_type()) {
        terms_[0].push_back({spec.single_mean(), CensoredKernel(spec.single_intensity())});
    } else {
        const DerivedConstants k = constants(spec);
        for (int l = 0; l < d; ++l)
            for (int j = 0; j < d; ++j) {
                double w = 0;
                std::optional<CensoredKernel> ker;
                if (spec.kind() == ModelKind::Multitype) {
                    const auto& m = spec.as<Multitype>();
                    w = k.zeta(j) * m.means(j, l);
                    ker.emplace(m.G(j, l));
                } else {
                    const auto& c = spec.as<Configuration>();
                    w = k.zeta(j) * j * c.size_biased(l);
                    ker.emplace(edge_kernel(c, j, l));
                }
                if (w > 0) terms_[static_cast<std::size_t>(l)].push_back({w, *ker});
            }
    }
    for (int l = 0; l < d; ++l)
        for (const auto& t : terms_[static_cast<std::size_t>(l)])
            norm_[static_cast<std::size_t>(l)] += t.weight * (t.kernel.mass() - t.kernel.laplace(lambda_));
}

double ResidualLaw::operator()(double s, int type) const {
    if (type < 0 || type >= static_cast<int>(terms_.size())) throw InvalidArgument("residual_cdf: invalid type");
    if (s < 0) return 0.0;
    const double c = norm_[static_cast<std::size_t>(type)];
    if (!(c > 0)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(s)) return 1.0;
    double tail = 0;
    for (const auto& t : terms_[static_cast<std::size_t>(type)]) {
        const auto& K = t.kernel;
        const double beyond = K.mass() - K.cdf(s);
        const double discounted = K.laplace(lambda_) - K.partial_laplace(lambda_, s);
        tail += t.weight * (beyond - std::exp(lambda_ * s) * discounted);
    }
    return 1.0 - tail / c;
}

ResidualLaw residual_cdf(const ModelSpec& spec, double lambda) { return ResidualLaw(spec, lambda); }

// final size and extinction

double final_size_root(double r0) {
    if (!(r0 > 1.0)) return 1.0;
    auto f = [&](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, std::exp(-r0 * (1.0 - x(0))));
    };
    return minimal_fixed_point(f, 1, "final_size_root")(0);
}

FinalSize final_size_and_extinction(const ModelSpec& spec) {
    FinalSize out;
    const int d = spec.type_count();
    out.s_inf_by_type = out.q_forward_by_type = out.q_backward_by_type = Eigen::VectorXd::Ones(d);
    if (!supercritical(spec)) {
        if (spec.kind() == ModelKind::Configuration) out.half_edge = Eigen::VectorXd::Ones(d);
        return out;
    }

    switch (spec.kind()) {
    case ModelKind::MarkovSIR:
    case ModelKind::CountTimes:
    case ModelKind::ReedFrost: {
        const double mu = spec.single_mean();
        out.s_inf = out.q_backward = final_size_root(mu);
        if (spec.kind() == ModelKind::CountTimes) {
            const OffspringLaw law = spec.as<CountTimes>().offspring;
            out.q_forward = minimal_fixed_point(
                [&](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, law.pgf(x(0))); }, 1,
                "extinction")(0);
        } else if (spec.kind() == ModelKind::MarkovSIR) {
            const OffspringLaw law = OffspringLaw::geometric(mu);
            out.q_forward = minimal_fixed_point(
                [&](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, law.pgf(x(0))); }, 1,
                "extinction")(0);
        } else {
            out.q_forward = out.q_backward;
        }
        out.s_inf_by_type(0) = out.s_inf;
        out.q_forward_by_type(0) = out.q_forward;
        out.q_backward_by_type(0) = out.q_backward;
        return out;
    }
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        const Eigen::MatrixXd& M = m.means;
        out.q_backward_by_type = minimal_fixed_point(
            [&](const Eigen::VectorXd& x) {
                return (-(M.transpose() * (Eigen::VectorXd::Ones(d) - x))).array().exp().matrix().eval();
            },
            d, "backward extinction");
        out.q_forward_by_type = minimal_fixed_point(
            [&](const Eigen::VectorXd& x) {
                return (-(M * (Eigen::VectorXd::Ones(d) - x))).array().exp().matrix().eval();
            },
            d, "forward extinction");
        out.s_inf_by_type = out.q_backward_by_type;
        out.s_inf = out.q_forward = out.q_backward = 0;
        for (int l = 0; l < d; ++l) {
            const double pi = m.proportions[static_cast<std::size_t>(l)];
            out.s_inf += pi * out.s_inf_by_type(l);
            out.q_forward += pi * out.q_forward_by_type(l);
        }
        out.q_backward = out.s_inf;
        return out;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        Eigen::MatrixXd U0(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) U0(a, b) = edge_kernel(c, a, b).mass();
        // backward, per half-edge of a class-l vertex: x_l = 1 - sum_k (k p_k/m) U_kl (1 - x_k^{k-1})
        out.half_edge = minimal_fixed_point(
            [&](const Eigen::VectorXd& x) {
                Eigen::VectorXd y(d);
                for (int l = 0; l < d; ++l) {
                    double s = 0;
                    for (int k2 = 0; k2 < d; ++k2) s += c.size_biased(k2) * U0(k2, l) * (1 - std::pow(x(k2), k2));
                    y(l) = 1 - s;
                }
                return y;
            },
            d, "configuration final size");
        out.s_inf = 0;
        for (int l = 0; l < d; ++l) {
            out.s_inf_by_type(l) = std::pow(out.half_edge(l), l + 1);
            out.s_inf += c.degree_probs[static_cast<std::size_t>(l)] * out.s_inf_by_type(l);
        }
        out.q_backward_by_type = out.s_inf_by_type;
        out.q_backward = out.s_inf;

        // forward: a class-l vertex with n slots and removal time T dies out with probability
        // E[(sum_k (k p_k/m)(1 - G_lk(T) + G_lk(T) e_k))^n]
        auto slot_generating = [&](int l, const Eigen::VectorXd& e, int n) {
            auto inner = [&](double t) {
                double s = 0;
                for (int k2 = 0; k2 < d; ++k2) {
                    const double G = c.G(l, k2).cdf(t);
                    s += c.size_biased(k2) * (1 - G + G * e(k2));
                }
                return std::pow(s, n);
            };
            const auto& Phi = c.Phi(l);
            return Phi.integrate(inner, 0, kInf) + (1 - Phi.mass()) * inner(kInf);
        };
        const Eigen::VectorXd e = minimal_fixed_point(
            [&](const Eigen::VectorXd& x) {
                Eigen::VectorXd y(d);
                for (int l = 0; l < d; ++l) y(l) = slot_generating(l, x, l);
                return y;
            },
            d, "configuration forward extinction");
        out.q_forward = 0;
        for (int l = 0; l < d; ++l) {
            out.q_forward_by_type(l) = slot_generating(l, e, l + 1);
            out.q_forward += c.degree_probs[static_cast<std::size_t>(l)] * out.q_forward_by_type(l);
        }
        return out;
    }
    }
    return out;
}

// Galton-Watson Laplace transform

namespace {

// Taylor coefficients of psi at 0 from psi(mu t) = exp(-mu (1 - psi(t))).
std::vector<double> gw_series(double mu, int order) {
    std::vector<double> a(static_cast<std::size_t>(order + 1), 0.0);
    std::vector<double> E(static_cast<std::size_t>(order + 1), 0.0);
    a[0] = 1.0;
    a[1] = -1.0;
    E[0] = 1.0;
    // E = exp(g) with g_k = mu a_k; E_n = (1/n) sum_k k g_k E_{n-k}
    E[1] = mu * a[1];
    for (int n = 2; n <= order; ++n) {
        double rest = 0;
        for (int k = 1; k < n; ++k) rest += k * mu * a[static_cast<std::size_t>(k)] * E[static_cast<std::size_t>(n - k)];
        rest /= n;
        a[static_cast<std::size_t>(n)] = rest / (std::pow(mu, n) - mu);
        E[static_cast<std::size_t>(n)] = mu * a[static_cast<std::size_t>(n)] + rest;
    }
    return a;
}

} // namespace

double gw_psi(double mu, double theta) { return gw_psi(mu, std::vector<double>{theta})[0]; }

std::vector<double> gw_psi(double mu, const std::vector<double>& thetas) {
    if (!(mu > 1.0)) throw InvalidArgument("gw_psi: mu must exceed 1");
    constexpr int order = 30;
    constexpr double theta0 = 0.05;
    const auto a = gw_series(mu, order);
    std::vector<double> out;
    out.reserve(thetas.size());
    for (double theta : thetas) {
        if (theta < 0) throw InvalidArgument("gw_psi: theta must be nonnegative");
        int n = 0;
        double t = theta;
        while (t > theta0) {
            t /= mu;
            ++n;
        }
        double psi = 0;
        for (int j = order; j >= 0; --j) psi = psi * t + a[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) psi = std::exp(-mu * (1.0 - psi));
        out.push_back(psi);
    }
    return out;
}

} // namespace epicurve
