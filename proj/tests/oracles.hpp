#pragma once

// Independent reference computations used by the tests. Nothing here calls into the library.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

/// Frozen values.
inline constexpr double kFinalSizeR0Two = 0.20318786997997995; // root in (0,1) of -log s = 2 (1 - s)
inline constexpr double kVolzRegular3Lambda = 0.5;
inline constexpr double kVolzRegular3M0 = 0.125;
inline constexpr double kVolzRegular3MStar1 = 0.25;
inline constexpr double kVolzRegular3MStar2 = 1.0 / 6.0;
inline constexpr double kVolzRegular3QTilde = 0.5;
inline constexpr double kVolzRegular3QForward = 59.0 / 224.0; // E (q + X (1 - q))^3, X ~ Beta(1/2, 1), q = 3/8
inline constexpr double kVolzHeteroLambda = 0.42;

/// Bisection for the root in (0, 1) of -log s = r0 (1 - s).
inline double final_size(double r0) {
    if (r0 <= 1) return 1.0;
    double lo = 1e-300, hi = 1.0 - 1e-12;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (-std::log(mid) - r0 * (1 - mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Markov SIR: lambda = beta - gamma, m* = lambda / beta.
inline double sir_lambda(double beta, double gamma) { return beta - gamma; }
inline double sir_m_star(double beta, double gamma) { return (beta - gamma) / beta; }

/// Volz growth rate from alpha m_(2) / m / (alpha + beta + lambda) = 1.
inline double volz_lambda(const std::vector<double>& p, double alpha, double beta) {
    double m = 0, m2 = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        m += k * p[i];
        m2 += k * (k - 1) * p[i];
    }
    return alpha * m2 / m - alpha - beta;
}

/// int lambda v e^{-lambda v} e^{-beta v} alpha e^{-alpha v} dv
inline double volz_m0(double lambda, double alpha, double beta) {
    return lambda * alpha / ((alpha + beta + lambda) * (alpha + beta + lambda));
}

/// Laplace transform of the mean-one Galton-Watson limit for Po(mu) offspring, via psi(mu t) = exp(-mu (1 - psi(t))).
inline double gw_psi(double mu, double theta) {
    // start from 1 - t + t^2 E W^2 / 2 at t <= 1e-5, where E W^2 = mu / (mu - 1)
    int k = 0;
    double t = theta;
    while (t > 1e-5) t /= mu, ++k;
    double x = 1.0 - t + 0.5 * t * t * mu / (mu - 1);
    for (int i = 0; i < k; ++i) x = std::exp(-mu * (1.0 - x));
    return x;
}

/// Susceptible fraction of the Kermack-McKendrick SIR ODE parametrized so that 1 - s(u) ~ e^u as u -> -inf,
/// with u = lambda t, sampled at the requested points (ascending).
inline std::vector<double> km_sir_curve(double beta, double gamma, const std::vector<double>& us) {
    const double lambda = beta - gamma;
    double u = -14.0;
    double s = 1.0 - std::exp(u), i = lambda / beta * std::exp(u);
    const double h = 1e-3; // in u units
    auto rhs = [&](double s_, double i_, double& ds, double& di) {
        ds = -beta * s_ * i_ / lambda;
        di = (beta * s_ * i_ - gamma * i_) / lambda;
    };
    std::vector<double> out;
    std::size_t next = 0;
    while (next < us.size()) {
        while (next < us.size() && us[next] <= u + 1e-12) out.push_back(s), ++next;
        if (next == us.size()) break;
        const double step = std::min(h, us[next] - u);
        double k1s, k1i, k2s, k2i, k3s, k3i, k4s, k4i;
        rhs(s, i, k1s, k1i);
        rhs(s + 0.5 * step * k1s, i + 0.5 * step * k1i, k2s, k2i);
        rhs(s + 0.5 * step * k2s, i + 0.5 * step * k2i, k3s, k3i);
        rhs(s + step * k3s, i + step * k3i, k4s, k4i);
        s += step / 6 * (k1s + 2 * k2s + 2 * k3s + k4s);
        i += step / 6 * (k1i + 2 * k2i + 2 * k3i + k4i);
        u += step;
    }
    return out;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

/// Critical value of the two-sample KS statistic at level 1%.
inline double ks_two_sample_critical_1pct(std::size_t n, std::size_t m) {
    return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

} // namespace oracle
