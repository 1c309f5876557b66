#include "epicurve/distributions.hpp"
#include "epicurve/errors.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epicurve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-13;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

// int_0^L e^{-sw} dw
double expint0(double s, double L) {
    if (s * L < 1e-12) return L;
    return -std::expm1(-s * L) / s;
}

// int_0^L w e^{-sw} dw
double expint1(double s, double L) {
    const double x = s * L;
    if (x < 0.5) {
        // sum_n (-x)^n / (n! (n+2)) times L^2
        double term = 1.0, sum = 0.5;
        for (int n = 1; n < 30; ++n) {
            term *= -x / n;
            sum += term / (n + 2);
        }
        return L * L * sum;
    }
    return (expint0(s, L) - L * std::exp(-x)) / s;
}

} // namespace

TimeDistribution TimeDistribution::exponential(double rate) {
    if (!(rate > 0) || !std::isfinite(rate)) throw InvalidArgument("exponential rate must be positive");
    return {TimeFamily::Exponential, rate, 0.0};
}

TimeDistribution TimeDistribution::gamma(double shape, double rate) {
    if (!(shape > 0) || !(rate > 0) || !std::isfinite(shape) || !std::isfinite(rate))
        throw InvalidArgument("gamma shape and rate must be positive");
    return {TimeFamily::Gamma, shape, rate};
}

TimeDistribution TimeDistribution::uniform(double a, double b) {
    if (!(a >= 0) || !(b > a) || !std::isfinite(b)) throw InvalidArgument("uniform needs 0 <= a < b");
    return {TimeFamily::Uniform, a, b};
}

TimeDistribution TimeDistribution::point_mass(double at) {
    if (!(at >= 0) || !std::isfinite(at)) throw InvalidArgument("point mass location must be finite and >= 0");
    return {TimeFamily::PointMass, at, 0.0};
}

TimeDistribution TimeDistribution::defective(double mass) const {
    if (!(mass > 0) || mass > 1) throw InvalidArgument("defective mass must lie in (0, 1]");
    TimeDistribution d = *this;
    d.mass_ = mass_ * mass;
    return d;
}

double TimeDistribution::support_lower() const {
    switch (family_) {
    case TimeFamily::Uniform:
    case TimeFamily::PointMass:
        return p1_;
    default:
        return 0.0;
    }
}

double TimeDistribution::support_upper() const {
    switch (family_) {
    case TimeFamily::Uniform:
        return p2_;
    case TimeFamily::PointMass:
        return p1_;
    default:
        return kInf;
    }
}

double TimeDistribution::cdf(double t) const {
    if (t < 0) return 0.0;
    if (std::isinf(t)) return mass_;
    double F = 0;
    switch (family_) {
    case TimeFamily::Exponential:
        F = -std::expm1(-p1_ * t);
        break;
    case TimeFamily::Gamma:
        F = boost::math::gamma_p(p1_, p2_ * t);
        break;
    case TimeFamily::Uniform:
        F = std::clamp((t - p1_) / (p2_ - p1_), 0.0, 1.0);
        break;
    case TimeFamily::PointMass:
        F = t >= p1_ ? 1.0 : 0.0;
        break;
    }
    return mass_ * F;
}

double TimeDistribution::density(double t) const {
    switch (family_) {
    case TimeFamily::Exponential:
        return t < 0 ? 0.0 : p1_ * std::exp(-p1_ * t);
    case TimeFamily::Gamma:
        return t <= 0 ? 0.0 : boost::math::pdf(boost::math::gamma_distribution<double>(p1_, 1.0 / p2_), t);
    case TimeFamily::Uniform:
        return (t < p1_ || t > p2_) ? 0.0 : 1.0 / (p2_ - p1_);
    case TimeFamily::PointMass:
        return 0.0;
    }
    return 0.0;
}

double TimeDistribution::laplace(double s) const {
    if (s < 0) throw InvalidArgument("Laplace argument must be nonnegative");
    double v = 0;
    switch (family_) {
    case TimeFamily::Exponential:
        v = p1_ / (p1_ + s);
        break;
    case TimeFamily::Gamma:
        v = std::pow(p2_ / (p2_ + s), p1_);
        break;
    case TimeFamily::Uniform:
        v = std::exp(-s * p1_) * expint0(s, p2_ - p1_) / (p2_ - p1_);
        break;
    case TimeFamily::PointMass:
        v = std::exp(-s * p1_);
        break;
    }
    return mass_ * v;
}

double TimeDistribution::laplace_moment(double s) const {
    if (s < 0) throw InvalidArgument("Laplace argument must be nonnegative");
    double v = 0;
    switch (family_) {
    case TimeFamily::Exponential:
        v = p1_ / ((p1_ + s) * (p1_ + s));
        break;
    case TimeFamily::Gamma:
        v = p1_ / (p2_ + s) * std::pow(p2_ / (p2_ + s), p1_);
        break;
    case TimeFamily::Uniform: {
        const double L = p2_ - p1_;
        v = std::exp(-s * p1_) * (p1_ * expint0(s, L) + expint1(s, L)) / L;
        break;
    }
    case TimeFamily::PointMass:
        v = p1_ * std::exp(-s * p1_);
        break;
    }
    return mass_ * v;
}

double TimeDistribution::partial_laplace(double s, double x) const {
    if (x < 0) return 0.0;
    if (std::isinf(x)) return laplace(s);
    double v = 0;
    switch (family_) {
    case TimeFamily::Exponential:
        v = p1_ / (p1_ + s) * -std::expm1(-(p1_ + s) * x);
        break;
    case TimeFamily::Gamma:
        v = std::pow(p2_ / (p2_ + s), p1_) * boost::math::gamma_p(p1_, (p2_ + s) * x);
        break;
    case TimeFamily::Uniform: {
        if (x <= p1_) return 0.0;
        const double c = std::min(x, p2_);
        v = std::exp(-s * p1_) * expint0(s, c - p1_) / (p2_ - p1_);
        break;
    }
    case TimeFamily::PointMass:
        v = x >= p1_ ? std::exp(-s * p1_) : 0.0;
        break;
    }
    return mass_ * v;
}

double TimeDistribution::partial_mean(double x) const {
    if (x < 0) return 0.0;
    if (std::isinf(x)) return mass_ * mean();
    double v = 0;
    switch (family_) {
    case TimeFamily::Exponential:
        v = boost::math::gamma_p(2.0, p1_ * x) / p1_;
        break;
    case TimeFamily::Gamma:
        v = p1_ / p2_ * boost::math::gamma_p(p1_ + 1.0, p2_ * x);
        break;
    case TimeFamily::Uniform: {
        if (x <= p1_) return 0.0;
        const double c = std::min(x, p2_);
        v = (c - p1_) * (c + p1_) / (2.0 * (p2_ - p1_));
        break;
    }
    case TimeFamily::PointMass:
        v = x >= p1_ ? p1_ : 0.0;
        break;
    }
    return mass_ * v;
}

double TimeDistribution::mean() const {
    switch (family_) {
    case TimeFamily::Exponential:
        return 1.0 / p1_;
    case TimeFamily::Gamma:
        return p1_ / p2_;
    case TimeFamily::Uniform:
        return 0.5 * (p1_ + p2_);
    case TimeFamily::PointMass:
        return p1_;
    }
    return 0.0;
}

double TimeDistribution::integrate(const std::function<double(double)>& f, double lo, double hi,
                                   const std::vector<double>& breaks) const {
    if (family_ == TimeFamily::PointMass) return (p1_ >= lo && p1_ <= hi) ? mass_ * f(p1_) : 0.0;
    const double a = std::max(lo, support_lower());
    const double b = std::min(hi, support_upper());
    if (!(b > a)) return 0.0;

    std::vector<double> cuts{a};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(b);

    thread_local boost::math::quadrature::tanh_sinh<double> finite;
    thread_local boost::math::quadrature::exp_sinh<double> semi;
    auto g = [&](double t) {
        const double d = density(t);
        return d == 0.0 ? 0.0 : f(t) * d;
    };
    double total = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double x0 = cuts[i], x1 = cuts[i + 1];
        if (!(x1 > x0)) continue;
        if (std::isinf(x1)) total += semi.integrate(g, x0, kInf, kQuadTol);
        else total += finite.integrate(g, x0, x1, kQuadTol);
    }
    return mass_ * total;
}

double TimeDistribution::proper_sample(RandomStream& rng) const {
    switch (family_) {
    case TimeFamily::Exponential:
        return -std::log(rng.uniform_open01()) / p1_;
    case TimeFamily::Gamma:
        return boost::random::gamma_distribution<double>(p1_, 1.0 / p2_)(rng);
    case TimeFamily::Uniform:
        return p1_ + (p2_ - p1_) * rng.uniform01();
    case TimeFamily::PointMass:
        return p1_;
    }
    return 0.0;
}

double TimeDistribution::sample(RandomStream& rng) const {
    if (mass_ < 1.0 && rng.uniform01() >= mass_) return kInf;
    return proper_sample(rng);
}

std::string TimeDistribution::describe() const {
    std::string base;
    switch (family_) {
    case TimeFamily::Exponential:
        base = "exponential(" + fmt(p1_) + ")";
        break;
    case TimeFamily::Gamma:
        base = "gamma(" + fmt(p1_) + ", " + fmt(p2_) + ")";
        break;
    case TimeFamily::Uniform:
        base = "uniform(" + fmt(p1_) + ", " + fmt(p2_) + ")";
        break;
    case TimeFamily::PointMass:
        base = "point(" + fmt(p1_) + ")";
        break;
    }
    if (mass_ < 1.0) return "defective(" + fmt(mass_) + ", " + base + ")";
    return base;
}

// OffspringLaw

OffspringLaw OffspringLaw::poisson(double mean) {
    if (!(mean >= 0) || !std::isfinite(mean)) throw InvalidArgument("Poisson mean must be >= 0");
    return {OffspringFamily::Poisson, mean, 0.0};
}

OffspringLaw OffspringLaw::geometric(double mean) {
    if (!(mean >= 0) || !std::isfinite(mean)) throw InvalidArgument("geometric mean must be >= 0");
    return {OffspringFamily::Geometric, mean, 0.0};
}

OffspringLaw OffspringLaw::fixed(int count) {
    if (count < 0) throw InvalidArgument("fixed offspring count must be >= 0");
    return {OffspringFamily::Fixed, static_cast<double>(count), 0.0};
}

OffspringLaw OffspringLaw::binomial(int n, double p) {
    if (n < 0 || !(p >= 0) || p > 1) throw InvalidArgument("binomial needs n >= 0 and p in [0, 1]");
    return {OffspringFamily::Binomial, static_cast<double>(n), p};
}

double OffspringLaw::mean() const {
    switch (family_) {
    case OffspringFamily::Poisson:
    case OffspringFamily::Geometric:
    case OffspringFamily::Fixed:
        return p1_;
    case OffspringFamily::Binomial:
        return p1_ * p2_;
    }
    return 0.0;
}

double OffspringLaw::second_moment() const {
    const double m = mean();
    switch (family_) {
    case OffspringFamily::Poisson:
        return m + m * m;
    case OffspringFamily::Geometric:
        return m + 2 * m * m;
    case OffspringFamily::Fixed:
        return m * m;
    case OffspringFamily::Binomial:
        return m * (1 - p2_) + m * m;
    }
    return 0.0;
}

double OffspringLaw::pgf(double s) const {
    switch (family_) {
    case OffspringFamily::Poisson:
        return std::exp(-p1_ * (1 - s));
    case OffspringFamily::Geometric:
        return 1.0 / (1.0 + p1_ * (1 - s));
    case OffspringFamily::Fixed:
        return std::pow(s, p1_);
    case OffspringFamily::Binomial:
        return std::pow(1 - p2_ + p2_ * s, p1_);
    }
    return 1.0;
}

long OffspringLaw::sample(RandomStream& rng) const {
    switch (family_) {
    case OffspringFamily::Poisson:
        if (p1_ == 0) return 0;
        return boost::random::poisson_distribution<long, double>(p1_)(rng);
    case OffspringFamily::Geometric: {
        if (p1_ == 0) return 0;
        // P(X >= k) = r^k with r = mean / (1 + mean)
        const double r = p1_ / (1 + p1_);
        return static_cast<long>(std::floor(std::log(rng.uniform_open01()) / std::log(r)));
    }
    case OffspringFamily::Fixed:
        return static_cast<long>(p1_);
    case OffspringFamily::Binomial:
        return boost::random::binomial_distribution<long, double>(static_cast<long>(p1_), p2_)(rng);
    }
    return 0;
}

std::string OffspringLaw::describe() const {
    switch (family_) {
    case OffspringFamily::Poisson:
        return "poisson(" + fmt(p1_) + ")";
    case OffspringFamily::Geometric:
        return "geometric(" + fmt(p1_) + ")";
    case OffspringFamily::Fixed:
        return "fixed(" + fmt(p1_) + ")";
    case OffspringFamily::Binomial:
        return "binomial(" + fmt(p1_) + ", " + fmt(p2_) + ")";
    }
    return "";
}

} // namespace epicurve
