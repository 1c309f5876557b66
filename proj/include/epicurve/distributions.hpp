#pragma once

#include "epicurve/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace epicurve {

enum class TimeFamily { Exponential, Gamma, Uniform, PointMass };

/**
 * A distribution on [0, inf] for contact delays and infectious periods.
 *
 * The proper part belongs to one of the families above. A defective distribution keeps the
 * proper part together with a mass in (0, 1]; the remaining 1 - mass sits at infinity. Every
 * method that returns an integral of the measure includes the mass factor.
 */
class TimeDistribution {
public:
    static TimeDistribution exponential(double rate);
    static TimeDistribution gamma(double shape, double rate);
    static TimeDistribution uniform(double a, double b);
    /// Degenerate law at `at` (instant removal uses at = 0).
    static TimeDistribution point_mass(double at);

    /// Same proper part with total mass scaled by `mass`.
    TimeDistribution defective(double mass) const;

    TimeFamily family() const { return family_; }
    double param1() const { return p1_; }
    double param2() const { return p2_; }
    double mass() const { return mass_; }
    bool is_defective() const { return mass_ < 1.0; }
    bool is_lattice() const { return family_ == TimeFamily::PointMass; }

    double support_lower() const;
    double support_upper() const;

    /// mass * P(T <= t)
    double cdf(double t) const;
    /// P(T > t), including the atom at infinity.
    double survival(double t) const { return 1.0 - cdf(t); }

    /// int e^{-st} G(dt)
    double laplace(double s) const;
    /// int t e^{-st} G(dt)
    double laplace_moment(double s) const;
    /// int_{[0,x]} e^{-st} G(dt)
    double partial_laplace(double s, double x) const;
    /// int_{[0,x]} t G(dt)
    double partial_mean(double x) const;
    /// Mean of the proper part.
    double mean() const;

    /// int_{[lo,hi]} f(t) G(dt) by adaptive quadrature, split at `breaks`.
    double integrate(const std::function<double(double)>& f, double lo, double hi,
                     const std::vector<double>& breaks = {}) const;

    /// One draw; +inf with probability 1 - mass.
    double sample(RandomStream& rng) const;

    std::string describe() const;

    bool operator==(const TimeDistribution& o) const {
        return family_ == o.family_ && p1_ == o.p1_ && p2_ == o.p2_ && mass_ == o.mass_;
    }

private:
    TimeDistribution(TimeFamily f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

    double proper_sample(RandomStream& rng) const;
    double density(double t) const;

    TimeFamily family_;
    double p1_;
    double p2_;
    double mass_ = 1.0;
};

enum class OffspringFamily { Poisson, Geometric, Fixed, Binomial };

/// Law of the number of contacts made by one infective.
class OffspringLaw {
public:
    static OffspringLaw poisson(double mean);
    /// Geometric on {0, 1, ...} with the given mean.
    static OffspringLaw geometric(double mean);
    static OffspringLaw fixed(int count);
    static OffspringLaw binomial(int n, double p);

    OffspringFamily family() const { return family_; }
    double mean() const;
    double second_moment() const;
    double pgf(double s) const;
    long sample(RandomStream& rng) const;
    std::string describe() const;

private:
    OffspringLaw(OffspringFamily f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

    OffspringFamily family_;
    double p1_;
    double p2_;
};

} // namespace epicurve
