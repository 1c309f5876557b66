#include "epicurve/models.hpp"

#include <cmath>
#include <limits>

namespace epicurve {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CensoredKernel::CensoredKernel(TimeDistribution contact, std::optional<TimeDistribution> removal)
    : contact_(contact), removal_(removal) {
    if (!removal_) {
        closed_ = contact_;
        return;
    }
    const auto& phi = *removal_;
    if (contact_.family() == TimeFamily::Exponential && phi.family() == TimeFamily::Exponential &&
        !phi.is_defective()) {
        // e^{-bv} a e^{-av} dv = (a / (a + b)) Exp(a + b)
        const double a = contact_.param1(), b = phi.param1();
        closed_ = TimeDistribution::exponential(a + b).defective(contact_.mass() * a / (a + b));
        return;
    }
    breaks_ = {phi.support_lower(), phi.support_upper()};
}

double CensoredKernel::laplace(double s) const {
    if (closed_) return closed_->laplace(s);
    return integrate([s](double v) { return std::exp(-s * v); }, 0, kInf);
}

double CensoredKernel::laplace_moment(double s) const {
    if (closed_) return closed_->laplace_moment(s);
    return integrate([s](double v) { return v * std::exp(-s * v); }, 0, kInf);
}

double CensoredKernel::partial_laplace(double s, double x) const {
    if (closed_) return closed_->partial_laplace(s, x);
    return integrate([s](double v) { return std::exp(-s * v); }, 0, x);
}

double CensoredKernel::partial_mean(double x) const {
    if (closed_) return closed_->partial_mean(x);
    return integrate([](double v) { return v; }, 0, x);
}

double CensoredKernel::integrate(const std::function<double(double)>& f, double lo, double hi) const {
    if (!removal_) return contact_.integrate(f, lo, hi);
    const auto& phi = *removal_;
    return contact_.integrate([&](double v) { return f(v) * phi.survival(v); }, lo, hi, breaks_);
}

} // namespace epicurve
