#include "epicurve/linalg.hpp"
#include "epicurve/errors.hpp"

#include <cmath>

namespace epicurve {

namespace {

Eigen::VectorXd power_vector(const Eigen::MatrixXd& b) {
    const auto n = b.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double delta = 1.0;
    for (int it = 0; it < 200000; ++it) {
        Eigen::VectorXd y = b * x;
        const double norm = y.sum();
        if (!(norm > 0)) throw InvalidArgument("perron: matrix has a zero row sum pattern");
        y /= norm;
        delta = (y - x).lpNorm<Eigen::Infinity>();
        x = y;
        if (delta < 1e-15) return x;
    }
    if (delta > 1e-12) throw ConvergenceError("perron: power iteration did not converge", delta);
    return x;
}

} // namespace

PerronPair perron(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("perron: square matrix required");
    if (a.rows() == 1) return {a(0, 0), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
    const Eigen::MatrixXd shifted = a + Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::VectorXd right = power_vector(shifted);
    Eigen::VectorXd left = power_vector(shifted.transpose());
    const double root = left.dot(a * right) / left.dot(right);
    left /= left.sum();
    right /= left.dot(right);
    return {root, left, right};
}

double perron_root(const Eigen::MatrixXd& a) { return perron(a).root; }

} // namespace epicurve
