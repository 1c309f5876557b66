#pragma once

#include <Eigen/Dense>

namespace epicurve {

struct PerronPair {
    double root;
    Eigen::VectorXd left;  ///< positive, sums to 1
    Eigen::VectorXd right; ///< positive, left' right = 1
};

/// Dominant eigenvalue and eigenvectors of an irreducible nonnegative matrix.
/// Power iteration on A + I, which is primitive whenever A is irreducible.
PerronPair perron(const Eigen::MatrixXd& a);

/// Dominant eigenvalue only.
double perron_root(const Eigen::MatrixXd& a);

} // namespace epicurve
