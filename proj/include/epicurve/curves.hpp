#pragma once

#include "epicurve/branching.hpp"
#include "epicurve/models.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace epicurve {

/// Uniform grid lo, lo + step, ..., hi.
struct Grid {
    double lo = -6.0;
    double hi = 8.0;
    double step = 0.02;

    std::size_t size() const;
    double at(std::size_t i) const { return lo + static_cast<double>(i) * step; }
    std::vector<double> points() const;
};

struct DerivedConstants {
    ModelKind kind;
    int types = 1;
    double lambda = 0;
    double R0 = 0;       ///< mean offspring (single-type) or Perron root of the mean matrix
    double m_star1 = 0;  ///< single-type m-star, or the multitype / configuration m-star(1)
    double m_star2 = 0;  ///< equals m_star1 for single-type models
    double m_star1_backward = 0;
    double m0 = 0;       ///< configuration with identical laws only, else 0
    Eigen::VectorXd zeta, eta, zeta_hat, eta_hat;
    double H = 1, Z = 1, H_hat = 1, Z_hat = 1;
    Eigen::VectorXd c;          ///< pending-birth coefficients
    Eigen::VectorXd w_mean;     ///< E W per initial type, forward
    Eigen::VectorXd w_hat_mean; ///< E W-hat per initial type, backward (configuration: root with all slots)
    /// 1 - s_hat_l(u) ~ boundary_l e^u as u -> -infinity
    Eigen::VectorXd boundary;
    double lattice_span = 0;    ///< 0 for non-lattice models
    double malthus_residual = 0;
    double eigen_residual = 0;

    /// Key = value lines at full precision.
    std::vector<std::string> describe() const;
};

/// True if the model's (reduced) mean matrix has Perron root above 1.
bool supercritical(const ModelSpec& spec);
/// Mean offspring (single-type) or Perron root of the reduced mean matrix at s = 0.
double reproduction_number(const ModelSpec& spec);

double malthusian(const ModelSpec& spec);
DerivedConstants constants(const ModelSpec& spec);

/// Limit law F_l of the residual times to birth of determined but unborn offspring.
class ResidualLaw {
public:
    ResidualLaw(const ModelSpec& spec, double lambda);
    double operator()(double s, int type = 0) const;

private:
    struct Term {
        double weight;
        CensoredKernel kernel;
    };
    double lambda_;
    std::vector<std::vector<Term>> terms_; // per target type
    std::vector<double> norm_;
};

ResidualLaw residual_cdf(const ModelSpec& spec, double lambda);

struct LimitCurve {
    std::vector<double> u;
    std::vector<std::vector<double>> values; ///< values[l][i] = s_hat_l(u_i)
    /// Solver state per type: s_hat itself, or the per-half-edge transform h_l for configuration.
    std::vector<std::vector<double>> state;
    double max_picard_residual = 0;

    int types() const { return static_cast<int>(values.size()); }
};

struct SolverOptions {
    double fine_step = 0.002;  ///< internal marching step, rounded to divide the grid step
    double lead_in = 2.0;      ///< extra marching range left of the grid
    double tolerance = 1e-13;  ///< Picard stopping rule
    int max_iterations = 500;
};

/// Boundary expansion 1 - x_l(u) = a_l e^u - b_l e^{2u} + O(e^{3u}) of the solver state.
struct BoundaryExpansion {
    Eigen::VectorXd first;
    Eigen::VectorXd second;
};

BoundaryExpansion boundary_expansion(const ModelSpec& spec, const DerivedConstants& consts);

LimitCurve solve_s_hat(const ModelSpec& spec, const DerivedConstants& consts, const Grid& grid = {},
                       const SolverOptions& options = {});

/// Max over the grid of the functional-equation residual, evaluated by adaptive quadrature
/// against a cubic B-spline of the curve.
double s_hat_residual(const ModelSpec& spec, const DerivedConstants& consts, const LimitCurve& curve);

/// Sample mean of exp(-W e^u m) on the grid.
std::vector<double> s_hat_monte_carlo(const std::vector<LimitSample>& samples, double m_star2, const Grid& grid);

struct FinalSize {
    double s_inf = 1;           ///< overall final susceptible fraction
    Eigen::VectorXd s_inf_by_type;
    double q_forward = 1;       ///< extinction probability from a random initial individual
    Eigen::VectorXd q_forward_by_type;
    double q_backward = 1;
    Eigen::VectorXd q_backward_by_type;
    /// configuration: per-half-edge escape probabilities (q-tilde in the Volz case)
    Eigen::VectorXd half_edge;
};

FinalSize final_size_and_extinction(const ModelSpec& spec);

/// Root in (0, 1) of -log s = r0 (1 - s); 1 when r0 <= 1.
double final_size_root(double r0);

struct VolzSolution {
    std::vector<double> u;
    std::vector<double> h;
    std::vector<double> p_s;
    std::vector<double> p_i;
    std::vector<std::vector<double>> s_hat; ///< per degree class
    double max_identity_deviation = 0;      ///< p_S and p_I against their closed forms in h
    double max_system_deviation = 0;        ///< h of the three-equation system against the scalar ODE
    bool from_ode = true;
};

VolzSolution volz_ode(const ModelSpec& spec, const DerivedConstants& consts, const Grid& grid = {});

/// Laplace transform of the normalized Galton-Watson limit for Po(mu) offspring.
double gw_psi(double mu, double theta);
std::vector<double> gw_psi(double mu, const std::vector<double>& thetas);

} // namespace epicurve
