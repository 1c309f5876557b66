#pragma once

#include "epicurve/distributions.hpp"
#include "epicurve/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace epicurve {

struct Contact {
    double time;     ///< time since infection of the source
    int target_type; ///< type of the contacted individual
};

/// One draw of the point process of contacts made by an infective.
struct InfectionHistory {
    std::vector<Contact> contacts; ///< ordered by time
    std::optional<double> removal;
};

/// Contacts form a rate-beta Poisson stream killed at an independent Exp(gamma) removal.
struct MarkovSIR {
    double beta;
    double gamma;
};

/// A random number of contacts at i.i.d. times.
struct CountTimes {
    OffspringLaw offspring;
    TimeDistribution times;
};

/// Discrete generations with Po(mu) offspring one time unit after infection.
struct ReedFrost {
    double mu;
};

struct Multitype {
    std::vector<double> proportions;        ///< pi_l
    Eigen::MatrixXd means;                  ///< mu_lk, l infects k
    std::vector<TimeDistribution> times;    ///< G_lk, row-major d x d

    int types() const { return static_cast<int>(proportions.size()); }
    const TimeDistribution& G(int l, int k) const { return times[static_cast<std::size_t>(l * types() + k)]; }
};

/**
 * Epidemic on a configuration-model graph. Type index i stands for degree i + 1.
 * G(k, l) is the contact delay along an edge from a degree-(k+1) infective to a
 * degree-(l+1) neighbour; infectious(k) is the infectious period of a degree-(k+1) vertex.
 */
struct Configuration {
    std::vector<double> degree_probs;         ///< p_k, k = 1..K
    std::vector<TimeDistribution> contact;    ///< row-major K x K
    std::vector<TimeDistribution> infectious; ///< K entries
    std::optional<std::pair<double, double>> volz_rates; ///< (alpha, beta) when built by volz()

    int max_degree() const { return static_cast<int>(degree_probs.size()); }
    const TimeDistribution& G(int k, int l) const { return contact[static_cast<std::size_t>(k * max_degree() + l)]; }
    const TimeDistribution& Phi(int k) const { return infectious[static_cast<std::size_t>(k)]; }
    /// m = sum k p_k
    double mean_degree() const;
    /// m_(2) = sum k (k - 1) p_k
    double second_factorial_moment() const;
    /// Probability that a uniformly chosen half-edge belongs to type k: (k+1) p_{k+1} / m.
    double size_biased(int k) const { return (k + 1) * degree_probs[static_cast<std::size_t>(k)] / mean_degree(); }
    /// True when every G and every Phi coincide.
    bool identical_laws() const;
};

enum class ModelKind { MarkovSIR, CountTimes, ReedFrost, Multitype, Configuration };

/// Immutable, validated model description.
class ModelSpec {
public:
    using Variant = std::variant<MarkovSIR, CountTimes, ReedFrost, Multitype, Configuration>;

    explicit ModelSpec(Variant v);

    static ModelSpec markov_sir(double beta, double gamma);
    static ModelSpec count_times(OffspringLaw offspring, TimeDistribution times);
    static ModelSpec reed_frost(double mu);
    static ModelSpec multitype(std::vector<double> proportions, Eigen::MatrixXd means,
                               std::vector<TimeDistribution> times);
    static ModelSpec configuration(std::vector<double> degree_probs, std::vector<TimeDistribution> contact,
                                   std::vector<TimeDistribution> infectious);
    static ModelSpec volz(std::vector<double> degree_probs, double alpha, double beta);

    ModelKind kind() const;
    std::string kind_name() const;
    int type_count() const;
    bool is_single_type() const { return kind() <= ModelKind::ReedFrost; }
    /// Lattice contact times: limits hold only along integer horizons.
    bool is_lattice() const;

    const Variant& variant() const { return v_; }
    template <class T> const T& as() const { return std::get<T>(v_); }

    /// Single-type: mean number of contacts mu.
    double single_mean() const;
    /// Single-type: relative intensity G = mu^{-1} E xi.
    TimeDistribution single_intensity() const;

    /// Key = value lines describing the model, for output headers.
    std::vector<std::string> describe() const;
    /// True when some time law has an exponential tail (exponential or gamma).
    bool has_exponential_tail() const;

private:
    void validate() const;
    Variant v_;
};

/**
 * The measure (1 - Phi(v)) G(dv): contact along an edge that occurs before the infective
 * is removed. Without a removal law it is just G. Closed forms are used where available.
 */
class CensoredKernel {
public:
    explicit CensoredKernel(TimeDistribution contact, std::optional<TimeDistribution> removal = std::nullopt);

    double mass() const { return laplace(0.0); }
    double laplace(double s) const;
    double laplace_moment(double s) const;
    /// int_{[0,x]} e^{-sv} K(dv)
    double partial_laplace(double s, double x) const;
    /// int_{[0,x]} v K(dv)
    double partial_mean(double x) const;
    double cdf(double x) const { return partial_laplace(0.0, x); }
    /// int_{[lo,hi]} f(v) K(dv)
    double integrate(const std::function<double(double)>& f, double lo, double hi) const;
    double support_upper() const { return contact_.support_upper(); }
    bool closed_form() const { return closed_.has_value(); }

private:
    TimeDistribution contact_;
    std::optional<TimeDistribution> removal_;
    std::optional<TimeDistribution> closed_;
    std::vector<double> breaks_;
};

/// Single-type moments of the contact count, or per-type for multitype and configuration.
struct Moments {
    Eigen::MatrixXd mean;      ///< mean contacts from type l to type k
    Eigen::VectorXd total;     ///< mean total contacts per source type
    Eigen::VectorXd second;    ///< E (total contacts)^2 per source type
};

/// One i.i.d. potential infection history for an infective of `source_type`.
InfectionHistory sample_history(const ModelSpec& spec, int source_type, RandomStream& rng);

/// Configuration history with an explicit number of half-edge slots.
InfectionHistory sample_configuration_history(const Configuration& cfg, int source_type, int slots,
                                              RandomStream& rng);

/// int e^{-st} G(dt) for the single-type relative intensity G.
double relative_intensity_laplace(const ModelSpec& spec, double s);

/// Per-pair analogue: G_lk for multitype, the censored edge kernel for configuration.
double relative_intensity_laplace(const ModelSpec& spec, double s, int from, int to);

Moments moments(const ModelSpec& spec);

/// Edge kernel (1 - Phi_k) G_kl of a configuration model.
CensoredKernel edge_kernel(const Configuration& cfg, int from, int to);

/// Forward branching mean matrix mu(s); for configuration the non-root form with k - 1 slots.
Eigen::MatrixXd mean_matrix(const ModelSpec& spec, double s);
/// -D mu(s)
Eigen::MatrixXd mean_matrix_slope(const ModelSpec& spec, double s);
/// Backward branching mean matrix.
Eigen::MatrixXd backward_mean_matrix(const ModelSpec& spec, double s);

} // namespace epicurve
