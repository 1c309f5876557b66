#include "epicurve/models.hpp"
#include "epicurve/errors.hpp"

#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
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

bool irreducible(const Eigen::MatrixXd& a) {
    const auto d = a.rows();
    for (Eigen::Index start = 0; start < d; ++start) {
        std::vector<bool> seen(static_cast<std::size_t>(d), false);
        std::vector<Eigen::Index> stack{start};
        seen[static_cast<std::size_t>(start)] = true;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < d; ++j)
                if (a(i, j) > 0 && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = true;
                    stack.push_back(j);
                }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
    }
    return true;
}

void sort_contacts(std::vector<Contact>& c) {
    std::stable_sort(c.begin(), c.end(), [](const Contact& a, const Contact& b) { return a.time < b.time; });
}

int draw_size_biased(const Configuration& cfg, RandomStream& rng) {
    const int K = cfg.max_degree();
    double u = rng.uniform01() * cfg.mean_degree();
    for (int k = 0; k < K; ++k) {
        u -= (k + 1) * cfg.degree_probs[static_cast<std::size_t>(k)];
        if (u < 0) return k;
    }
    for (int k = K - 1; k >= 0; --k)
        if (cfg.degree_probs[static_cast<std::size_t>(k)] > 0) return k;
    return K - 1;
}

} // namespace

double Configuration::mean_degree() const {
    double m = 0;
    for (std::size_t k = 0; k < degree_probs.size(); ++k) m += static_cast<double>(k + 1) * degree_probs[k];
    return m;
}

double Configuration::second_factorial_moment() const {
    double m = 0;
    for (std::size_t k = 0; k < degree_probs.size(); ++k)
        m += static_cast<double>(k + 1) * static_cast<double>(k) * degree_probs[k];
    return m;
}

bool Configuration::identical_laws() const {
    return std::all_of(contact.begin(), contact.end(), [&](const TimeDistribution& g) { return g == contact[0]; }) &&
           std::all_of(infectious.begin(), infectious.end(),
                       [&](const TimeDistribution& f) { return f == infectious[0]; });
}

ModelSpec::ModelSpec(Variant v) : v_(std::move(v)) { validate(); }

ModelSpec ModelSpec::markov_sir(double beta, double gamma) { return ModelSpec(MarkovSIR{beta, gamma}); }

ModelSpec ModelSpec::count_times(OffspringLaw offspring, TimeDistribution times) {
    return ModelSpec(CountTimes{offspring, times});
}

ModelSpec ModelSpec::reed_frost(double mu) { return ModelSpec(ReedFrost{mu}); }

ModelSpec ModelSpec::multitype(std::vector<double> proportions, Eigen::MatrixXd means,
                               std::vector<TimeDistribution> times) {
    return ModelSpec(Multitype{std::move(proportions), std::move(means), std::move(times)});
}

ModelSpec ModelSpec::configuration(std::vector<double> degree_probs, std::vector<TimeDistribution> contact,
                                   std::vector<TimeDistribution> infectious) {
    return ModelSpec(Configuration{std::move(degree_probs), std::move(contact), std::move(infectious), std::nullopt});
}

ModelSpec ModelSpec::volz(std::vector<double> degree_probs, double alpha, double beta) {
    const std::size_t K = degree_probs.size();
    Configuration cfg{std::move(degree_probs),
                      std::vector<TimeDistribution>(K * K, TimeDistribution::exponential(alpha)),
                      std::vector<TimeDistribution>(K, TimeDistribution::exponential(beta)),
                      std::make_pair(alpha, beta)};
    return ModelSpec(std::move(cfg));
}

void ModelSpec::validate() const {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, MarkovSIR>) {
                if (!(m.beta > 0) || !(m.gamma > 0) || !std::isfinite(m.beta) || !std::isfinite(m.gamma))
                    throw InvalidArgument("markov_sir: beta and gamma must be positive");
            } else if constexpr (std::is_same_v<T, CountTimes>) {
                if (m.times.is_defective()) throw InvalidArgument("count_times: contact-time law must be proper");
            } else if constexpr (std::is_same_v<T, ReedFrost>) {
                if (!(m.mu > 0) || !std::isfinite(m.mu)) throw InvalidArgument("reed_frost: mu must be positive");
            } else if constexpr (std::is_same_v<T, Multitype>) {
                const auto d = static_cast<Eigen::Index>(m.proportions.size());
                if (d < 1) throw InvalidArgument("multitype: at least one type required");
                double total = 0;
                for (double p : m.proportions) {
                    if (!(p > 0)) throw InvalidArgument("multitype: proportions must be positive");
                    total += p;
                }
                if (std::abs(total - 1) > 1e-9) throw InvalidArgument("multitype: proportions must sum to 1");
                if (m.means.rows() != d || m.means.cols() != d)
                    throw InvalidArgument("multitype: mean matrix must be d x d");
                if (!(m.means.array() >= 0).all() || !m.means.allFinite())
                    throw InvalidArgument("multitype: mean matrix must be nonnegative and finite");
                if (static_cast<Eigen::Index>(m.times.size()) != d * d)
                    throw InvalidArgument("multitype: need d x d contact-time laws");
                for (const auto& g : m.times)
                    if (g.is_defective()) throw InvalidArgument("multitype: contact-time laws must be proper");
                if (!irreducible(m.means)) throw InvalidArgument("multitype: mean matrix must be irreducible");
            } else {
                const auto K = m.degree_probs.size();
                if (K < 1) throw InvalidArgument("configuration: empty degree distribution");
                double total = 0;
                for (double p : m.degree_probs) {
                    if (!(p >= 0)) throw InvalidArgument("configuration: degree probabilities must be >= 0");
                    total += p;
                }
                if (std::abs(total - 1) > 1e-9) throw InvalidArgument("configuration: degree probabilities must sum to 1");
                if (m.contact.size() != K * K) throw InvalidArgument("configuration: need K x K contact laws");
                if (m.infectious.size() != K) throw InvalidArgument("configuration: need K infectious-period laws");
            }
        },
        v_);
}

ModelKind ModelSpec::kind() const { return static_cast<ModelKind>(v_.index()); }

std::string ModelSpec::kind_name() const {
    switch (kind()) {
    case ModelKind::MarkovSIR:
        return "markov_sir";
    case ModelKind::CountTimes:
        return "count_times";
    case ModelKind::ReedFrost:
        return "reed_frost";
    case ModelKind::Multitype:
        return "multitype";
    case ModelKind::Configuration:
        return as<Configuration>().volz_rates ? "volz" : "configuration";
    }
    return "";
}

int ModelSpec::type_count() const {
    switch (kind()) {
    case ModelKind::Multitype:
        return as<Multitype>().types();
    case ModelKind::Configuration:
        return as<Configuration>().max_degree();
    default:
        return 1;
    }
}

bool ModelSpec::is_lattice() const {
    switch (kind()) {
    case ModelKind::ReedFrost:
        return true;
    case ModelKind::CountTimes:
        return as<CountTimes>().times.is_lattice();
    default:
        return false;
    }
}

double ModelSpec::single_mean() const {
    switch (kind()) {
    case ModelKind::MarkovSIR:
        return as<MarkovSIR>().beta / as<MarkovSIR>().gamma;
    case ModelKind::CountTimes:
        return as<CountTimes>().offspring.mean();
    case ModelKind::ReedFrost:
        return as<ReedFrost>().mu;
    default:
        throw InvalidArgument("single_mean: not a single-type model");
    }
}

TimeDistribution ModelSpec::single_intensity() const {
    switch (kind()) {
    case ModelKind::MarkovSIR:
        return TimeDistribution::exponential(as<MarkovSIR>().gamma);
    case ModelKind::CountTimes:
        return as<CountTimes>().times;
    case ModelKind::ReedFrost:
        return TimeDistribution::point_mass(1.0);
    default:
        throw InvalidArgument("single_intensity: not a single-type model");
    }
}

std::vector<std::string> ModelSpec::describe() const {
    std::vector<std::string> out{"model = " + kind_name()};
    switch (kind()) {
    case ModelKind::MarkovSIR:
        out.push_back("beta = " + num(as<MarkovSIR>().beta));
        out.push_back("gamma = " + num(as<MarkovSIR>().gamma));
        break;
    case ModelKind::CountTimes:
        out.push_back("offspring = " + as<CountTimes>().offspring.describe());
        out.push_back("times = " + as<CountTimes>().times.describe());
        break;
    case ModelKind::ReedFrost:
        out.push_back("mu = " + num(as<ReedFrost>().mu));
        break;
    case ModelKind::Multitype: {
        const auto& m = as<Multitype>();
        std::string pi = "proportions =";
        for (double p : m.proportions) pi += " " + num(p);
        out.push_back(pi);
        for (int l = 0; l < m.types(); ++l) {
            std::string row = "means." + std::to_string(l + 1) + " =";
            for (int k = 0; k < m.types(); ++k) row += " " + num(m.means(l, k));
            out.push_back(row);
        }
        for (int l = 0; l < m.types(); ++l)
            for (int k = 0; k < m.types(); ++k)
                out.push_back("times." + std::to_string(l + 1) + "." + std::to_string(k + 1) + " = " +
                              m.G(l, k).describe());
        break;
    }
    case ModelKind::Configuration: {
        const auto& c = as<Configuration>();
        std::string p = "degrees =";
        for (double x : c.degree_probs) p += " " + num(x);
        out.push_back(p);
        if (c.volz_rates) {
            out.push_back("alpha = " + num(c.volz_rates->first));
            out.push_back("beta = " + num(c.volz_rates->second));
        } else {
            for (int k = 0; k < c.max_degree(); ++k)
                for (int l = 0; l < c.max_degree(); ++l)
                    out.push_back("contact." + std::to_string(k + 1) + "." + std::to_string(l + 1) + " = " +
                                  c.G(k, l).describe());
            for (int k = 0; k < c.max_degree(); ++k)
                out.push_back("infectious." + std::to_string(k + 1) + " = " + c.Phi(k).describe());
        }
        break;
    }
    }
    out.push_back(std::string("exponential_tail = ") + (has_exponential_tail() ? "yes" : "no"));
    return out;
}

bool ModelSpec::has_exponential_tail() const {
    auto light = [](const TimeDistribution& d) {
        return d.family() == TimeFamily::Exponential || d.family() == TimeFamily::Gamma;
    };
    switch (kind()) {
    case ModelKind::MarkovSIR:
        return true;
    case ModelKind::CountTimes:
        return light(as<CountTimes>().times);
    case ModelKind::ReedFrost:
        return false;
    case ModelKind::Multitype: {
        const auto& m = as<Multitype>();
        for (int l = 0; l < m.types(); ++l)
            for (int k = 0; k < m.types(); ++k)
                if (light(m.G(l, k))) return true;
        return false;
    }
    case ModelKind::Configuration: {
        const auto& c = as<Configuration>();
        for (int k = 0; k < c.max_degree(); ++k) {
            if (light(c.Phi(k))) return true;
            for (int l = 0; l < c.max_degree(); ++l)
                if (light(c.G(k, l))) return true;
        }
        return false;
    }
    }
    return false;
}

InfectionHistory sample_configuration_history(const Configuration& cfg, int source_type, int slots,
                                              RandomStream& rng) {
    InfectionHistory h;
    const double T = cfg.Phi(source_type).sample(rng);
    if (std::isfinite(T)) h.removal = T;
    for (int r = 0; r < slots; ++r) {
        const int k = draw_size_biased(cfg, rng);
        const double v = cfg.G(source_type, k).sample(rng);
        if (v < T) h.contacts.push_back({v, k});
    }
    sort_contacts(h.contacts);
    return h;
}

InfectionHistory sample_history(const ModelSpec& spec, int source_type, RandomStream& rng) {
    if (source_type < 0 || source_type >= spec.type_count()) throw InvalidArgument("sample_history: invalid type index");
    InfectionHistory h;
    switch (spec.kind()) {
    case ModelKind::MarkovSIR: {
        const auto& m = spec.as<MarkovSIR>();
        const double T = -std::log(rng.uniform_open01()) / m.gamma;
        h.removal = T;
        double t = 0;
        for (;;) {
            t += -std::log(rng.uniform_open01()) / m.beta;
            if (t > T) break;
            h.contacts.push_back({t, 0});
        }
        return h;
    }
    case ModelKind::CountTimes: {
        const auto& m = spec.as<CountTimes>();
        const long n = m.offspring.sample(rng);
        h.contacts.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) h.contacts.push_back({m.times.sample(rng), 0});
        sort_contacts(h.contacts);
        return h;
    }
    case ModelKind::ReedFrost: {
        const long n = boost::random::poisson_distribution<long, double>(spec.as<ReedFrost>().mu)(rng);
        h.contacts.assign(static_cast<std::size_t>(n), Contact{1.0, 0});
        h.removal = 1.0;
        return h;
    }
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        for (int k = 0; k < m.types(); ++k) {
            const double mean = m.means(source_type, k);
            if (mean <= 0) continue;
            const long n = OffspringLaw::poisson(mean).sample(rng);
            for (long i = 0; i < n; ++i) h.contacts.push_back({m.G(source_type, k).sample(rng), k});
        }
        sort_contacts(h.contacts);
        return h;
    }
    case ModelKind::Configuration:
        return sample_configuration_history(spec.as<Configuration>(), source_type, source_type + 1, rng);
    }
    return h;
}

double relative_intensity_laplace(const ModelSpec& spec, double s) {
    if (!spec.is_single_type()) throw InvalidArgument("relative_intensity_laplace: model has several types");
    return spec.single_intensity().laplace(s);
}

double relative_intensity_laplace(const ModelSpec& spec, double s, int from, int to) {
    if (from < 0 || to < 0 || from >= spec.type_count() || to >= spec.type_count())
        throw InvalidArgument("relative_intensity_laplace: invalid type index");
    switch (spec.kind()) {
    case ModelKind::Multitype:
        return spec.as<Multitype>().G(from, to).laplace(s);
    case ModelKind::Configuration:
        return edge_kernel(spec.as<Configuration>(), from, to).laplace(s);
    default:
        return relative_intensity_laplace(spec, s);
    }
}

CensoredKernel edge_kernel(const Configuration& cfg, int from, int to) {
    return CensoredKernel(cfg.G(from, to), cfg.Phi(from));
}

Moments moments(const ModelSpec& spec) {
    Moments out;
    const int d = spec.type_count();
    out.mean = Eigen::MatrixXd::Zero(d, d);
    out.total = Eigen::VectorXd::Zero(d);
    out.second = Eigen::VectorXd::Zero(d);
    switch (spec.kind()) {
    case ModelKind::MarkovSIR: {
        const double rho = spec.single_mean();
        out.mean(0, 0) = rho;
        out.second(0) = rho + 2 * rho * rho;
        break;
    }
    case ModelKind::CountTimes:
        out.mean(0, 0) = spec.as<CountTimes>().offspring.mean();
        out.second(0) = spec.as<CountTimes>().offspring.second_moment();
        break;
    case ModelKind::ReedFrost: {
        const double mu = spec.as<ReedFrost>().mu;
        out.mean(0, 0) = mu;
        out.second(0) = mu + mu * mu;
        break;
    }
    case ModelKind::Multitype: {
        out.mean = spec.as<Multitype>().means;
        for (int l = 0; l < d; ++l) {
            const double m = out.mean.row(l).sum();
            out.second(l) = m + m * m;
        }
        break;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        for (int l = 0; l < d; ++l) {
            const int slots = l + 1;
            for (int k = 0; k < d; ++k) out.mean(l, k) = slots * c.size_biased(k) * edge_kernel(c, l, k).mass();
            // given removal time t, each slot realizes independently with probability p(t)
            auto p = [&](double t) {
                double s = 0;
                for (int k = 0; k < d; ++k) s += c.size_biased(k) * c.G(l, k).cdf(t);
                return s;
            };
            const auto& Phi = c.Phi(l);
            const double p_inf = p(kInf);
            const double atom = 1.0 - Phi.mass();
            const double e1 = Phi.integrate(p, 0, kInf) + atom * p_inf;
            const double e2 = Phi.integrate([&](double t) { return p(t) * p(t); }, 0, kInf) + atom * p_inf * p_inf;
            out.second(l) = slots * e1 + slots * (slots - 1.0) * e2;
        }
        break;
    }
    }
    out.total = out.mean.rowwise().sum();
    return out;
}

Eigen::MatrixXd mean_matrix(const ModelSpec& spec, double s) {
    const int d = spec.type_count();
    Eigen::MatrixXd a(d, d);
    switch (spec.kind()) {
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        for (int l = 0; l < d; ++l)
            for (int k = 0; k < d; ++k) a(l, k) = m.means(l, k) * m.G(l, k).laplace(s);
        return a;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        for (int l = 0; l < d; ++l)
            for (int k = 0; k < d; ++k) a(l, k) = l * c.size_biased(k) * edge_kernel(c, l, k).laplace(s);
        return a;
    }
    default:
        a(0, 0) = spec.single_mean() * spec.single_intensity().laplace(s);
        return a;
    }
}

Eigen::MatrixXd mean_matrix_slope(const ModelSpec& spec, double s) {
    const int d = spec.type_count();
    Eigen::MatrixXd a(d, d);
    switch (spec.kind()) {
    case ModelKind::Multitype: {
        const auto& m = spec.as<Multitype>();
        for (int l = 0; l < d; ++l)
            for (int k = 0; k < d; ++k) a(l, k) = m.means(l, k) * m.G(l, k).laplace_moment(s);
        return a;
    }
    case ModelKind::Configuration: {
        const auto& c = spec.as<Configuration>();
        for (int l = 0; l < d; ++l)
            for (int k = 0; k < d; ++k) a(l, k) = l * c.size_biased(k) * edge_kernel(c, l, k).laplace_moment(s);
        return a;
    }
    default:
        a(0, 0) = spec.single_mean() * spec.single_intensity().laplace_moment(s);
        return a;
    }
}

Eigen::MatrixXd backward_mean_matrix(const ModelSpec& spec, double s) {
    if (spec.kind() != ModelKind::Configuration) return mean_matrix(spec, s).transpose();
    const auto& c = spec.as<Configuration>();
    const int d = spec.type_count();
    Eigen::MatrixXd a(d, d);
    for (int l = 0; l < d; ++l)
        for (int k = 0; k < d; ++k) a(l, k) = l * c.size_biased(k) * edge_kernel(c, k, l).laplace(s);
    return a;
}

} // namespace epicurve
