#include "epicurve/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace epicurve {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool to_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

std::vector<std::string> split_list(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

struct Call {
    std::string name;
    std::vector<std::string> args;
};

// name(arg, arg, ...) with nesting allowed inside arguments
Call parse_call(const std::string& text, const char* what) {
    const std::string t = trim(text);
    const auto open = t.find('(');
    if (open == std::string::npos || t.back() != ')')
        throw InvalidArgument(std::string("cannot parse ") + what + " '" + t + "': expected name(arguments)");
    Call c{lower(trim(t.substr(0, open))), {}};
    int depth = 0;
    std::string cur;
    for (std::size_t i = open + 1; i + 1 < t.size(); ++i) {
        const char ch = t[i];
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (depth < 0) throw InvalidArgument(std::string("unbalanced parentheses in ") + what + " '" + t + "'");
        if (ch == ',' && depth == 0) {
            c.args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (depth != 0) throw InvalidArgument(std::string("unbalanced parentheses in ") + what + " '" + t + "'");
    if (!trim(cur).empty() || !c.args.empty()) c.args.push_back(trim(cur));
    return c;
}

double number_arg(const Call& c, std::size_t i, const char* what) {
    double v;
    if (i >= c.args.size() || !to_double(c.args[i], v))
        throw InvalidArgument(std::string("bad numeric argument ") + std::to_string(i + 1) + " of " + what + " '" + c.name +
                              "'");
    return v;
}

void expect_args(const Call& c, std::size_t n, const char* what) {
    if (c.args.size() != n)
        throw InvalidArgument(std::string(what) + " '" + c.name + "' takes " + std::to_string(n) + " argument(s)");
}

} // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& field, const std::string& message)
    : InvalidArgument(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                      (field.empty() ? std::string() : ": field " + field) + ": " + message),
      line_(line),
      field_(field) {}

TimeDistribution parse_time_distribution(const std::string& text) {
    const Call c = parse_call(text, "distribution");
    if (c.name == "exponential") {
        expect_args(c, 1, "distribution");
        return TimeDistribution::exponential(number_arg(c, 0, "distribution"));
    }
    if (c.name == "gamma") {
        expect_args(c, 2, "distribution");
        return TimeDistribution::gamma(number_arg(c, 0, "distribution"), number_arg(c, 1, "distribution"));
    }
    if (c.name == "uniform") {
        expect_args(c, 2, "distribution");
        return TimeDistribution::uniform(number_arg(c, 0, "distribution"), number_arg(c, 1, "distribution"));
    }
    if (c.name == "point") {
        expect_args(c, 1, "distribution");
        return TimeDistribution::point_mass(number_arg(c, 0, "distribution"));
    }
    if (c.name == "defective") {
        expect_args(c, 2, "distribution");
        return parse_time_distribution(c.args[1]).defective(number_arg(c, 0, "distribution"));
    }
    throw InvalidArgument("unknown distribution '" + c.name + "'");
}

OffspringLaw parse_offspring(const std::string& text) {
    const Call c = parse_call(text, "offspring law");
    if (c.name == "poisson") {
        expect_args(c, 1, "offspring law");
        return OffspringLaw::poisson(number_arg(c, 0, "offspring law"));
    }
    if (c.name == "geometric") {
        expect_args(c, 1, "offspring law");
        return OffspringLaw::geometric(number_arg(c, 0, "offspring law"));
    }
    if (c.name == "fixed") {
        expect_args(c, 1, "offspring law");
        const double k = number_arg(c, 0, "offspring law");
        if (k != std::floor(k)) throw InvalidArgument("fixed offspring count must be an integer");
        return OffspringLaw::fixed(static_cast<int>(k));
    }
    if (c.name == "binomial") {
        expect_args(c, 2, "offspring law");
        const double n = number_arg(c, 0, "offspring law");
        if (n != std::floor(n)) throw InvalidArgument("binomial size must be an integer");
        return OffspringLaw::binomial(static_cast<int>(n), number_arg(c, 1, "offspring law"));
    }
    throw InvalidArgument("unknown offspring law '" + c.name + "'");
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
    RunConfig cfg;
    cfg.text_ = text;
    cfg.source_ = source;
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source, static_cast<int>(e.line()), "", e.message());
    }

    // line numbers of keys, for diagnostics
    std::map<std::string, int> lines;
    {
        std::istringstream in(text);
        std::string line, section;
        for (int n = 1; std::getline(in, line); ++n) {
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t[0] == '[') {
                section = trim(t.substr(1, t.find(']') - 1));
                lines.emplace(section, n);
            } else if (const auto eq = t.find('='); eq != std::string::npos) {
                lines.emplace(section + "." + trim(t.substr(0, eq)), n);
            }
        }
    }

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(source, lines.count(section) ? lines[section] : 0, section, "key outside of a section");
        if (section != "model" && section != "run" && section != "output")
            throw ConfigError(source, lines.count(section) ? lines[section] : 0, section, "unknown section");
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            cfg.sections_[section][key] = Entry{trim(node.data()), lines.count(full) ? lines[full] : 0};
        }
    }
    for (const char* s : {"model", "run", "output"})
        if (lines.count(s)) cfg.sections_[s];
    for (const char* s : {"model", "run", "output"})
        if (!cfg.sections_.count(s)) throw ConfigError(source, 0, s, "missing section [" + std::string(s) + "]");

    const Entry& seed = cfg.require("run", "seed");
    std::uint64_t v = 0;
    const auto r = std::from_chars(seed.value.data(), seed.value.data() + seed.value.size(), v);
    if (r.ec != std::errc() || r.ptr != seed.value.data() + seed.value.size())
        cfg.fail("run", "seed", "expected a nonnegative integer, got '" + seed.value + "'");
    cfg.seed_ = v;
    cfg.model_ = cfg.build_model();
    return cfg;
}

const RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

const RunConfig::Entry& RunConfig::require(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(source_, 0, section + "." + key, "required field is missing");
    return *e;
}

void RunConfig::fail(const std::string& section, const std::string& key, const std::string& message) const {
    const Entry* e = find(section, key);
    throw ConfigError(source_, e ? e->line : 0, section + "." + key, message);
}

bool RunConfig::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

std::string RunConfig::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    double v;
    if (!to_double(e->value, v)) fail(section, key, "expected a number, got '" + e->value + "'");
    return v;
}

long RunConfig::get_long(const std::string& section, const std::string& key, long fallback) const {
    const double v = get_double(section, key, static_cast<double>(fallback));
    if (v != std::floor(v)) fail(section, key, "expected an integer");
    return static_cast<long>(v);
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const std::string v = lower(e->value);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(section, key, "expected true or false, got '" + e->value + "'");
}

std::vector<long> RunConfig::get_longs(const std::string& section, const std::string& key, std::vector<long> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<long> out;
    for (const auto& item : split_list(e->value, " ,\t")) {
        double v;
        if (!to_double(item, v) || v != std::floor(v)) fail(section, key, "expected a list of integers");
        out.push_back(static_cast<long>(v));
    }
    if (out.empty()) fail(section, key, "empty list");
    return out;
}

Grid RunConfig::grid() const {
    Grid g;
    g.lo = get_double("run", "grid_lo", g.lo);
    g.hi = get_double("run", "grid_hi", g.hi);
    g.step = get_double("run", "grid_step", g.step);
    if (!(g.step > 0) || !(g.hi > g.lo)) fail("run", "grid_step", "grid needs grid_lo < grid_hi and grid_step > 0");
    return g;
}

void RunConfig::override_value(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = Entry{value, 0};
}

ModelSpec RunConfig::build_model() const {
    const std::string kind = lower(require("model", "kind").value);
    auto num = [&](const std::string& key) {
        require("model", key);
        return get_double("model", key, 0.0);
    };
    auto numbers = [&](const std::string& key) {
        std::vector<double> out;
        for (const auto& item : split_list(require("model", key).value, " ,\t")) {
            double v;
            if (!to_double(item, v)) fail("model", key, "expected a list of numbers");
            out.push_back(v);
        }
        if (out.empty()) fail("model", key, "empty list");
        return out;
    };
    auto law = [&](const std::string& key, const std::string& fallback_key) {
        const std::string& k = has("model", key) ? key : fallback_key;
        try {
            return parse_time_distribution(require("model", k).value);
        } catch (const ConfigError&) {
            throw;
        } catch (const InvalidArgument& e) {
            fail("model", k, e.what());
        }
    };

    try {
        if (kind == "markov_sir") return ModelSpec::markov_sir(num("beta"), num("gamma"));
        if (kind == "reed_frost") return ModelSpec::reed_frost(num("mu"));
        if (kind == "count_times") {
            OffspringLaw off = [&] {
                try {
                    return parse_offspring(require("model", "offspring").value);
                } catch (const ConfigError&) {
                    throw;
                } catch (const InvalidArgument& e) {
                    fail("model", "offspring", e.what());
                }
            }();
            return ModelSpec::count_times(off, law("times", "times"));
        }
        if (kind == "multitype") {
            const auto props = numbers("proportions");
            const int d = static_cast<int>(props.size());
            const auto rows = split_list(require("model", "means").value, ";");
            if (static_cast<int>(rows.size()) != d) fail("model", "means", "expected " + std::to_string(d) + " rows separated by ';'");
            Eigen::MatrixXd means(d, d);
            for (int l = 0; l < d; ++l) {
                const auto cols = split_list(rows[static_cast<std::size_t>(l)], " ,\t");
                if (static_cast<int>(cols.size()) != d) fail("model", "means", "row " + std::to_string(l + 1) + " needs " + std::to_string(d) + " entries");
                for (int k = 0; k < d; ++k)
                    if (!to_double(cols[static_cast<std::size_t>(k)], means(l, k))) fail("model", "means", "expected numbers");
            }
            std::vector<TimeDistribution> times;
            for (int l = 0; l < d; ++l)
                for (int k = 0; k < d; ++k)
                    times.push_back(law("times." + std::to_string(l + 1) + "." + std::to_string(k + 1), "times"));
            return ModelSpec::multitype(props, means, times);
        }
        if (kind == "configuration") {
            const auto p = numbers("degree_probs");
            const int K = static_cast<int>(p.size());
            std::vector<TimeDistribution> contact, infectious;
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < K; ++l)
                    contact.push_back(law("contact." + std::to_string(k + 1) + "." + std::to_string(l + 1), "contact"));
            for (int k = 0; k < K; ++k) infectious.push_back(law("infectious." + std::to_string(k + 1), "infectious"));
            return ModelSpec::configuration(p, contact, infectious);
        }
        if (kind == "volz") return ModelSpec::volz(numbers("degree_probs"), num("alpha"), num("beta"));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        fail("model", "kind", e.what());
    }
    fail("model", "kind",
         "unknown model kind '" + kind + "' (expected markov_sir, count_times, reed_frost, multitype, configuration or volz)");
}

} // namespace epicurve
