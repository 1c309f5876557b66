#include "epicurve/cli.hpp"
#include "epicurve/config.hpp"
#include "epicurve/curves.hpp"
#include "epicurve/epidemic.hpp"
#include "epicurve/errors.hpp"
#include "epicurve/format.hpp"
#include "epicurve/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace epicurve {

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<long> replicates;
};

class Session {
public:
    Session(std::string command, const std::string& path, const Overrides& o, std::ostream& out)
        : command_(std::move(command)), cfg_(RunConfig::load(path)), out_(out) {
        if (o.seed) cfg_.override_seed(*o.seed);
        if (o.out) cfg_.override_value("output", "directory", *o.out);
        if (o.replicates) cfg_.override_value("run", "replicates", std::to_string(*o.replicates));
        overrides_ = o;
    }

    const RunConfig& cfg() const { return cfg_; }
    const ModelSpec& spec() const { return cfg_.model(); }
    RandomStream master() const { return RandomStream(cfg_.seed()); }
    std::ostream& out() { return out_; }

    /// Opens a file in the output directory and writes the provenance header.
    std::ofstream open(const std::string& name) {
        const std::filesystem::path dir = cfg_.output_directory();
        std::filesystem::create_directories(dir);
        std::ofstream f(dir / name);
        if (!f) throw InvalidArgument("cannot write " + (dir / name).string());
        f << "# epicurve " << kVersion << '\n';
        f << "# command = " << command_ << '\n';
        f << "# seed = " << cfg_.seed() << '\n';
        if (overrides_.seed) f << "# override --seed = " << *overrides_.seed << '\n';
        if (overrides_.out) f << "# override --out = " << *overrides_.out << '\n';
        if (overrides_.replicates) f << "# override --replicates = " << *overrides_.replicates << '\n';
        f << "# config begin\n";
        std::istringstream text(cfg_.text());
        for (std::string line; std::getline(text, line);) f << "#   " << line << '\n';
        f << "# config end\n";
        return f;
    }

private:
    std::string command_;
    RunConfig cfg_;
    std::ostream& out_;
    Overrides overrides_;
};

int cmd_constants(Session& s) {
    const DerivedConstants c = constants(s.spec());
    auto f = s.open("constants.txt");
    for (const auto& line : s.spec().describe()) {
        f << line << '\n';
        s.out() << line << '\n';
    }
    for (const auto& line : c.describe()) {
        f << line << '\n';
        s.out() << line << '\n';
    }
    return kExitOk;
}

int cmd_curve(Session& s) {
    const auto& cfg = s.cfg();
    const DerivedConstants c = constants(s.spec());
    const Grid grid = cfg.grid();
    const LimitCurve curve = solve_s_hat(s.spec(), c, grid);
    const int d = curve.types();
    const long samples = cfg.get_long("run", "samples", 10'000);
    if (samples < 0) cfg.fail("run", "samples", "must be nonnegative");
    const double growth = cfg.get_double("run", "growth", 1e3);

    std::vector<std::vector<double>> mc;
    if (samples > 0) {
        const double T = default_horizon(s.spec(), c.lambda, growth);
        const RandomStream rng = s.master();
        for (int l = 0; l < d; ++l) {
            RandomStream r = rng.split(static_cast<std::uint64_t>(l));
            const auto w = sample_W(s.spec(), Direction::Backward, c.lambda, T, static_cast<int>(samples), r, l);
            mc.push_back(s_hat_monte_carlo(w, c.m_star2, grid));
        }
    }
    std::optional<VolzSolution> volz;
    if (s.spec().kind() == ModelKind::Configuration && s.spec().as<Configuration>().volz_rates)
        volz = volz_ode(s.spec(), c, grid);

    auto f = s.open("curve.csv");
    f << "# max_picard_residual = " << fmt(curve.max_picard_residual) << '\n';
    f << "u";
    for (int l = 0; l < d; ++l) f << ",s_hat_" << l;
    for (std::size_t l = 0; l < mc.size(); ++l) f << ",monte_carlo_" << l;
    if (volz) f << ",h,p_S,p_I";
    f << '\n';
    for (std::size_t i = 0; i < curve.u.size(); ++i) {
        f << fmt(curve.u[i]);
        for (int l = 0; l < d; ++l) f << ',' << fmt(curve.values[static_cast<std::size_t>(l)][i]);
        for (const auto& m : mc) f << ',' << fmt(m[i]);
        if (volz) f << ',' << fmt(volz->h[i]) << ',' << fmt(volz->p_s[i]) << ',' << fmt(volz->p_i[i]);
        f << '\n';
    }
    s.out() << "points = " << curve.u.size() << '\n';
    s.out() << "types = " << d << '\n';
    s.out() << "max_picard_residual = " << fmt(curve.max_picard_residual) << '\n';
    for (std::size_t l = 0; l < mc.size(); ++l) {
        double sup = 0;
        for (std::size_t i = 0; i < mc[l].size(); ++i) sup = std::max(sup, std::abs(mc[l][i] - curve.values[l][i]));
        s.out() << "sup_distance_monte_carlo_" << l << " = " << fmt(sup) << '\n';
    }
    if (volz) {
        s.out() << "volz_identity_deviation = " << fmt(volz->max_identity_deviation) << '\n';
        s.out() << "volz_system_deviation = " << fmt(volz->max_system_deviation) << '\n';
    }
    return kExitOk;
}

int cmd_simulate(Session& s) {
    const auto& cfg = s.cfg();
    const auto Ns = cfg.get_longs("run", "N", {100'000});
    const long reps = cfg.get_long("run", "replicates", 1);
    if (reps < 1) cfg.fail("run", "replicates", "must be positive");
    const long I0 = cfg.get_long("run", "I0", 1);
    EpidemicOptions opt;
    opt.without_replacement = cfg.get_bool("run", "without_replacement", false);
    opt.threshold_factor = cfg.get_double("run", "threshold_factor", 1.0);
    const RandomStream rng = s.master();
    s.out() << "N,replicate,major,tau_N,infections,final_fraction\n";
    for (std::size_t j = 0; j < Ns.size(); ++j)
        for (long i = 0; i < reps; ++i) {
            RandomStream r = rng.split(j).split(static_cast<std::uint64_t>(i));
            const Trajectory t = simulate(s.spec(), Ns[j], I0, r, opt);
            auto f = s.open("trajectory_N" + std::to_string(Ns[j]) + "_" + std::to_string(i) + ".csv");
            write_trajectory_csv(f, t, cfg.seed(), {"replicate = " + std::to_string(i)});
            s.out() << t.N << ',' << i << ',' << (t.major ? 1 : 0) << ',' << fmt(t.tau_N) << ',' << t.infections() << ','
                    << fmt(static_cast<double>(t.susceptible_total(std::numeric_limits<double>::infinity())) /
                           static_cast<double>(t.N))
                    << '\n';
        }
    return kExitOk;
}

void emit(Session& s, const ExperimentReport& rep) {
    {
        auto f = s.open(rep.experiment + ".csv");
        rep.write_csv(f);
    }
    auto f = s.open(rep.experiment + "_summary.txt");
    rep.write_summary(f);
    rep.write_summary(s.out());
}

int cmd_verify(Session& s) {
    const auto& cfg = s.cfg();
    const RandomStream rng = s.master();
    std::string list = cfg.get_string("run", "verify", "curve_convergence stationary_laws extinction");
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream names(list);
    bool all_pass = true;
    for (std::string name; names >> name;) {
        std::optional<ExperimentReport> rep;
        if (name == "curve_convergence") {
            ConvergenceOptions o;
            o.u_lo = cfg.get_double("run", "u_lo", o.u_lo);
            o.u_hi = cfg.get_double("run", "u_hi", o.u_hi);
            o.u_step = cfg.get_double("run", "u_step", o.u_step);
            o.tolerance = cfg.get_double("run", "tolerance", o.tolerance);
            o.final_tolerance = cfg.get_double("run", "final_tolerance", o.final_tolerance);
            o.threshold_factor = cfg.get_double("run", "threshold_factor", o.threshold_factor);
            const auto Ns = cfg.get_longs("run", "N", {1'000, 10'000, 100'000});
            const long M = cfg.get_long("run", "replicates", 100);
            rep = curve_convergence(s.spec(), Ns, static_cast<int>(M), rng.split(0), o);
        } else if (name == "stationary_laws") {
            StationaryOptions o;
            o.tolerance = cfg.get_double("run", "ks_tolerance", o.tolerance);
            o.fraction_tolerance = cfg.get_double("run", "fraction_tolerance", o.fraction_tolerance);
            o.runs = static_cast<int>(cfg.get_long("run", "stationary_runs", o.runs));
            o.min_births = cfg.get_long("run", "min_births", o.min_births);
            const double lambda = malthusian(s.spec());
            const double T = cfg.get_double("run", "T", std::log(10.0 * static_cast<double>(o.min_births)) / lambda);
            rep = stationary_laws_check(s.spec(), T, rng.split(1), o);
        } else if (name == "extinction") {
            const long N = cfg.get_long("run", "extinction_N", 10'000);
            const long M = cfg.get_long("run", "extinction_replicates", 2'000);
            for (long I0 : cfg.get_longs("run", "I0", {1})) {
                auto r = extinction_check(s.spec(), N, static_cast<int>(M), I0, rng.split(2).split(static_cast<std::uint64_t>(I0)));
                r.experiment += "_I0_" + std::to_string(I0);
                all_pass = all_pass && r.passed();
                emit(s, r);
            }
            continue;
        } else if (name == "curve_cross_validation") {
            CrossValidationOptions o;
            o.samples = static_cast<int>(cfg.get_long("run", "samples", o.samples));
            o.growth = cfg.get_double("run", "growth", o.growth);
            o.tolerance = cfg.get_double("run", "cross_validation_tolerance", o.tolerance);
            rep = curve_cross_validation(s.spec(), rng.split(3), o);
        } else {
            cfg.fail("run", "verify", "unknown experiment '" + name +
                                          "' (expected curve_convergence, stationary_laws, extinction or curve_cross_validation)");
        }
        all_pass = all_pass && rep->passed();
        emit(s, *rep);
    }
    return all_pass ? kExitOk : kExitTolerance;
}

int cmd_reed_frost(Session& s) {
    const auto& cfg = s.cfg();
    if (s.spec().kind() != ModelKind::ReedFrost) cfg.fail("model", "kind", "reed-frost needs kind = reed_frost");
    const auto Ns = cfg.get_longs("run", "N", {100'000});
    const long M = cfg.get_long("run", "replicates", 200);
    const auto Ms = cfg.get_longs("run", "rf_replicates", std::vector<long>(Ns.size(), M));
    if (Ms.size() != Ns.size()) cfg.fail("run", "rf_replicates", "needs one entry per N");
    ReedFrostOptions o;
    o.r_lo = static_cast<int>(cfg.get_long("run", "r_lo", o.r_lo));
    o.r_hi = static_cast<int>(cfg.get_long("run", "r_hi", o.r_hi));
    o.tolerance = cfg.get_double("run", "rf_tolerance", o.tolerance);
    std::vector<int> reps(Ms.begin(), Ms.end());
    const auto rep = reed_frost_check(s.spec().as<ReedFrost>().mu, Ns, reps, s.master(), o);
    emit(s, rep);
    return rep.passed() ? kExitOk : kExitTolerance;
}

std::vector<std::string> final_size_lines(const ModelSpec& spec) {
    const FinalSize fs = final_size_and_extinction(spec);
    auto vec = [](const Eigen::VectorXd& v) {
        std::string out;
        for (int i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v(i));
        return out;
    };
    std::vector<std::string> out{"s_inf = " + fmt(fs.s_inf), "q_forward = " + fmt(fs.q_forward),
                                 "q_backward = " + fmt(fs.q_backward)};
    if (fs.s_inf_by_type.size() > 1) {
        out.push_back("s_inf_by_type = " + vec(fs.s_inf_by_type));
        out.push_back("q_forward_by_type = " + vec(fs.q_forward_by_type));
        out.push_back("q_backward_by_type = " + vec(fs.q_backward_by_type));
    }
    if (fs.half_edge.size() > 0) out.push_back("half_edge_escape = " + vec(fs.half_edge));
    return out;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Epidemic curves from branching-process limits", "epicurve"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config;
    Overrides ov;
    std::uint64_t seed = 0;
    std::string outdir;
    long replicates = 0;
    double r0 = 0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("config", config, "Configuration file");
        if (config_required) opt->required();
        sub->add_option("--seed", seed, "Override run.seed");
        sub->add_option("--out", outdir, "Override output.directory");
        sub->add_option("--replicates", replicates, "Override run.replicates")->check(CLI::PositiveNumber);
    };
    auto* simulate_cmd = app.add_subcommand("simulate", "Write epidemic trajectories as CSV");
    auto* constants_cmd = app.add_subcommand("constants", "Print derived constants");
    auto* curve_cmd = app.add_subcommand("curve", "Write the limit curve with Monte Carlo columns");
    auto* verify_cmd = app.add_subcommand("verify", "Run the statistical experiments");
    auto* rf_cmd = app.add_subcommand("reed-frost", "Run the Reed-Frost generation check");
    auto* fs_cmd = app.add_subcommand("final-size", "Print final sizes and extinction probabilities");
    for (auto* sub : {simulate_cmd, constants_cmd, curve_cmd, verify_cmd, rf_cmd}) add_common(sub, true);
    add_common(fs_cmd, false);
    auto* r0_opt = fs_cmd->add_option("--r0", r0, "Solve -log s = r0 (1 - s) directly");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--out")) ov.out = outdir;
    if (sub->count("--replicates")) ov.replicates = replicates;

    try {
        if (sub == fs_cmd && r0_opt->count()) {
            const double s = final_size_root(r0);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", s);
            out << "s_inf = " << buf << '\n';
            out << "s_inf_exact = " << fmt(s) << '\n';
            return kExitOk;
        }
        if (config.empty()) {
            err << "final-size: give a configuration file or --r0\n";
            return kExitUsage;
        }
        Session session(sub->get_name(), config, ov, out);
        if (sub == simulate_cmd) return cmd_simulate(session);
        if (sub == constants_cmd) return cmd_constants(session);
        if (sub == curve_cmd) return cmd_curve(session);
        if (sub == verify_cmd) return cmd_verify(session);
        if (sub == rf_cmd) return cmd_reed_frost(session);
        auto f = session.open("final_size.txt");
        for (const auto& line : final_size_lines(session.spec())) {
            f << line << '\n';
            out << line << '\n';
        }
        return kExitOk;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SubcriticalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace epicurve
