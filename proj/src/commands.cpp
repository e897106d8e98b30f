#include "rtlab/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rtlab {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(6);
    os << v;
    return os.str();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

class Artifacts {
public:
    Artifacts(fs::path dir, const ExperimentConfig& cfg) : dir_(std::move(dir)), meta_{cfg.hash(), cfg.seed} {
        fs::create_directories(dir_);
    }

    const CsvMeta& meta() const { return meta_; }

    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return os;
    }

    void cdf(const std::string& name, const SubDistribution& F, const std::string& column = "F") {
        auto os = open(name);
        write_cdf_csv(os, F, meta_, column);
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    CsvMeta meta_;
    std::vector<std::string> files_;
};

// Structured text report: "key: value" lines, blank-line separated sections.
class Report {
public:
    void line(const std::string& key, const std::string& value) { body_ << key << ": " << value << '\n'; }
    void section(const std::string& name) { body_ << '\n' << '[' << name << "]\n"; }
    std::string str() const { return body_.str(); }

private:
    std::ostringstream body_;
};

void outcome_section(Report& r, const VerificationOutcome& o) {
    r.section("outcome " + o.theorem);
    r.line("status", o.pass ? "pass" : "fail");
    for (std::size_t k = 0; k < o.rows.size(); ++k) {
        const KRow& row = o.rows[k];
        const std::string p = "k" + std::to_string(k + 1) + ".";
        r.line(p + "target", row.target);
        r.line(p + "measure", num(row.measure));
        r.line(p + "normalized_cap", num(row.normalized_cap));
        auto dist = [&](const std::string& key, double v) {
            if (v >= 0) r.line(p + key, num(v));
        };
        dist("ks_transform_vs_hitting", row.transform_vs_hitting);
        dist("ks_transform_vs_hitting_in_range", row.transform_vs_hitting_in_range);
        dist("ks_return_vs_law", row.return_vs_law);
        dist("ks_hitting_vs_law", row.hitting_vs_law);
        dist("ks_return_vs_hitting", row.return_vs_hitting);
        dist("ks_perturbed_return", row.perturbed_return);
        dist("ks_perturbed_hitting", row.perturbed_hitting);
        r.line(p + "censored_return", num(row.censored_return));
        r.line(p + "censored_hitting", num(row.censored_hitting));
        if (row.transform_vs_hitting >= 0) r.line(p + "transform_clipped", num(row.transform_clipped));
    }
    for (const auto& n : o.notes) r.line("note", n);
    for (const auto& f : o.failures) r.line("failure", f);
}

void attach(Artifacts& a, const VerificationOutcome& o) {
    for (const auto& [name, F] : o.attachments) a.cdf("cdf_" + name + ".csv", F);
}

std::vector<StartLaw> starts_of(Mode m) {
    switch (m) {
    case Mode::Return: return {StartLaw::MuE};
    case Mode::Hitting: return {StartLaw::MuY};
    default: return {StartLaw::MuE, StartLaw::MuY};
    }
}

int do_simulate(const ExperimentConfig& cfg, const ScalingFunction& f, Artifacts& a, Report& r, std::ostream& log) {
    const Normalizer norm = make_normalizer(cfg, f);
    const auto grid = cfg.grid();
    for (std::size_t k = 0; k < cfg.targets.size(); ++k) {
        const TargetSpec& E = cfg.targets[k];
        const std::string p = "k" + std::to_string(k + 1);
        r.section(p + " " + E.describe());
        for (StartLaw s : starts_of(cfg.mode)) {
            const std::string which = s == StartLaw::MuE ? "return" : "hitting";
            log << "simulate " << p << ' ' << which << " (" << cfg.n_samples << " samples)\n";
            const auto batch = sample_hitting_times(cfg.system, E, s, cfg.simulation());
            {
                auto os = a.open("samples_" + p + "_" + which + ".csv");
                write_batch_csv(os, batch, norm, a.meta());
            }
            const auto F = empirical_cdf(batch, norm, grid);
            a.cdf("cdf_" + p + "_" + which + ".csv", F);
            r.line(which + ".measure", num(batch.measure));
            r.line(which + ".normalized_cap", num(norm(static_cast<double>(cfg.cap), batch.measure)));
            r.line(which + ".censored_fraction", num(F.censored_fraction()));
            r.line(which + ".mass_on_grid", num(F.total_mass()));
            if (cfg.system.as<BooleMap>()) r.line(which + ".singular_events", std::to_string(batch.singular_events));
        }
    }
    return kExitPass;
}

int do_transform(const ExperimentConfig& cfg, const ScalingFunction& f, Artifacts& a, Report& r, std::ostream& log) {
    const TransformSpec spec = make_transform(cfg, f);
    r.line("transform.direction", cfg.transform.direction == TransformDirection::Forward ? "forward" : "inverse");
    std::vector<double> grid = cfg.grid();
    std::optional<SubDistribution> input;
    if (cfg.transform.input == TransformInput::Law) {
        const auto law = make_law(cfg, f);
        if (!law) throw ConfigError("law", "transform.input = law needs a law");
        // analytic laws are inverted on a grid graded towards the origin
        if (cfg.transform.direction == TransformDirection::Inverse && spec.kind == TransformKind::Fractional && spec.alpha < 1)
            grid = refine_origin(grid, spec.alpha);
        input = SubDistribution::of_law(grid, *law);
        r.line("transform.input", law->name());
    } else {
        const TargetSpec& E = cfg.targets.back();
        log << "transform: estimating return CDF for " << E.describe() << '\n';
        input = estimate_cdf(cfg.system, E, StartLaw::MuE, make_normalizer(cfg, f), cfg.simulation(), grid);
        r.line("transform.input", "empirical return CDF, " + E.describe());
        r.line("transform.input_censored_fraction", num(input->censored_fraction()));
    }
    SubDistribution output = *input;
    if (cfg.transform.direction == TransformDirection::Forward) {
        const auto res = forward(spec, *input);
        output = res.law;
        r.line("transform.clipped", num(res.clipped));
        r.line("transform.max_decrease", num(res.max_decrease));
    } else {
        const auto res = invert(spec, *input);
        output = res.law;
        r.line("transform.clamp_adjustment", num(res.clamp_adjustment));
        r.line("transform.monotone_adjustment", num(res.monotone_adjustment));
    }
    auto os = a.open("transform.csv");
    write_columns_csv(os, a.meta(), {"t", "F_in", "F_out"}, {input->grid(), input->values(), output.values()});
    return kExitPass;
}

int do_laws(const ExperimentConfig& cfg, const ScalingFunction& f, Artifacts& a, Report& r) {
    const auto law = make_law(cfg, f);
    if (!law) throw ConfigError("law", "the laws subcommand needs a law other than none");
    const auto F = SubDistribution::of_law(cfg.grid(), *law);
    a.cdf("law.csv", F, "H");
    r.line("law", law->name());
    r.line("law.at_t1", num(law->cdf(1.0)));
    return kExitPass;
}

int do_verify(const ExperimentConfig& cfg, const ScalingFunction& f, Artifacts& a, Report& r, std::ostream& log) {
    if (cfg.decomposition) {
        const auto& d = *cfg.decomposition;
        const double defect = check_decomposition(cfg.system, d.A, d.B, d.n_max);
        r.section("outcome decomposition");
        r.line("n_max", std::to_string(d.n_max));
        r.line("max_defect", num(defect));
        const bool ok = defect <= cfg.tol.decomposition;
        r.line("status", ok ? "pass" : "fail");
        if (!ok) r.line("failure", "decomposition defect " + num(defect) + " exceeds decomposition tolerance " + num(cfg.tol.decomposition));
        return ok ? kExitPass : kExitTolerance;
    }

    const Normalizer norm = make_normalizer(cfg, f);
    const auto law = make_law(cfg, f);
    const VerifyConfig vc = cfg.verify_config();
    std::vector<VerificationOutcome> outcomes;

    if (cfg.targets.back().kind == TargetKind::ShortReturnColumn) {
        log << "verify: short-return control\n";
        auto c = check_short_returns(cfg.system, cfg.targets, norm, vc);
        r.section("short_return_control");
        r.line("t_small", num(c.t_small));
        r.line("return_mass_below_t_small", num(c.return_mass_below));
        r.line("hitting_mass_on_grid", num(c.hitting_mass));
        outcomes.push_back(std::move(c.outcome));
    } else if (!cfg.eps.empty()) {
        log << "verify: robustness\n";
        std::vector<double> p;
        for (const auto& t : cfg.targets) p.push_back(t.hi - t.lo);
        outcomes.push_back(check_robustness(cfg.system, p, cfg.eps, norm, vc));
    } else {
        log << "verify: return vs hitting\n";
        outcomes.push_back(check_return_vs_hitting(cfg.system, cfg.targets, make_transform(cfg, f), norm, vc, law));
        if (law && cfg.targets.size() > 1) {
            log << "verify: convergence along the target sequence\n";
            outcomes.push_back(check_convergence_to_H(cfg.system, cfg.targets, norm, *law, vc));
        }
    }
    bool pass = true;
    for (const auto& o : outcomes) {
        outcome_section(r, o);
        attach(a, o);
        pass = pass && o.pass;
    }
    return pass ? kExitPass : kExitTolerance;
}

int do_scaling(const ExperimentConfig& cfg, const ResolvedScaling& rs, Artifacts& a, Report& r) {
    const ScalingFunction& f = rs.f;
    if (rs.fit) {
        r.line("fit.alpha", num(rs.fit->fitted_alpha));
        r.line("fit.c", num(rs.fit->fitted_c));
        r.line("fit.residual", num(rs.fit->residual));
        r.line("fit.window", std::to_string(rs.fit->first) + ".." + std::to_string(rs.fit->last));
        if (auto k = known_scaling(cfg.system)) r.line("known", "c=" + num(k->c()) + " alpha=" + num(k->alpha()) + " beta=" + num(k->beta()));
    }
    if (rs.tails) {
        const auto& t = *rs.tails;
        std::vector<double> n, q, se, w;
        for (std::size_t i = 1; i < t.q.size(); ++i) {
            n.push_back(static_cast<double>(i));
            q.push_back(t.q[i]);
            se.push_back(t.q_se[i]);
            w.push_back(t.w[i - 1]);
        }
        auto os = a.open("tails.csv");
        write_columns_csv(os, a.meta(), {"n", "q_n", "q_se", "w_n"}, {n, q, se, w});
    }
    std::vector<double> s, av, bv, gv;
    for (int e = -6; e <= 12; ++e) {
        const double x = std::pow(10.0, e);
        s.push_back(x);
        av.push_back(f(x));
        bv.push_back(f.inverse(x));
        gv.push_back(f.gamma(x));
    }
    auto os = a.open("scaling.csv");
    write_columns_csv(os, a.meta(), {"s", "a", "b", "gamma"}, {s, av, bv, gv});
    return kExitPass;
}

}  // namespace

Subcommand parse_subcommand(const std::string& name) {
    if (name == "simulate") return Subcommand::Simulate;
    if (name == "transform") return Subcommand::Transform;
    if (name == "laws") return Subcommand::Laws;
    if (name == "verify") return Subcommand::Verify;
    if (name == "scaling") return Subcommand::Scaling;
    throw std::invalid_argument("unknown subcommand " + name);
}

std::string subcommand_name(Subcommand s) {
    switch (s) {
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Transform: return "transform";
    case Subcommand::Laws: return "laws";
    case Subcommand::Verify: return "verify";
    case Subcommand::Scaling: return "scaling";
    }
    return "";
}

int run(Subcommand cmd, const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    Artifacts a(opt.out_dir.empty() ? fs::path(cfg.output) : fs::path(opt.out_dir), cfg);
    const ResolvedScaling rs = resolve_scaling(cfg);

    Report r;
    r.line("subcommand", subcommand_name(cmd));
    r.line("config_hash", cfg.hash());
    r.line("seed", std::to_string(cfg.seed));
    r.line("config", cfg.canonical());
    r.line("system", cfg.system.name());
    r.line("scaling", "c=" + num(rs.f.c()) + " alpha=" + num(rs.f.alpha()) + " beta=" + num(rs.f.beta()));
    r.line("normalizer", make_normalizer(cfg, rs.f).describe());
    r.line("transform", make_transform(cfg, rs.f).describe());
    if (auto law = make_law(cfg, rs.f)) r.line("law", law->name());

    int status = kExitPass;
    switch (cmd) {
    case Subcommand::Simulate: status = do_simulate(cfg, rs.f, a, r, log); break;
    case Subcommand::Transform: status = do_transform(cfg, rs.f, a, r, log); break;
    case Subcommand::Laws: status = do_laws(cfg, rs.f, a, r); break;
    case Subcommand::Verify: status = do_verify(cfg, rs.f, a, r, log); break;
    case Subcommand::Scaling: status = do_scaling(cfg, rs, a, r); break;
    }

    std::ofstream rep(a.dir() / "report.txt", std::ios::binary);
    if (!rep) throw std::runtime_error("cannot write " + (a.dir() / "report.txt").string());
    rep << "# rtlab report\n";
    if (opt.timestamp) rep << "# generated " << utc_now() << '\n';
    rep << r.str();
    rep << "\n[artifacts]\n";
    for (const auto& f : a.files()) rep << f << '\n';
    rep << "\nexit_status: " << status << '\n';
    return status;
}

}  // namespace rtlab
