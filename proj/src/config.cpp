#include "rtlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rtlab {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& get(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(field(key), "missing required field");
        used_.insert(key);
        return j_.at(key);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
        return x;
    }
    double positive(const std::string& key) {
        const double x = number(key);
        if (!(x > 0)) throw ConfigError(field(key), "must be positive, got " + j_.at(key).dump());
        return x;
    }
    std::uint64_t count(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() < 1)
            throw ConfigError(field(key), "must be a positive integer, got " + v.dump());
        return v.get<std::uint64_t>();
    }
    std::string string(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(field(key), "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key) {
        const json& v = get(key);
        if (!v.is_array() || v.empty()) throw ConfigError(field(key), "expected a nonempty array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError(field(key), "expected a nonempty array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    std::vector<int> ints(const std::string& key) {
        const json& v = get(key);
        return int_list(v, field(key));
    }
    static std::vector<int> int_list(const json& v, const std::string& where) {
        if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a nonempty array of integers");
        std::vector<int> out;
        for (const auto& x : v) {
            if (!x.is_number_integer()) throw ConfigError(where, "expected a nonempty array of integers");
            out.push_back(x.get<int>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class E>
E pick(const std::string& where, const std::string& value, std::initializer_list<std::pair<const char*, E>> options) {
    std::string names;
    for (const auto& [name, e] : options) {
        if (value == name) return e;
        names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(where, "unknown value \"" + value + "\" (expected one of " + names + ")");
}

std::string mode_name(Mode m) {
    switch (m) {
    case Mode::Return: return "return";
    case Mode::Hitting: return "hitting";
    case Mode::Both: return "both";
    case Mode::Distorted: return "distorted";
    }
    return "";
}

std::string law_name(LawChoice l) {
    switch (l) {
    case LawChoice::None: return "none";
    case LawChoice::Halpha: return "Halpha";
    case LawChoice::HalphaFixedPoint: return "Halpha_fixed_point";
    case LawChoice::Gzero: return "Gzero";
    case LawChoice::Exponential: return "Exponential";
    }
    return "";
}

std::string transform_name(TransformKind k) {
    switch (k) {
    case TransformKind::HLV: return "hlv";
    case TransformKind::Fractional: return "fractional";
    case TransformKind::DistortedPositive:
    case TransformKind::DistortedZero: return "distorted";
    }
    return "";
}

SystemModel parse_system(Section s) {
    const std::string kind = s.string("kind");
    SystemModel sys = SystemModel::doubling();
    if (kind == "renewal_tower") {
        const double a = s.number("alpha");
        if (!(a > 0 && a <= 1)) throw ConfigError(s.field("alpha"), "must lie in (0,1]");
        sys = SystemModel::renewal_tower(a);
    } else if (kind == "boole") {
        sys = SystemModel::boole();
    } else if (kind == "doubling") {
        sys = SystemModel::doubling();
    } else if (kind == "markov") {
        const json& P = s.get("P");
        if (!P.is_array() || P.empty()) throw ConfigError(s.field("P"), "expected a square matrix");
        std::vector<std::vector<double>> rows;
        for (const auto& r : P) {
            if (!r.is_array()) throw ConfigError(s.field("P"), "expected a square matrix");
            std::vector<double> row;
            for (const auto& x : r) {
                if (!x.is_number()) throw ConfigError(s.field("P"), "entries must be numbers");
                row.push_back(x.get<double>());
            }
            rows.push_back(std::move(row));
        }
        std::vector<int> ref;
        if (s.has("reference")) ref = s.ints("reference");
        try {
            sys = SystemModel::markov(std::move(rows), ref);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(s.field("P"), e.what());
        }
    } else {
        throw ConfigError(s.field("kind"), "unknown system \"" + kind + "\" (expected renewal_tower, boole, doubling, markov)");
    }
    s.finish();
    return sys;
}

void parse_targets(Section s, ExperimentConfig& cfg) {
    const std::string kind = s.string("kind");
    auto& out = cfg.targets;
    if (kind == "label_interval") {
        for (double p : s.numbers("p")) out.push_back(TargetSpec::label_interval(p));
        if (s.has("eps")) {
            cfg.eps = s.numbers("eps");
            if (cfg.eps.size() != out.size()) throw ConfigError(s.field("eps"), "must have one entry per p");
            try {
                validate_perturbation(cfg.eps);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(s.field("eps"), e.what());
            }
        }
    } else if (kind == "interval") {
        const double center = s.has("center") ? s.number("center") : 0.0;
        for (double hw : s.numbers("half_width")) out.push_back(TargetSpec::interval(center, hw));
    } else if (kind == "short_return_column") {
        const auto depth = s.numbers("depth");
        const auto width = s.numbers("width");
        if (depth.size() != width.size()) throw ConfigError(s.field("width"), "must have one entry per depth");
        for (std::size_t k = 0; k < depth.size(); ++k) {
            if (!(depth[k] >= 1) || depth[k] != std::floor(depth[k])) throw ConfigError(s.field("depth"), "entries must be positive integers");
            out.push_back(TargetSpec::short_return_column(static_cast<std::uint64_t>(depth[k]), width[k]));
        }
    } else if (kind == "dyadic") {
        const std::uint64_t index = s.has("index") ? s.get("index").get<std::uint64_t>() : 1;
        for (int level : s.ints("level")) out.push_back(TargetSpec::dyadic(level, index));
    } else if (kind == "state_set") {
        const json& sets = s.get("states");
        if (!sets.is_array() || sets.empty()) throw ConfigError(s.field("states"), "expected a nonempty array of state lists");
        for (const auto& set : sets) out.push_back(TargetSpec::state_set(Section::int_list(set, s.field("states"))));
    } else {
        throw ConfigError(s.field("kind"), "unknown target kind \"" + kind +
                                               "\" (expected label_interval, interval, short_return_column, dyadic, state_set)");
    }
    s.finish();
    for (std::size_t k = 0; k < out.size(); ++k) {
        try {
            validate_target(cfg.system, out[k]);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(s.field("[" + std::to_string(k) + "]"), e.what());
        }
    }
}

ScalingConfig parse_scaling(Section s) {
    ScalingConfig c;
    c.source = pick<ScalingSource>(s.field("source"), s.string("source"),
                                   {{"known", ScalingSource::Known}, {"estimated", ScalingSource::Estimated}, {"explicit", ScalingSource::Explicit}});
    if (c.source == ScalingSource::Estimated) {
        c.n_max = s.count("n_max");
        c.n_samples = s.count("n_samples");
        if (s.has("alpha")) c.alpha = s.positive("alpha");
    } else if (c.source == ScalingSource::Explicit) {
        c.c = s.positive("c");
        c.alpha = s.number("alpha");
        if (*c.alpha < 0 || *c.alpha > 1) throw ConfigError(s.field("alpha"), "must lie in [0,1]");
        if (s.has("beta")) c.beta = s.number("beta");
        try {
            ScalingFunction(c.c, *c.alpha, c.beta);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(s.field("alpha"), e.what());
        }
    }
    s.finish();
    return c;
}

json system_json(const SystemModel& sys) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RenewalTower>) return {{"kind", "renewal_tower"}, {"alpha", v.alpha}};
            else if constexpr (std::is_same_v<T, BooleMap>) return {{"kind", "boole"}};
            else if constexpr (std::is_same_v<T, DoublingMap>) return {{"kind", "doubling"}};
            else return {{"kind", "markov"}, {"P", v.P}, {"reference", v.reference}};
        },
        sys.params());
}

json target_json(const TargetSpec& t) {
    switch (t.kind) {
    case TargetKind::LabelInterval: return {{"kind", "label_interval"}, {"lo", t.lo}, {"hi", t.hi}};
    case TargetKind::IntervalInY: return {{"kind", "interval"}, {"lo", t.lo}, {"hi", t.hi}};
    case TargetKind::ShortReturnColumn: return {{"kind", "short_return_column"}, {"depth", t.depth}, {"width", t.width}};
    case TargetKind::Dyadic: return {{"kind", "dyadic"}, {"level", t.level}, {"index", t.index}};
    case TargetKind::StateSet: return {{"kind", "state_set"}, {"states", t.states}};
    }
    return {};
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    Section s(root, "");
    ExperimentConfig cfg;
    try {
        const json& seed = s.get("seed");
        if (!seed.is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
        cfg.seed = seed.get<std::uint64_t>();
        cfg.system = parse_system(Section(s.get("system"), "system"));
        if (s.has("targets")) parse_targets(Section(s.get("targets"), "targets"), cfg);
        if (s.has("scaling")) cfg.scaling = parse_scaling(Section(s.get("scaling"), "scaling"));
        if (s.has("mode"))
            cfg.mode = pick<Mode>("mode", s.string("mode"),
                                  {{"return", Mode::Return}, {"hitting", Mode::Hitting}, {"both", Mode::Both}, {"distorted", Mode::Distorted}});
        if (s.has("law"))
            cfg.law = pick<LawChoice>("law", s.string("law"),
                                      {{"none", LawChoice::None}, {"Halpha", LawChoice::Halpha},
                                       {"Halpha_fixed_point", LawChoice::HalphaFixedPoint}, {"Gzero", LawChoice::Gzero},
                                       {"Exponential", LawChoice::Exponential}});
        if (s.has("n_samples")) cfg.n_samples = s.count("n_samples");
        if (s.has("cap")) {
            cfg.cap = s.count("cap");
            if (cfg.cap > (1ull << 53)) throw ConfigError("cap", "must not exceed 2^53");
        }
        if (s.has("grid")) {
            Section g(s.get("grid"), "grid");
            if (g.has("t_max")) cfg.t_max = g.positive("t_max");
            if (g.has("points")) {
                cfg.points = g.count("points");
                if (cfg.points < 8) throw ConfigError("grid.points", "need at least 8 points");
            }
            g.finish();
        }
        if (s.has("tolerances")) {
            Section t(s.get("tolerances"), "tolerances");
            if (t.has("transform")) cfg.tol.transform = t.positive("transform");
            if (t.has("law")) cfg.tol.law = t.positive("law");
            if (t.has("gap")) cfg.tol.gap = t.positive("gap");
            if (t.has("censored")) cfg.tol.censored = t.positive("censored");
            if (t.has("robustness")) cfg.tol.robustness = t.positive("robustness");
            if (t.has("decomposition")) cfg.tol.decomposition = t.positive("decomposition");
            if (t.has("short_return_mass")) cfg.tol.short_return_mass = t.positive("short_return_mass");
            if (t.has("short_hitting_mass")) cfg.tol.short_hitting_mass = t.positive("short_hitting_mass");
            if (t.has("short_t")) cfg.tol.short_t = t.positive("short_t");
            t.finish();
        }
        if (s.has("transform")) {
            Section t(s.get("transform"), "transform");
            if (t.has("kind")) {
                const auto k = t.string("kind");
                if (k != "auto")
                    cfg.transform.kind = pick<TransformKind>("transform.kind", k,
                                                             {{"hlv", TransformKind::HLV},
                                                              {"fractional", TransformKind::Fractional},
                                                              {"distorted", TransformKind::DistortedPositive}});
            }
            if (t.has("input"))
                cfg.transform.input = pick<TransformInput>("transform.input", t.string("input"),
                                                           {{"return", TransformInput::Return}, {"law", TransformInput::Law}});
            if (t.has("direction"))
                cfg.transform.direction = pick<TransformDirection>(
                    "transform.direction", t.string("direction"),
                    {{"forward", TransformDirection::Forward}, {"inverse", TransformDirection::Inverse}});
            t.finish();
        }
        if (s.has("decomposition")) {
            Section d(s.get("decomposition"), "decomposition");
            DecompositionConfig dc;
            dc.A = d.ints("A");
            dc.B = d.ints("B");
            if (d.has("n_max")) dc.n_max = static_cast<int>(d.count("n_max"));
            d.finish();
            if (!cfg.system.as<FiniteMarkovShift>()) throw ConfigError("decomposition", "requires a markov system");
            cfg.decomposition = dc;
        }
        if (s.has("threads")) {
            const json& v = s.get("threads");
            if (!v.is_number_unsigned()) throw ConfigError("threads", "must be a non-negative integer");
            cfg.threads = v.get<unsigned>();
        }
        if (s.has("output")) cfg.output = s.string("output");
        s.finish();
    } catch (const json::exception& e) {
        throw ConfigError("<root>", std::string("type error: ") + e.what());
    }
    if (cfg.targets.empty()) cfg.targets.push_back(reference_target(cfg.system));
    if (!cfg.eps.empty() && !cfg.system.as<RenewalTower>()) throw ConfigError("targets.eps", "perturbations need the renewal tower");
    if (cfg.scaling.source == ScalingSource::Known && !known_scaling(cfg.system))
        throw ConfigError("scaling.source", "no known scaling for system " + cfg.system.name());
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string ExperimentConfig::canonical() const {
    json j;
    j["seed"] = seed;
    j["system"] = system_json(system);
    json t = json::array();
    for (const auto& e : targets) t.push_back(target_json(e));
    j["targets"] = t;
    if (!eps.empty()) j["eps"] = eps;
    json sc;
    switch (scaling.source) {
    case ScalingSource::Known: sc = {{"source", "known"}}; break;
    case ScalingSource::Estimated:
        sc = {{"source", "estimated"}, {"n_max", scaling.n_max}, {"n_samples", scaling.n_samples}};
        if (scaling.alpha) sc["alpha"] = *scaling.alpha;
        break;
    case ScalingSource::Explicit: sc = {{"source", "explicit"}, {"c", scaling.c}, {"alpha", *scaling.alpha}, {"beta", scaling.beta}}; break;
    }
    j["scaling"] = sc;
    j["mode"] = mode_name(mode);
    j["law"] = law_name(law);
    j["n_samples"] = n_samples;
    j["cap"] = cap;
    j["grid"] = {{"t_max", t_max}, {"points", points}};
    j["tolerances"] = {{"transform", tol.transform},
                       {"law", tol.law},
                       {"gap", tol.gap},
                       {"censored", tol.censored},
                       {"robustness", tol.robustness},
                       {"decomposition", tol.decomposition},
                       {"short_return_mass", tol.short_return_mass},
                       {"short_hitting_mass", tol.short_hitting_mass},
                       {"short_t", tol.short_t}};
    j["transform"] = {{"kind", transform.kind ? transform_name(*transform.kind) : "auto"},
                      {"input", transform.input == TransformInput::Return ? "return" : "law"},
                      {"direction", transform.direction == TransformDirection::Forward ? "forward" : "inverse"}};
    if (decomposition) j["decomposition"] = {{"A", decomposition->A}, {"B", decomposition->B}, {"n_max", decomposition->n_max}};
    return j.dump();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

SimulationOptions ExperimentConfig::simulation() const {
    SimulationOptions o;
    o.samples = n_samples;
    o.cap = cap;
    o.seed = seed;
    o.threads = threads;
    return o;
}

VerifyConfig ExperimentConfig::verify_config() const {
    VerifyConfig v;
    v.sim = simulation();
    v.grid = grid();
    v.tol = tol;
    v.config_hash = hash();
    return v;
}

ResolvedScaling resolve_scaling(const ExperimentConfig& cfg) {
    switch (cfg.scaling.source) {
    case ScalingSource::Known: return {*known_scaling(cfg.system), std::nullopt, std::nullopt};
    case ScalingSource::Explicit: return {ScalingFunction(cfg.scaling.c, *cfg.scaling.alpha, cfg.scaling.beta), std::nullopt, std::nullopt};
    case ScalingSource::Estimated: break;
    }
    double alpha = 0;
    if (cfg.scaling.alpha) alpha = *cfg.scaling.alpha;
    else if (auto k = known_scaling(cfg.system)) alpha = k->alpha();
    else throw ConfigError("scaling.alpha", "required when the system has no known scaling");
    const auto tw = estimate_tails_and_wandering(cfg.system, cfg.scaling.n_max, cfg.scaling.n_samples, cfg.seed, cfg.threads);
    auto fit = estimate_return_sequence(tw.w, alpha);
    return {fit.scaling, fit, tw};
}

Normalizer make_normalizer(const ExperimentConfig& cfg, const ScalingFunction& f) {
    return cfg.mode == Mode::Distorted ? Normalizer::distorted(f) : Normalizer::gamma(f);
}

TransformSpec make_transform(const ExperimentConfig& cfg, const ScalingFunction& f) {
    TransformKind k;
    if (cfg.transform.kind) k = *cfg.transform.kind;
    else if (cfg.mode == Mode::Distorted) k = TransformKind::DistortedPositive;
    else if (f.alpha() == 1.0 && f.beta() == 0.0) k = TransformKind::HLV;
    else k = TransformKind::Fractional;
    switch (k) {
    case TransformKind::HLV: return TransformSpec::hlv();
    case TransformKind::Fractional: return TransformSpec::fractional(f.alpha());
    default: return TransformSpec::distorted(f.alpha());
    }
}

std::optional<LimitLaw> make_law(const ExperimentConfig& cfg, const ScalingFunction& f) {
    switch (cfg.law) {
    case LawChoice::None: return std::nullopt;
    case LawChoice::Halpha: return LimitLaw::H(f.alpha());
    case LawChoice::HalphaFixedPoint: return LimitLaw::transform_fixed_point(f.alpha());
    case LawChoice::Gzero: return LimitLaw::G0();
    case LawChoice::Exponential: return LimitLaw::exponential();
    }
    return std::nullopt;
}

}  // namespace rtlab
