#include "rtlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace rtlab {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// restriction to nodes t <= top (at least two nodes kept)
SubDistribution truncate(const SubDistribution& F, double top) {
    std::size_t n = 0;
    while (n < F.size() && F.grid()[n] <= top) ++n;
    n = std::max<std::size_t>(n, 2);
    return SubDistribution({F.grid().begin(), F.grid().begin() + static_cast<std::ptrdiff_t>(n)},
                           {F.values().begin(), F.values().begin() + static_cast<std::ptrdiff_t>(n)});
}

struct Pair {
    SubDistribution ret, hit;
};

Pair estimate_pair(const SystemModel& sys, const TargetSpec& E, const Normalizer& norm, const VerifyConfig& cfg) {
    return {estimate_cdf(sys, E, StartLaw::MuE, norm, cfg.sim, cfg.grid), estimate_cdf(sys, E, StartLaw::MuY, norm, cfg.sim, cfg.grid)};
}

void check_censoring(VerificationOutcome& out, const KRow& row, double ceiling) {
    if (row.censored_return > ceiling)
        out.fail("censored return mass " + fmt(row.censored_return) + " above ceiling " + fmt(ceiling) + " (" + row.target + ")");
    if (row.censored_hitting > ceiling)
        out.fail("censored hitting mass " + fmt(row.censored_hitting) + " above ceiling " + fmt(ceiling) + " (" + row.target + ")");
}

KRow base_row(const SystemModel& sys, const TargetSpec& E, const Normalizer& norm, const VerifyConfig& cfg, const Pair& p) {
    KRow r;
    r.target = E.describe();
    r.measure = measure_of_target(sys, E);
    r.normalized_cap = norm(static_cast<double>(cfg.sim.cap), r.measure);
    r.censored_return = p.ret.censored_fraction();
    r.censored_hitting = p.hit.censored_fraction();
    r.return_vs_hitting = ks_distance(p.ret, p.hit);
    return r;
}

}  // namespace

VerificationOutcome check_return_vs_hitting(const SystemModel& sys, const std::vector<TargetSpec>& targets, const TransformSpec& spec,
                                            const Normalizer& norm, const VerifyConfig& cfg, const std::optional<LimitLaw>& law) {
    if (targets.empty()) throw std::invalid_argument("check_return_vs_hitting: empty target sequence");
    spec.validate();
    VerificationOutcome out;
    out.theorem = "return_vs_hitting[" + spec.describe() + "]";
    out.seed = cfg.sim.seed;
    out.config_hash = cfg.config_hash;

    const TargetSpec& E = targets.back();
    const Pair p = estimate_pair(sys, E, norm, cfg);
    const TransformResult T = forward(spec, p.ret);
    KRow row = base_row(sys, E, norm, cfg, p);
    row.transform_vs_hitting = ks_distance(T.law, p.hit);
    row.transform_clipped = T.clipped;
    if (row.normalized_cap < cfg.grid.back()) {
        row.transform_vs_hitting_in_range = ks_distance(truncate(T.law, row.normalized_cap), truncate(p.hit, row.normalized_cap));
        out.notes.push_back("cap reaches normalized time " + fmt(row.normalized_cap) + " only; grid extends to " + fmt(cfg.grid.back()));
    } else {
        row.transform_vs_hitting_in_range = row.transform_vs_hitting;
    }
    if (law) {
        row.return_vs_law = ks_distance(p.ret, *law);
        row.hitting_vs_law = ks_distance(p.hit, *law);
    }
    if (row.transform_vs_hitting > cfg.tol.transform)
        out.fail("d(T(F~), F) = " + fmt(row.transform_vs_hitting) + " exceeds transform tolerance " + fmt(cfg.tol.transform));
    if (law && row.return_vs_law > cfg.tol.law)
        out.fail("d(F~, " + law->name() + ") = " + fmt(row.return_vs_law) + " exceeds law tolerance " + fmt(cfg.tol.law));
    if (law && row.hitting_vs_law > cfg.tol.law)
        out.fail("d(F, " + law->name() + ") = " + fmt(row.hitting_vs_law) + " exceeds law tolerance " + fmt(cfg.tol.law));
    check_censoring(out, row, cfg.tol.censored);
    out.rows.push_back(row);
    out.attachments.emplace_back("return", p.ret);
    out.attachments.emplace_back("hitting", p.hit);
    out.attachments.emplace_back("transformed_return", T.law);
    return out;
}

VerificationOutcome check_convergence_to_H(const SystemModel& sys, const std::vector<TargetSpec>& targets, const Normalizer& norm,
                                           const LimitLaw& law, const VerifyConfig& cfg) {
    if (targets.empty()) throw std::invalid_argument("check_convergence_to_H: empty target sequence");
    VerificationOutcome out;
    out.theorem = "convergence_to[" + law.name() + "]";
    out.seed = cfg.sim.seed;
    out.config_hash = cfg.config_hash;
    const double noise = std::sqrt(2.0 / static_cast<double>(cfg.sim.samples));

    for (std::size_t k = 0; k < targets.size(); ++k) {
        const Pair p = estimate_pair(sys, targets[k], norm, cfg);
        KRow row = base_row(sys, targets[k], norm, cfg, p);
        row.return_vs_law = ks_distance(p.ret, law);
        row.hitting_vs_law = ks_distance(p.hit, law);
        if (!out.rows.empty() && row.return_vs_hitting > out.rows.back().return_vs_hitting + 2 * noise)
            out.fail("sup|F~ - F| grew from " + fmt(out.rows.back().return_vs_hitting) + " to " + fmt(row.return_vs_hitting) +
                     " (more than twice the noise level " + fmt(noise) + ")");
        out.rows.push_back(row);
        const std::string tag = "_k" + std::to_string(k + 1);
        out.attachments.emplace_back("return" + tag, p.ret);
        out.attachments.emplace_back("hitting" + tag, p.hit);
    }
    const KRow& last = out.rows.back();
    if (last.return_vs_law > cfg.tol.law)
        out.fail("d(F~, law) = " + fmt(last.return_vs_law) + " exceeds law tolerance " + fmt(cfg.tol.law));
    if (last.hitting_vs_law > cfg.tol.law)
        out.fail("d(F, law) = " + fmt(last.hitting_vs_law) + " exceeds law tolerance " + fmt(cfg.tol.law));
    if (last.return_vs_hitting > cfg.tol.gap)
        out.fail("sup|F~ - F| = " + fmt(last.return_vs_hitting) + " exceeds gap tolerance " + fmt(cfg.tol.gap));
    check_censoring(out, last, cfg.tol.censored);
    return out;
}

double check_decomposition(const SystemModel& chain, const std::vector<int>& A, const std::vector<int>& B, int n_max) {
    const auto* mk = chain.as<FiniteMarkovShift>();
    if (!mk) throw std::invalid_argument("check_decomposition: needs a finite Markov shift");
    if (A.empty() || B.empty()) throw std::invalid_argument("check_decomposition: A and B must be nonempty");
    const std::size_t S = mk->P.size();
    if (n_max < 0 || n_max > 12) throw std::invalid_argument("check_decomposition: n_max must lie in 0..12");
    if (std::pow(static_cast<double>(S), n_max + 1) > 2e7)
        throw std::invalid_argument("check_decomposition: path space too large (states^(n_max+1) > 2e7)");
    const auto& P = mk->P;
    const auto& pi = mk->stationary;
    std::vector<double> inA(S, 0.0), inB(S, 0.0);
    for (int a : A) inA.at(static_cast<std::size_t>(a)) = 1.0;
    for (int b : B) inB.at(static_cast<std::size_t>(b)) = 1.0;

    // sum over all paths x_0..x_len of pi(x_0) prod P * start(x_0) * prod_{j>=1} (1 - 1_B(x_j))
    auto avoid_B = [&](int len, const std::vector<double>& start) {
        std::vector<std::size_t> x(static_cast<std::size_t>(len) + 1, 0);
        double total = 0;
        for (;;) {
            double w = pi[x[0]] * start[x[0]];
            for (int j = 1; j <= len && w != 0.0; ++j) w *= P[x[j - 1]][x[j]] * (1.0 - inB[x[j]]);
            total += w;
            int j = len;
            while (j >= 0 && ++x[static_cast<std::size_t>(j)] == S) x[static_cast<std::size_t>(j--)] = 0;
            if (j < 0) break;
        }
        return total;
    };

    double muA = 0;
    for (std::size_t s = 0; s < S; ++s) muA += pi[s] * inA[s];

    double worst = 0;
    for (int n = 0; n <= n_max; ++n) {
        double rhs = avoid_B(n, inA);
        std::vector<double> f = inA;  // That^l 1_A
        for (int l = 1; l <= n; ++l) {
            std::vector<double> g(S, 0.0);
            for (std::size_t y = 0; y < S; ++y)
                for (std::size_t x = 0; x < S; ++x) g[y] += pi[x] * P[x][y] * f[x] / pi[y];
            f = std::move(g);
            std::vector<double> start(S);
            for (std::size_t y = 0; y < S; ++y) start[y] = inB[y] * f[y];
            rhs += avoid_B(n - l, start);
        }
        worst = std::max(worst, std::abs(muA - rhs));
    }
    return worst;
}

void validate_perturbation(const std::vector<double>& eps) {
    if (eps.empty()) throw std::invalid_argument("perturbation: empty epsilon sequence");
    for (double e : eps)
        if (!(e >= 0)) throw std::invalid_argument("perturbation: epsilon must be >= 0");
    if (std::all_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; })) return;
    for (std::size_t k = 1; k < eps.size(); ++k)
        if (eps[k] > eps[k - 1]) throw std::invalid_argument("perturbation: epsilon must be non-increasing");
    if (eps.size() < 2 || eps.back() > 0.5 * eps.front())
        throw std::invalid_argument("perturbation: epsilon does not tend to 0 (need last <= first/2); symmetric difference not o(mu(E_k))");
}

VerificationOutcome check_robustness(const SystemModel& sys, const std::vector<double>& p, const std::vector<double>& eps,
                                     const Normalizer& norm, const VerifyConfig& cfg) {
    if (!sys.as<RenewalTower>()) throw std::invalid_argument("check_robustness: label-interval perturbations need the renewal tower");
    if (p.size() != eps.size() || p.empty()) throw std::invalid_argument("check_robustness: p and eps must have equal nonzero length");
    validate_perturbation(eps);
    VerificationOutcome out;
    out.theorem = "robustness";
    out.seed = cfg.sim.seed;
    out.config_hash = cfg.config_hash;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const TargetSpec E = TargetSpec::label_interval(0.0, p[k]);
        const TargetSpec Ep = TargetSpec::label_interval(eps[k] * p[k], (1.0 + eps[k]) * p[k]);
        const Pair a = estimate_pair(sys, E, norm, cfg);
        const Pair b = estimate_pair(sys, Ep, norm, cfg);
        KRow row = base_row(sys, E, norm, cfg, a);
        row.perturbed_return = ks_distance(a.ret, b.ret);
        row.perturbed_hitting = ks_distance(a.hit, b.hit);
        out.rows.push_back(row);
    }
    const KRow& last = out.rows.back();
    if (last.perturbed_return > cfg.tol.robustness)
        out.fail("return-law distance under perturbation " + fmt(last.perturbed_return) + " exceeds robustness tolerance " + fmt(cfg.tol.robustness));
    if (last.perturbed_hitting > cfg.tol.robustness)
        out.fail("hitting-law distance under perturbation " + fmt(last.perturbed_hitting) + " exceeds robustness tolerance " + fmt(cfg.tol.robustness));
    return out;
}

std::vector<TightnessRow> check_tightness(const SystemModel& sys, const TargetSpec& E,
                                          const std::vector<std::pair<std::uint64_t, std::uint64_t>>& mn, std::uint64_t samples,
                                          std::uint64_t seed, unsigned threads) {
    const double muE = measure_of_target(sys, E);
    const double ratio = sys.measure_of_Y() / muE;
    std::vector<TightnessRow> rows;
    for (auto [m, n] : mn) {
        if (m < 1 || n < 1) throw std::invalid_argument("check_tightness: m, n must be >= 1");
        SimulationOptions o;
        o.samples = samples;
        o.seed = seed;
        o.threads = threads;
        o.cap = m * n;
        const auto lhs_batch = sample_hitting_times(sys, E, StartLaw::MuE, o);
        o.cap = n;
        const auto q_batch = sample_hitting_times(sys, reference_target(sys), StartLaw::MuY, o);
        const double N = static_cast<double>(samples);
        TightnessRow r;
        r.m = m;
        r.n = n;
        r.lhs = static_cast<double>(lhs_batch.censored_count()) / N;
        r.q_n = static_cast<double>(q_batch.censored_count()) / N;
        r.bound = ratio * (1.0 / static_cast<double>(m) + static_cast<double>(m) * r.q_n);
        const double se_l = std::sqrt(r.lhs * (1 - r.lhs) / N);
        const double se_q = ratio * static_cast<double>(m) * std::sqrt(r.q_n * (1 - r.q_n) / N);
        r.se = std::sqrt(se_l * se_l + se_q * se_q);
        r.holds = r.lhs <= r.bound + 3 * r.se;
        rows.push_back(r);
    }
    return rows;
}

ShortReturnControl check_short_returns(const SystemModel& sys, const std::vector<TargetSpec>& columns, const Normalizer& norm,
                                       const VerifyConfig& cfg) {
    const double t_small = cfg.tol.short_t;
    const double min_return_mass = cfg.tol.short_return_mass;
    const double max_hitting_mass = cfg.tol.short_hitting_mass;
    if (columns.empty()) throw std::invalid_argument("check_short_returns: empty target sequence");
    ShortReturnControl c;
    c.t_small = t_small;
    auto& out = c.outcome;
    out.theorem = "short_return_control";
    out.seed = cfg.sim.seed;
    out.config_hash = cfg.config_hash;
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Pair p = estimate_pair(sys, columns[k], norm, cfg);
        KRow row = base_row(sys, columns[k], norm, cfg, p);
        const TransformResult T = forward(TransformSpec::fractional(norm.scaling().alpha()), p.ret);
        row.transform_vs_hitting = ks_distance(T.law, p.hit);
        row.transform_clipped = T.clipped;
        out.rows.push_back(row);
        if (k + 1 == columns.size()) {
            c.return_mass_below = p.ret(t_small);
            c.hitting_mass = p.hit.total_mass();
            out.attachments.emplace_back("return", p.ret);
            out.attachments.emplace_back("hitting", p.hit);
            out.attachments.emplace_back("transformed_return", T.law);
        }
    }
    if (c.return_mass_below < min_return_mass)
        out.fail("return mass below t=" + fmt(t_small) + " is " + fmt(c.return_mass_below) + " < " + fmt(min_return_mass));
    if (c.hitting_mass > max_hitting_mass)
        out.fail("hitting mass on the grid is " + fmt(c.hitting_mass) + " > " + fmt(max_hitting_mass));
    return c;
}

}  // namespace rtlab
