#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtlab/laws.hpp"
#include "rtlab/simulate.hpp"
#include "rtlab/transform.hpp"

namespace rtlab {

struct Tolerances {
    double transform = 0.03;    // d(T(F~_emp), F_emp)
    double law = 0.03;          // d(F~_emp, law), d(F_emp, law)
    double gap = 0.03;          // sup |F~_emp - F_emp|
    double censored = 0.05;     // ceiling on censored fraction per estimate
    double robustness = 0.03;   // perturbed vs unperturbed targets
    double decomposition = 1e-12;  // exact path-space identity, rounding only
    double short_return_mass = 0.95;   // short-return control: min return mass below t_small
    double short_hitting_mass = 0.05;  // short-return control: max hitting mass on the grid
    double short_t = 0.1;              // t_small
};

struct VerifyConfig {
    SimulationOptions sim;
    std::vector<double> grid = uniform_grid(10.0, 512);
    Tolerances tol;
    std::string config_hash;
};

// One row per target of the sequence; -1 marks distances not computed.
struct KRow {
    std::string target;
    double measure = 0;
    double normalized_cap = 0;             // normalized value of the cap
    double transform_vs_hitting = -1;      // d(T(F~), F) on the grid
    double transform_vs_hitting_in_range = -1;  // same, restricted to t <= normalized cap
    double return_vs_law = -1;
    double hitting_vs_law = -1;
    double return_vs_hitting = -1;
    double censored_return = 0;
    double censored_hitting = 0;
    double transform_clipped = 0;
    double perturbed_return = -1;   // robustness: d(F~_E, F~_E')
    double perturbed_hitting = -1;  // robustness: d(F_E, F_E')
};

struct VerificationOutcome {
    std::string theorem;
    std::vector<KRow> rows;
    bool pass = true;
    std::vector<std::string> failures;  // each names the violated tolerance
    std::vector<std::string> notes;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::pair<std::string, SubDistribution>> attachments;

    void fail(std::string why) {
        pass = false;
        failures.push_back(std::move(why));
    }
};

// F~ from mu_E, F from mu_Y at the last target; compares T(F~) with F.
// `spec` selects HLV / fractional / distorted; the normalizer must match it.
// With a law, both empirical CDFs must also lie within the law tolerance of it.
VerificationOutcome check_return_vs_hitting(const SystemModel& sys, const std::vector<TargetSpec>& targets,
                                            const TransformSpec& spec, const Normalizer& norm, const VerifyConfig& cfg,
                                            const std::optional<LimitLaw>& law = std::nullopt);

// Per target: d(F~, law), d(F, law), sup |F~ - F|; passes when all three are
// within tolerance at the last target and the gap never grows by more than
// twice the Monte Carlo noise level from one target to the next.
VerificationOutcome check_convergence_to_H(const SystemModel& sys, const std::vector<TargetSpec>& targets,
                                           const Normalizer& norm, const LimitLaw& law, const VerifyConfig& cfg);

// max over n = 0..n_max of |mu(A) - [mu(A, phi_B > n) + sum_l int_{B, phi_B > n-l} That^l 1_A dmu]|,
// every term by exhaustive path enumeration, That as the adjoint transition matrix.
double check_decomposition(const SystemModel& chain, const std::vector<int>& A, const std::vector<int>& B, int n_max);

// E'_k = [eps_k p_k, (1 + eps_k) p_k] against E_k = [0, p_k]. eps must tend to 0:
// non-increasing with last <= first/2, or identically 0.
VerificationOutcome check_robustness(const SystemModel& sys, const std::vector<double>& p, const std::vector<double>& eps,
                                     const Normalizer& norm, const VerifyConfig& cfg);
void validate_perturbation(const std::vector<double>& eps);

struct TightnessRow {
    std::uint64_t m = 0, n = 0;
    double lhs = 0;       // mu_E(phi_E > m n)
    double q_n = 0;       // mu_Y(phi_Y > n)
    double bound = 0;     // mu(Y)/mu(E) (1/m + m q_n)
    double se = 0;        // combined Monte Carlo standard error
    bool holds = false;   // lhs <= bound + 3 se
};

std::vector<TightnessRow> check_tightness(const SystemModel& sys, const TargetSpec& E,
                                          const std::vector<std::pair<std::uint64_t, std::uint64_t>>& mn,
                                          std::uint64_t samples, std::uint64_t seed, unsigned threads = 1);

// Column targets: return mass at t_small and hitting mass on the whole grid.
struct ShortReturnControl {
    double return_mass_below = 0;
    double hitting_mass = 0;
    double t_small = 0;
    VerificationOutcome outcome;
};
ShortReturnControl check_short_returns(const SystemModel& sys, const std::vector<TargetSpec>& columns, const Normalizer& norm,
                                       const VerifyConfig& cfg);

}  // namespace rtlab
