#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtlab/laws.hpp"
#include "rtlab/simulate.hpp"
#include "rtlab/transform.hpp"
#include "rtlab/verify.hpp"

namespace rtlab {

// Field-level configuration error; what() starts with the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class ScalingSource { Known, Estimated, Explicit };
enum class Mode { Return, Hitting, Both, Distorted };
enum class LawChoice { None, Halpha, HalphaFixedPoint, Gzero, Exponential };
enum class TransformInput { Return, Law };
enum class TransformDirection { Forward, Inverse };

struct ScalingConfig {
    ScalingSource source = ScalingSource::Known;
    std::uint64_t n_max = 0, n_samples = 0;   // estimated
    std::optional<double> alpha;               // estimated (defaults to the known index), explicit
    double c = 1, beta = 0;                    // explicit
};

struct TransformConfig {
    std::optional<TransformKind> kind;  // unset: chosen from system and mode
    TransformInput input = TransformInput::Return;
    TransformDirection direction = TransformDirection::Forward;
};

struct DecompositionConfig {
    std::vector<int> A, B;
    int n_max = 8;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    SystemModel system = SystemModel::renewal_tower(0.5);
    std::vector<TargetSpec> targets;
    std::vector<double> eps;  // label-interval perturbations (robustness)
    ScalingConfig scaling;
    Mode mode = Mode::Both;
    LawChoice law = LawChoice::None;
    std::uint64_t n_samples = 10000;
    std::uint64_t cap = 10'000'000;
    double t_max = 10;
    std::size_t points = 513;
    Tolerances tol;
    TransformConfig transform;
    std::optional<DecompositionConfig> decomposition;
    unsigned threads = 1;
    std::string output = "out";

    // canonical JSON (sorted keys, defaults filled in); output and threads excluded
    std::string canonical() const;
    // 16 hex digits, FNV-1a 64 of canonical()
    std::string hash() const;

    std::vector<double> grid() const { return uniform_grid(t_max, points - 1); }
    SimulationOptions simulation() const;
    VerifyConfig verify_config() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

// Scaling function selected by the config; estimation runs the simulator.
struct ResolvedScaling {
    ScalingFunction f;
    std::optional<ReturnSequenceFit> fit;
    std::optional<TailsAndWandering> tails;
};
ResolvedScaling resolve_scaling(const ExperimentConfig& cfg);

Normalizer make_normalizer(const ExperimentConfig& cfg, const ScalingFunction& f);
TransformSpec make_transform(const ExperimentConfig& cfg, const ScalingFunction& f);
std::optional<LimitLaw> make_law(const ExperimentConfig& cfg, const ScalingFunction& f);

}  // namespace rtlab
