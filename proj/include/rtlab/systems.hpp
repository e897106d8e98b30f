#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rtlab/rng.hpp"
#include "rtlab/scaling.hpp"

namespace rtlab {

// Tower over Y = {level 0} x [0,1]: excursion lengths L >= 1 with
// Pr[L > n] = (1+n)^(-alpha); level j carries mass Q(j).
struct RenewalTower {
    double alpha;
};
// x -> x - 1/x on the real line, Lebesgue measure, Y = [-1,1]
struct BooleMap {};
// x -> 2x mod 1 on [0,1), Y = X
struct DoublingMap {};
// Stationary Markov chain on {0..n-1}; mu = stationary vector, Y = reference states.
struct FiniteMarkovShift {
    std::vector<std::vector<double>> P;
    std::vector<double> stationary;
    std::vector<int> reference;
};

struct TowerState {
    std::uint64_t level = 0;
    std::uint64_t remaining = 0;  // steps until the excursion returns to level 0
    double label = 0;
};
struct BooleState {
    double x = 0;
};
// 64-bit binary expansion window; stepping shifts in a fresh random digit,
// so the orbit never collapses to 0 the way 2x mod 1 does in floating point.
struct DoublingState {
    std::uint64_t bits = 0;
    double value() const { return static_cast<double>(bits >> 11) * 0x1.0p-53; }
    static DoublingState from_value(double x);
};
struct MarkovState {
    int symbol = 0;
};

using State = std::variant<TowerState, BooleState, DoublingState, MarkovState>;

class SystemModel {
public:
    using Variant = std::variant<RenewalTower, BooleMap, DoublingMap, FiniteMarkovShift>;

    static SystemModel renewal_tower(double alpha);
    static SystemModel boole();
    static SystemModel doubling();
    // stationary vector computed when not supplied; reference empty = all states
    static SystemModel markov(std::vector<std::vector<double>> P, std::vector<int> reference = {});

    const Variant& params() const { return v_; }
    double measure_of_Y() const { return muY_; }
    std::optional<double> total_measure() const { return total_; }
    std::string name() const;

    template <class T> const T* as() const { return std::get_if<T>(&v_); }

private:
    SystemModel(Variant v, double muY, std::optional<double> total) : v_(std::move(v)), muY_(muY), total_(total) {}
    Variant v_;
    double muY_;
    std::optional<double> total_;
};

enum class TargetKind { LabelInterval, IntervalInY, ShortReturnColumn, Dyadic, StateSet };

struct TargetSpec {
    TargetKind kind = TargetKind::LabelInterval;
    double lo = 0, hi = 0;      // label / interval bounds
    std::uint64_t depth = 0;    // column
    double width = 0;           // column
    int level = 0;              // dyadic: [index 2^-level, (index+1) 2^-level)
    std::uint64_t index = 1;
    std::vector<int> states;    // state set

    static TargetSpec label_interval(double p) { return label_interval(0.0, p); }
    static TargetSpec label_interval(double lo, double hi);
    static TargetSpec interval(double center, double half_width);
    static TargetSpec short_return_column(std::uint64_t depth, double width);
    static TargetSpec dyadic(int level, std::uint64_t index = 1);
    static TargetSpec state_set(std::vector<int> states);

    std::string describe() const;
};

class ZeroMeasureTarget : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double tower_tail(double alpha, double n);                    // Q(n)
double draw_excursion(double alpha, Rng& rng);                // L
double draw_excursion_beyond(double alpha, double j, Rng& rng);  // L given L > j

// number of x = 0 singularities of Boole's map met so far (process-wide)
std::uint64_t boole_singularity_events();
void note_boole_singularity(std::uint64_t count = 1);

State step(const SystemModel& sys, const State& s, Rng& rng);
bool contains(const SystemModel& sys, const TargetSpec& target, const State& s);
State sample_muY(const SystemModel& sys, Rng& rng);
State sample_muE(const SystemModel& sys, const TargetSpec& target, Rng& rng);
double measure_of_target(const SystemModel& sys, const TargetSpec& target);
std::optional<ScalingFunction> known_scaling(const SystemModel& sys);

// Precomputed sampler for mu conditioned on E (column level tables etc.)
class TargetSampler {
public:
    TargetSampler(const SystemModel& sys, const TargetSpec& target);
    State draw(Rng& rng) const;
    double measure() const { return measure_; }

private:
    SystemModel sys_;
    TargetSpec target_;
    double measure_;
    std::vector<double> cumulative_;  // column levels or chain states
};

// throws if the target does not fit the system
void validate_target(const SystemModel& sys, const TargetSpec& target);

}  // namespace rtlab
