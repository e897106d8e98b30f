#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtlab/laws.hpp"
#include "rtlab/scaling.hpp"
#include "rtlab/subdistribution.hpp"
#include "rtlab/systems.hpp"

namespace rtlab {

enum class StartLaw { MuE, MuY };

// Turns a raw time phi into normalized time: gamma(mu(E)) phi, or the
// distorted statistic mu(E) a(phi).
class Normalizer {
public:
    enum class Kind { Gamma, Distorted };
    static Normalizer gamma(ScalingFunction f) { return {Kind::Gamma, f}; }
    static Normalizer distorted(ScalingFunction f) { return {Kind::Distorted, f}; }

    double operator()(double phi, double measure) const;
    Kind kind() const { return kind_; }
    const ScalingFunction& scaling() const { return f_; }
    std::string describe() const;

private:
    Normalizer(Kind k, ScalingFunction f) : kind_(k), f_(f) {}
    Kind kind_;
    ScalingFunction f_;
};

struct SimulationOptions {
    std::uint64_t samples = 10000;
    std::uint64_t cap = 10'000'000;
    std::uint64_t seed = 0;
    unsigned threads = 1;     // 0 = hardware concurrency
    bool unit_stepping = false;  // step the tower one unit at a time instead of by excursions
};

struct ReturnSampleBatch {
    std::vector<std::uint64_t> phi;  // 0 where censored
    std::vector<std::uint8_t> censored;
    std::uint64_t cap = 0;
    std::uint64_t seed = 0;
    double measure = 0;  // mu(E)
    StartLaw start = StartLaw::MuE;
    std::string system, target;
    std::uint64_t singular_events = 0;  // Boole x = 0 perturbations during the batch

    std::size_t size() const { return phi.size(); }
    std::uint64_t censored_count() const;
};

// least n in [1, cap] with T^n(start) in E; nullopt when censored
std::optional<std::uint64_t> first_return_time(const SystemModel& sys, const TargetSpec& target, const State& start,
                                               std::uint64_t cap, Rng& rng, bool unit_stepping = false);

ReturnSampleBatch sample_hitting_times(const SystemModel& sys, const TargetSpec& target, StartLaw start,
                                       const SimulationOptions& opt);

std::vector<double> normalized_values(const ReturnSampleBatch& batch, const Normalizer& norm);  // +inf where censored
SubDistribution empirical_cdf(const ReturnSampleBatch& batch, const Normalizer& norm, std::span<const double> grid);

SubDistribution estimate_cdf(const SystemModel& sys, const TargetSpec& target, StartLaw start, const Normalizer& norm,
                             const SimulationOptions& opt, std::span<const double> grid);

struct TailsAndWandering {
    std::vector<double> q;     // q[n] = mu_Y(phi_Y > n), n = 0..nMax, q[0] = 1
    std::vector<double> q_se;  // binomial standard errors
    std::vector<double> w;     // w[N-1] = w_N = mu(Y) sum_{n<N} q_n, N = 1..nMax
};

// reference set Y as a target of the system
TargetSpec reference_target(const SystemModel& sys);

TailsAndWandering estimate_tails_and_wandering(const SystemModel& sys, std::uint64_t n_max, std::uint64_t samples,
                                               std::uint64_t seed, unsigned threads = 1);

// CSV writers; every file opens with "# config_hash=<hex> seed=<n>"
struct CsvMeta {
    std::string config_hash;
    std::uint64_t seed = 0;
};
void write_batch_csv(std::ostream& os, const ReturnSampleBatch& batch, const Normalizer& norm, const CsvMeta& meta);
void write_cdf_csv(std::ostream& os, const SubDistribution& F, const CsvMeta& meta, const std::string& column = "F");
// equal-length columns under the given header names
void write_columns_csv(std::ostream& os, const CsvMeta& meta, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns);

}  // namespace rtlab
