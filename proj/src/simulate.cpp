#include "rtlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rtlab {

namespace {

constexpr std::uint64_t kMaxCap = std::uint64_t{1} << 53;

unsigned resolve_threads(unsigned t) {
    if (t == 0) t = std::max(1u, std::thread::hardware_concurrency());
    return t;
}

// Runs body(part, begin, end) over contiguous index ranges, one per thread.
template <class Body>
void parallel_ranges(std::uint64_t n, unsigned threads, Body&& body) {
    threads = static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(n, 1)));
    if (threads <= 1) {
        body(0u, std::uint64_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) {
        std::uint64_t b = n * k / threads, e = n * (k + 1) / threads;
        pool.emplace_back([&body, k, b, e] { body(k, b, e); });
    }
}

using Hit = std::optional<std::uint64_t>;

Hit tower_label_return(const RenewalTower& tw, const TargetSpec& E, const TowerState& s, std::uint64_t cap, Rng& rng) {
    double t = s.level > 0 ? static_cast<double>(s.remaining) : draw_excursion(tw.alpha, rng);
    const double limit = static_cast<double>(cap);
    for (;;) {
        if (t > limit) return std::nullopt;
        const double u = rng.uniform();
        if (u >= E.lo && u <= E.hi) return static_cast<std::uint64_t>(t);
        t += draw_excursion(tw.alpha, rng);
    }
}

Hit tower_column_return(const RenewalTower& tw, const TargetSpec& E, const TowerState& s, std::uint64_t cap, Rng& rng) {
    const double limit = static_cast<double>(cap);
    const double w = E.width;
    const bool deep = E.depth >= 2;
    double t = 0, u = s.label;
    if (s.level > 0) {
        if (s.remaining > 1 && u <= w && s.level + 1 < E.depth) return 1;
        t = static_cast<double>(s.remaining);
        if (t > limit) return std::nullopt;
        u = rng.uniform();
        if (u <= w) return static_cast<std::uint64_t>(t);
    }
    for (;;) {
        const double L = draw_excursion(tw.alpha, rng);
        if (L >= 2 && u <= w && deep) return t + 1 > limit ? Hit{} : Hit{static_cast<std::uint64_t>(t + 1)};
        t += L;
        if (t > limit) return std::nullopt;
        u = rng.uniform();
        if (u <= w) return static_cast<std::uint64_t>(t);
    }
}

inline double boole_step(double x) {
    if (x == 0) {
        note_boole_singularity();
        x = 1e-300;
    }
    return x - 1.0 / x;
}

Hit boole_return(const TargetSpec& E, double x, std::uint64_t cap) {
    for (std::uint64_t n = 1; n <= cap; ++n) {
        x = boole_step(x);
        if (x >= E.lo && x <= E.hi) return n;
    }
    return std::nullopt;
}

Hit doubling_return(const TargetSpec& E, std::uint64_t bits, std::uint64_t cap, Rng& rng) {
    const int shift = 64 - E.level;
    for (std::uint64_t n = 1; n <= cap; ++n) {
        bits = (bits << 1) | rng.bit();
        if (E.kind == TargetKind::Dyadic) {
            if ((bits >> shift) == E.index) return n;
        } else {
            const double x = DoublingState{bits}.value();
            if (x >= E.lo && x < E.hi) return n;
        }
    }
    return std::nullopt;
}

Hit stepped_return(const SystemModel& sys, const TargetSpec& E, State x, std::uint64_t cap, Rng& rng) {
    for (std::uint64_t n = 1; n <= cap; ++n) {
        x = step(sys, x, rng);
        if (contains(sys, E, x)) return n;
    }
    return std::nullopt;
}

// Boole orbits interleaved across lanes so the x - 1/x recurrence vectorizes.
// The vector loop only records whether a lane touched E during a chunk; such
// lanes (and lanes that ran into x = 0, which shows up as a non-finite value)
// are replayed in scalar code from the chunk start. Each orbit is a
// deterministic function of its start point, so results match the scalar path
// and do not depend on the lane schedule.
void boole_batch(const TargetSpec& E, std::span<const double> starts, std::uint64_t cap, std::span<std::uint64_t> phi,
                 std::span<std::uint8_t> censored, std::uint64_t& singular) {
    constexpr int kLanes = 32;
    constexpr int kChunk = 64;
    const double lo = E.lo, hi = E.hi;
    alignas(64) double x[kLanes];
    alignas(64) double x0[kLanes];
    alignas(64) std::int64_t touched[kLanes];
    std::uint64_t steps[kLanes];
    std::size_t idx[kLanes];
    bool live[kLanes];
    std::size_t next = 0;
    int active = 0;
    auto load = [&](int l) {
        if (next < starts.size()) {
            idx[l] = next;
            x[l] = starts[next++];
            steps[l] = 0;
            live[l] = true;
            ++active;
        } else {
            x[l] = 0.5;
            live[l] = false;
        }
    };
    for (int l = 0; l < kLanes; ++l) load(l);
    while (active > 0) {
        for (int l = 0; l < kLanes; ++l) {
            x0[l] = x[l];
            touched[l] = 0;
        }
        for (int k = 0; k < kChunk; ++k) {
            for (int l = 0; l < kLanes; ++l) {
                const double v = x[l] - 1.0 / x[l];
                x[l] = v;
                touched[l] |= static_cast<std::int64_t>((v >= lo) & (v <= hi));
            }
        }
        for (int l = 0; l < kLanes; ++l) {
            if (!live[l]) continue;
            int first = kChunk;
            if (touched[l] || !std::isfinite(x[l])) {
                double v = x0[l];
                for (int k = 0; k < kChunk; ++k) {
                    if (v == 0.0) {
                        ++singular;
                        v = 1e-300;
                    }
                    v = v - 1.0 / v;
                    if (v >= lo && v <= hi) {
                        first = k;
                        break;
                    }
                }
                x[l] = v;
            }
            if (first < kChunk) {
                const std::uint64_t n = steps[l] + static_cast<std::uint64_t>(first) + 1;
                if (n <= cap) phi[idx[l]] = n; else censored[idx[l]] = 1;
            } else {
                steps[l] += kChunk;
                if (steps[l] < cap) continue;
                censored[idx[l]] = 1;
            }
            --active;
            load(l);
        }
    }
}

}  // namespace

double Normalizer::operator()(double phi, double measure) const {
    if (kind_ == Kind::Gamma) return f_.gamma(measure) * phi;
    return measure * f_(phi);
}

std::string Normalizer::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << (kind_ == Kind::Gamma ? "gamma" : "distorted") << "(c=" << f_.c() << ",alpha=" << f_.alpha() << ",beta=" << f_.beta() << ")";
    return os.str();
}

std::uint64_t ReturnSampleBatch::censored_count() const {
    return static_cast<std::uint64_t>(std::count(censored.begin(), censored.end(), std::uint8_t{1}));
}

std::optional<std::uint64_t> first_return_time(const SystemModel& sys, const TargetSpec& E, const State& start, std::uint64_t cap,
                                               Rng& rng, bool unit_stepping) {
    if (cap < 1) throw std::invalid_argument("first_return_time: cap must be >= 1");
    validate_target(sys, E);
    if (unit_stepping) return stepped_return(sys, E, start, cap, rng);
    if (auto tw = sys.as<RenewalTower>()) {
        const auto& s = std::get<TowerState>(start);
        return E.kind == TargetKind::LabelInterval ? tower_label_return(*tw, E, s, cap, rng) : tower_column_return(*tw, E, s, cap, rng);
    }
    if (sys.as<BooleMap>()) return boole_return(E, std::get<BooleState>(start).x, cap);
    if (sys.as<DoublingMap>()) return doubling_return(E, std::get<DoublingState>(start).bits, cap, rng);
    return stepped_return(sys, E, start, cap, rng);
}

ReturnSampleBatch sample_hitting_times(const SystemModel& sys, const TargetSpec& E, StartLaw start, const SimulationOptions& opt) {
    if (opt.samples < 1) throw std::invalid_argument("simulation: samples must be >= 1");
    if (opt.cap < 1 || opt.cap > kMaxCap) throw std::invalid_argument("simulation: cap must lie in [1, 2^53]");
    const TargetSampler sampler(sys, E);

    ReturnSampleBatch batch;
    batch.phi.assign(opt.samples, 0);
    batch.censored.assign(opt.samples, 0);
    batch.cap = opt.cap;
    batch.seed = opt.seed;
    batch.measure = sampler.measure();
    batch.start = start;
    batch.system = sys.name();
    batch.target = E.describe();
    const Salt salt = start == StartLaw::MuE ? Salt::Return : Salt::Hitting;

    auto draw_start = [&](Rng& rng) { return start == StartLaw::MuE ? sampler.draw(rng) : sample_muY(sys, rng); };

    if (sys.as<BooleMap>() && !opt.unit_stepping) {
        std::vector<double> starts(opt.samples);
        for (std::uint64_t i = 0; i < opt.samples; ++i) {
            Rng rng(opt.seed, i, salt);
            starts[i] = std::get<BooleState>(draw_start(rng)).x;
        }
        std::vector<std::uint64_t> singular(resolve_threads(opt.threads), 0);
        parallel_ranges(opt.samples, opt.threads, [&](unsigned part, std::uint64_t b, std::uint64_t e) {
            boole_batch(E, std::span(starts).subspan(b, e - b), opt.cap, std::span(batch.phi).subspan(b, e - b),
                        std::span(batch.censored).subspan(b, e - b), singular[part]);
        });
        for (auto s : singular) batch.singular_events += s;
        if (batch.singular_events > 0) {
            note_boole_singularity(batch.singular_events);
            std::clog << "boole: " << batch.singular_events << " orbit(s) hit x=0, perturbed to 1e-300\n";
        }
        return batch;
    }

    parallel_ranges(opt.samples, opt.threads, [&](unsigned, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
            Rng rng(opt.seed, i, salt);
            const State s0 = draw_start(rng);
            auto hit = first_return_time(sys, E, s0, opt.cap, rng, opt.unit_stepping);
            if (hit) batch.phi[i] = *hit; else batch.censored[i] = 1;
        }
    });
    return batch;
}

std::vector<double> normalized_values(const ReturnSampleBatch& batch, const Normalizer& norm) {
    std::vector<double> v(batch.size());
    const double scale = norm.kind() == Normalizer::Kind::Gamma ? norm(1.0, batch.measure) : 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (batch.censored[i]) v[i] = std::numeric_limits<double>::infinity();
        else v[i] = norm.kind() == Normalizer::Kind::Gamma ? scale * static_cast<double>(batch.phi[i]) : norm(static_cast<double>(batch.phi[i]), batch.measure);
    }
    return v;
}

SubDistribution empirical_cdf(const ReturnSampleBatch& batch, const Normalizer& norm, std::span<const double> grid) {
    validate_grid(grid);
    auto v = normalized_values(batch, norm);
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    std::vector<double> F(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        F[i] = static_cast<double>(std::upper_bound(v.begin(), v.end(), grid[i]) - v.begin()) / n;
    const std::uint64_t censored = batch.censored_count();
    const auto below = static_cast<std::uint64_t>(std::upper_bound(v.begin(), v.end(), grid.back()) - v.begin());
    return SubDistribution({grid.begin(), grid.end()}, std::move(F), v.size(), censored, v.size() - censored - below);
}

SubDistribution estimate_cdf(const SystemModel& sys, const TargetSpec& E, StartLaw start, const Normalizer& norm,
                             const SimulationOptions& opt, std::span<const double> grid) {
    return empirical_cdf(sample_hitting_times(sys, E, start, opt), norm, grid);
}

TargetSpec reference_target(const SystemModel& sys) {
    if (sys.as<RenewalTower>()) return TargetSpec::label_interval(0.0, 1.0);
    if (sys.as<BooleMap>()) return TargetSpec::interval(0.0, 1.0);
    if (sys.as<DoublingMap>()) {
        TargetSpec t;  // all of [0,1)
        t.kind = TargetKind::IntervalInY;
        t.lo = 0.0;
        t.hi = 1.0;
        return t;
    }
    return TargetSpec::state_set(sys.as<FiniteMarkovShift>()->reference);
}

TailsAndWandering estimate_tails_and_wandering(const SystemModel& sys, std::uint64_t n_max, std::uint64_t samples,
                                               std::uint64_t seed, unsigned threads) {
    if (n_max < 2) throw std::invalid_argument("estimate_tails_and_wandering: nMax must be >= 2");
    SimulationOptions opt;
    opt.samples = samples;
    opt.cap = n_max;
    opt.seed = seed;
    opt.threads = threads;
    const auto batch = sample_hitting_times(sys, reference_target(sys), StartLaw::MuY, opt);

    // count[n] = #{phi = n}; censored means phi > n_max
    std::vector<std::uint64_t> count(n_max + 2, 0);
    for (std::size_t i = 0; i < batch.size(); ++i) count[batch.censored[i] ? n_max + 1 : batch.phi[i]]++;
    TailsAndWandering r;
    r.q.assign(n_max + 1, 0.0);
    r.q_se.assign(n_max + 1, 0.0);
    r.w.assign(n_max, 0.0);
    const double N = static_cast<double>(samples);
    std::uint64_t above = samples;  // #{phi > n}
    for (std::uint64_t n = 0; n <= n_max; ++n) {
        above -= count[n];
        const double q = static_cast<double>(above) / N;
        r.q[n] = q;
        r.q_se[n] = std::sqrt(q * (1 - q) / N);
    }
    r.q[0] = 1.0;
    r.q_se[0] = 0.0;
    double acc = 0;
    for (std::uint64_t N1 = 1; N1 <= n_max; ++N1) {
        acc += r.q[N1 - 1];
        r.w[N1 - 1] = sys.measure_of_Y() * acc;
    }
    return r;
}

namespace {
std::ostream& prepare(std::ostream& os, const CsvMeta& meta) {
    os.imbue(std::locale::classic());
    os.precision(17);
    os << "# config_hash=" << meta.config_hash << " seed=" << meta.seed << '\n';
    return os;
}
}  // namespace

void write_batch_csv(std::ostream& os, const ReturnSampleBatch& batch, const Normalizer& norm, const CsvMeta& meta) {
    prepare(os, meta);
    os << "sample_index,phi,censored,normalized_value\n";
    const auto v = normalized_values(batch, norm);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.censored[i]) os << i << ",,1,\n";
        else os << i << ',' << batch.phi[i] << ",0," << v[i] << '\n';
    }
}

void write_cdf_csv(std::ostream& os, const SubDistribution& F, const CsvMeta& meta, const std::string& column) {
    prepare(os, meta);
    os << "t," << column << '\n';
    for (std::size_t i = 0; i < F.size(); ++i) os << F.grid()[i] << ',' << F[i] << '\n';
}

void write_columns_csv(std::ostream& os, const CsvMeta& meta, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size() || columns.empty()) throw std::invalid_argument("write_columns_csv: one name per column");
    for (const auto& c : columns)
        if (c.size() != columns[0].size()) throw std::invalid_argument("write_columns_csv: ragged columns");
    prepare(os, meta);
    for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
    os << '\n';
    for (std::size_t i = 0; i < columns[0].size(); ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "," : "") << columns[j][i];
        os << '\n';
    }
}

}  // namespace rtlab
