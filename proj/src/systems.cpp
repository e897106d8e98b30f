#include "rtlab/systems.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace rtlab {

namespace {
std::atomic<std::uint64_t> g_boole_events{0};

template <class... F> struct overloaded : F... { using F::operator()...; };
template <class... F> overloaded(F...) -> overloaded<F...>;

std::vector<double> stationary_of(const std::vector<std::vector<double>>& P) {
    // solve pi (P - I) = 0 with one equation traded for sum(pi) = 1
    const auto n = static_cast<Eigen::Index>(P.size());
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = P[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] - (i == j ? 1.0 : 0.0);
    A.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw std::invalid_argument("markov: chain is not irreducible (stationary vector not unique)");
    Eigen::VectorXd pi = lu.solve(rhs);
    std::vector<double> out(P.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (pi(i) < -1e-12) throw std::invalid_argument("markov: stationary vector has negative entries");
        out[static_cast<std::size_t>(i)] = std::max(pi(i), 0.0);
    }
    return out;
}

bool in_set(const std::vector<int>& set, int s) { return std::find(set.begin(), set.end(), s) != set.end(); }

int draw_symbol(const std::vector<double>& weights, Rng& rng) {
    double u = rng.uniform(), acc = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        acc += weights[j];
        if (u < acc) return static_cast<int>(j);
    }
    // rounding leftover: last state with positive weight
    for (std::size_t j = weights.size(); j-- > 0;)
        if (weights[j] > 0) return static_cast<int>(j);
    return 0;
}

std::uint64_t saturate(double v) {
    constexpr double kMax = 0x1.0p62;
    return v >= kMax ? static_cast<std::uint64_t>(kMax) : static_cast<std::uint64_t>(v);
}
}  // namespace

DoublingState DoublingState::from_value(double x) {
    if (!(x >= 0 && x < 1)) throw std::invalid_argument("DoublingState: value outside [0,1)");
    return {static_cast<std::uint64_t>(std::ldexp(x, 64))};
}

SystemModel SystemModel::renewal_tower(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("renewal tower: alpha must lie in (0,1]");
    return SystemModel(RenewalTower{alpha}, 1.0, std::nullopt);
}

SystemModel SystemModel::boole() { return SystemModel(BooleMap{}, 2.0, std::nullopt); }

SystemModel SystemModel::doubling() { return SystemModel(DoublingMap{}, 1.0, 1.0); }

SystemModel SystemModel::markov(std::vector<std::vector<double>> P, std::vector<int> reference) {
    const std::size_t n = P.size();
    if (n == 0) throw std::invalid_argument("markov: empty transition matrix");
    for (auto& row : P) {
        if (row.size() != n) throw std::invalid_argument("markov: transition matrix must be square");
        double s = 0;
        for (double p : row) {
            if (!(p >= 0)) throw std::invalid_argument("markov: negative transition probability");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("markov: rows must sum to 1");
    }
    if (reference.empty()) {
        reference.resize(n);
        std::iota(reference.begin(), reference.end(), 0);
    }
    for (int r : reference)
        if (r < 0 || static_cast<std::size_t>(r) >= n) throw std::invalid_argument("markov: reference state out of range");
    auto pi = stationary_of(P);
    double muY = 0;
    for (int r : reference) muY += pi[static_cast<std::size_t>(r)];
    if (!(muY > 0)) throw std::invalid_argument("markov: reference set has zero stationary mass");
    return SystemModel(FiniteMarkovShift{std::move(P), std::move(pi), std::move(reference)}, muY, 1.0);
}

std::string SystemModel::name() const {
    return std::visit(overloaded{
                          [](const RenewalTower& t) {
                              std::ostringstream os;
                              os << "renewal_tower(alpha=" << t.alpha << ")";
                              return os.str();
                          },
                          [](const BooleMap&) { return std::string("boole"); },
                          [](const DoublingMap&) { return std::string("doubling"); },
                          [](const FiniteMarkovShift& m) { return "markov(" + std::to_string(m.P.size()) + " states)"; },
                      },
                      v_);
}

TargetSpec TargetSpec::label_interval(double lo, double hi) {
    TargetSpec t;
    t.kind = TargetKind::LabelInterval;
    t.lo = lo;
    t.hi = hi;
    return t;
}

TargetSpec TargetSpec::interval(double center, double half_width) {
    TargetSpec t;
    t.kind = TargetKind::IntervalInY;
    t.lo = center - half_width;
    t.hi = center + half_width;
    return t;
}

TargetSpec TargetSpec::short_return_column(std::uint64_t depth, double width) {
    TargetSpec t;
    t.kind = TargetKind::ShortReturnColumn;
    t.depth = depth;
    t.width = width;
    return t;
}

TargetSpec TargetSpec::dyadic(int level, std::uint64_t index) {
    TargetSpec t;
    t.kind = TargetKind::Dyadic;
    t.level = level;
    t.index = index;
    return t;
}

TargetSpec TargetSpec::state_set(std::vector<int> states) {
    TargetSpec t;
    t.kind = TargetKind::StateSet;
    t.states = std::move(states);
    return t;
}

std::string TargetSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case TargetKind::LabelInterval: os << "label_interval[" << lo << "," << hi << "]"; break;
        case TargetKind::IntervalInY: os << "interval[" << lo << "," << hi << "]"; break;
        case TargetKind::ShortReturnColumn: os << "short_return_column(depth=" << depth << ",width=" << width << ")"; break;
        case TargetKind::Dyadic: os << "dyadic(level=" << level << ",index=" << index << ")"; break;
        case TargetKind::StateSet:
            os << "state_set{";
            for (std::size_t i = 0; i < states.size(); ++i) os << (i ? "," : "") << states[i];
            os << "}";
            break;
    }
    return os.str();
}

double tower_tail(double alpha, double n) { return std::pow(1.0 + n, -alpha); }

double draw_excursion(double alpha, Rng& rng) {
    double u = rng.uniform_pos();
    if (alpha == 1.0) return std::floor(1.0 / u);
    if (alpha == 0.5) return std::floor(1.0 / (u * u));
    return std::floor(std::pow(u, -1.0 / alpha));
}

double draw_excursion_beyond(double alpha, double j, Rng& rng) {
    double u = rng.uniform_pos();
    double v = alpha == 1.0 ? 1.0 / u : (alpha == 0.5 ? 1.0 / (u * u) : std::pow(u, -1.0 / alpha));
    return std::max(std::floor((1.0 + j) * v), j + 1.0);
}

std::uint64_t boole_singularity_events() { return g_boole_events.load(); }
void note_boole_singularity(std::uint64_t count) { g_boole_events += count; }

void validate_target(const SystemModel& sys, const TargetSpec& t) {
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument("target " + t.describe() + " on " + sys.name() + ": " + why);
    };
    std::visit(overloaded{
                   [&](const RenewalTower&) {
                       if (t.kind == TargetKind::LabelInterval) {
                           if (!(t.lo >= 0 && t.hi <= 1 && t.lo <= t.hi)) fail("label interval must lie in [0,1]");
                       } else if (t.kind == TargetKind::ShortReturnColumn) {
                           if (t.depth < 1) fail("column depth must be >= 1");
                           if (!(t.width >= 0 && t.width <= 1)) fail("column width must lie in [0,1]");
                       } else {
                           fail("unsupported target kind for the renewal tower");
                       }
                   },
                   [&](const BooleMap&) {
                       if (t.kind != TargetKind::IntervalInY) fail("Boole targets are intervals in Y");
                       if (!(t.lo >= -1 && t.hi <= 1 && t.lo <= t.hi)) fail("interval must lie in Y=[-1,1]");
                   },
                   [&](const DoublingMap&) {
                       if (t.kind == TargetKind::Dyadic) {
                           if (t.level < 1 || t.level > 62) fail("dyadic level must lie in 1..62");
                           if (t.index >= (std::uint64_t{1} << t.level)) fail("dyadic index out of range");
                       } else if (t.kind == TargetKind::IntervalInY) {
                           if (!(t.lo >= 0 && t.hi <= 1 && t.lo <= t.hi)) fail("interval must lie in [0,1]");
                       } else {
                           fail("unsupported target kind for the doubling map");
                       }
                   },
                   [&](const FiniteMarkovShift& m) {
                       if (t.kind != TargetKind::StateSet) fail("Markov targets are state sets");
                       for (int s : t.states)
                           if (s < 0 || static_cast<std::size_t>(s) >= m.P.size()) fail("state out of range");
                   },
               },
               sys.params());
}

double measure_of_target(const SystemModel& sys, const TargetSpec& t) {
    validate_target(sys, t);
    double m = std::visit(overloaded{
                              [&](const RenewalTower& tw) {
                                  if (t.kind == TargetKind::LabelInterval) return t.hi - t.lo;
                                  double s = 0;
                                  for (std::uint64_t j = 0; j < t.depth; ++j) s += tower_tail(tw.alpha, static_cast<double>(j));
                                  return t.width * s;
                              },
                              [&](const BooleMap&) { return t.hi - t.lo; },
                              [&](const DoublingMap&) {
                                  if (t.kind == TargetKind::Dyadic) return std::ldexp(1.0, -t.level);
                                  return t.hi - t.lo;
                              },
                              [&](const FiniteMarkovShift& mk) {
                                  double s = 0;
                                  for (std::size_t j = 0; j < mk.P.size(); ++j)
                                      if (in_set(t.states, static_cast<int>(j))) s += mk.stationary[j];
                                  return s;
                              },
                          },
                          sys.params());
    if (!(m > 0)) throw ZeroMeasureTarget("target " + t.describe() + " has zero measure");
    return m;
}

State step(const SystemModel& sys, const State& s, Rng& rng) {
    return std::visit(
        overloaded{
            [&](const RenewalTower& tw) -> State {
                TowerState st = std::get<TowerState>(s);
                if (st.level == 0) {
                    double L = draw_excursion(tw.alpha, rng);
                    if (L >= 2) return TowerState{1, saturate(L - 1), st.label};
                    return TowerState{0, 0, rng.uniform()};
                }
                if (st.remaining > 1) return TowerState{st.level + 1, st.remaining - 1, st.label};
                return TowerState{0, 0, rng.uniform()};
            },
            [&](const BooleMap&) -> State {
                double x = std::get<BooleState>(s).x;
                if (x == 0) {
                    note_boole_singularity();
                    std::clog << "boole: orbit hit x=0, perturbed to 1e-300\n";
                    x = 1e-300;
                }
                return BooleState{x - 1.0 / x};
            },
            [&](const DoublingMap&) -> State {
                auto b = std::get<DoublingState>(s).bits;
                return DoublingState{(b << 1) | rng.bit()};
            },
            [&](const FiniteMarkovShift& m) -> State {
                int sym = std::get<MarkovState>(s).symbol;
                return MarkovState{draw_symbol(m.P[static_cast<std::size_t>(sym)], rng)};
            },
        },
        sys.params());
}

bool contains(const SystemModel& sys, const TargetSpec& t, const State& s) {
    switch (t.kind) {
        case TargetKind::LabelInterval: {
            const auto& st = std::get<TowerState>(s);
            return st.level == 0 && st.label >= t.lo && st.label <= t.hi;
        }
        case TargetKind::ShortReturnColumn: {
            const auto& st = std::get<TowerState>(s);
            return st.level < t.depth && st.label <= t.width;
        }
        case TargetKind::IntervalInY:
            if (sys.as<DoublingMap>()) {
                double x = std::get<DoublingState>(s).value();
                return x >= t.lo && x < t.hi;
            } else {
                double x = std::get<BooleState>(s).x;
                return x >= t.lo && x <= t.hi;
            }
        case TargetKind::Dyadic:
            return (std::get<DoublingState>(s).bits >> (64 - t.level)) == t.index;
        case TargetKind::StateSet:
            return in_set(t.states, std::get<MarkovState>(s).symbol);
    }
    return false;
}

State sample_muY(const SystemModel& sys, Rng& rng) {
    return std::visit(overloaded{
                          [&](const RenewalTower&) -> State { return TowerState{0, 0, rng.uniform()}; },
                          [&](const BooleMap&) -> State { return BooleState{rng.uniform(-1.0, 1.0)}; },
                          [&](const DoublingMap&) -> State { return DoublingState{rng.bits()}; },
                          [&](const FiniteMarkovShift& m) -> State {
                              std::vector<double> w(m.P.size(), 0.0);
                              for (int r : m.reference) w[static_cast<std::size_t>(r)] = m.stationary[static_cast<std::size_t>(r)] / sys.measure_of_Y();
                              return MarkovState{draw_symbol(w, rng)};
                          },
                      },
                      sys.params());
}

TargetSampler::TargetSampler(const SystemModel& sys, const TargetSpec& target)
    : sys_(sys), target_(target), measure_(measure_of_target(sys, target)) {
    if (auto tw = sys.as<RenewalTower>(); tw && target.kind == TargetKind::ShortReturnColumn) {
        double acc = 0;
        cumulative_.reserve(target.depth);
        for (std::uint64_t j = 0; j < target.depth; ++j) {
            acc += tower_tail(tw->alpha, static_cast<double>(j));
            cumulative_.push_back(acc);
        }
        for (auto& c : cumulative_) c /= acc;
    } else if (auto mk = sys.as<FiniteMarkovShift>()) {
        double acc = 0;
        for (std::size_t j = 0; j < mk->P.size(); ++j) {
            if (in_set(target.states, static_cast<int>(j))) acc += mk->stationary[j];
            cumulative_.push_back(acc);
        }
        for (auto& c : cumulative_) c /= acc;
    }
}

State TargetSampler::draw(Rng& rng) const {
    const TargetSpec& t = target_;
    auto pick = [&](double u) {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    };
    switch (t.kind) {
        case TargetKind::LabelInterval:
            return TowerState{0, 0, rng.uniform(t.lo, t.hi)};
        case TargetKind::ShortReturnColumn: {
            const double alpha = sys_.as<RenewalTower>()->alpha;
            std::uint64_t level = pick(rng.uniform());
            double label = rng.uniform(0.0, t.width);
            if (level == 0) return TowerState{0, 0, label};
            // excursion already longer than level: remaining = L - level
            double L = draw_excursion_beyond(alpha, static_cast<double>(level), rng);
            return TowerState{level, saturate(L - static_cast<double>(level)), label};
        }
        case TargetKind::IntervalInY:
            if (sys_.as<DoublingMap>()) return DoublingState::from_value(rng.uniform(t.lo, t.hi));
            return BooleState{rng.uniform(t.lo, t.hi)};
        case TargetKind::Dyadic:
            return DoublingState{(t.index << (64 - t.level)) | (rng.bits() >> t.level)};
        case TargetKind::StateSet: {
            // exclude states outside the set even if rounding puts u on their step
            std::size_t j = pick(rng.uniform());
            while (!in_set(t.states, static_cast<int>(j))) ++j;
            return MarkovState{static_cast<int>(j)};
        }
    }
    throw std::logic_error("unreachable target kind");
}

State sample_muE(const SystemModel& sys, const TargetSpec& target, Rng& rng) { return TargetSampler(sys, target).draw(rng); }

std::optional<ScalingFunction> known_scaling(const SystemModel& sys) {
    return std::visit(overloaded{
                          [](const RenewalTower& t) -> std::optional<ScalingFunction> {
                              if (t.alpha == 1.0) return ScalingFunction(1.0, 1.0, -1.0);  // n / ln n
                              const double pa = std::numbers::pi * t.alpha;
                              return ScalingFunction(std::sin(pa) / pa, t.alpha, 0.0);
                          },
                          [](const BooleMap&) -> std::optional<ScalingFunction> {
                              return ScalingFunction(std::numbers::sqrt2 / std::numbers::pi, 0.5, 0.0);
                          },
                          [](const DoublingMap&) -> std::optional<ScalingFunction> { return ScalingFunction::identity(); },
                          [&](const FiniteMarkovShift&) -> std::optional<ScalingFunction> {
                              return ScalingFunction(1.0 / *sys.total_measure(), 1.0, 0.0);
                          },
                      },
                      sys.params());
}

}  // namespace rtlab
