#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "rtlab/simulate.hpp"
#include "rtlab/verify.hpp"

using namespace rtlab;
using doctest::Approx;

namespace {
SimulationOptions opts(std::uint64_t samples, std::uint64_t cap, std::uint64_t seed, unsigned threads = 1) {
    SimulationOptions o;
    o.samples = samples;
    o.cap = cap;
    o.seed = seed;
    o.threads = threads;
    return o;
}

double mean_phi(const ReturnSampleBatch& b) {
    double s = 0;
    for (std::size_t i = 0; i < b.size(); ++i) s += b.censored[i] ? static_cast<double>(b.cap) : static_cast<double>(b.phi[i]);
    return s / static_cast<double>(b.size());
}
}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("first return examples") {
    Rng rng(1, 0);
    const auto dbl = SystemModel::doubling();
    // 0.3 -> 0.6 -> 0.2
    CHECK(first_return_time(dbl, TargetSpec::dyadic(1, 0), DoublingState::from_value(0.3), 100, rng) == 2u);
    CHECK_FALSE(first_return_time(dbl, TargetSpec::dyadic(1, 0), DoublingState::from_value(0.3), 1, rng).has_value());

    // E = Y on the tower: phi is one excursion, tail Q
    const auto tower = SystemModel::renewal_tower(0.5);
    const auto b = sample_hitting_times(tower, TargetSpec::label_interval(1.0), StartLaw::MuE, opts(200'000, 1'000'000, 2));
    for (double n : {1.0, 10.0, 100.0}) {
        double above = 0;
        for (std::size_t i = 0; i < b.size(); ++i) above += b.censored[i] || static_cast<double>(b.phi[i]) > n;
        const double q = std::pow(1 + n, -0.5);
        CHECK(std::abs(above / 2e5 - q) <= 3 * std::sqrt(q * (1 - q) / 2e5));
    }
}

TEST_CASE("tower: excursion jumps reproduce unit stepping bit for bit") {
    const auto tower = SystemModel::renewal_tower(0.5);
    for (const auto& E : {TargetSpec::label_interval(0.05), TargetSpec::label_interval(0.2, 0.3), TargetSpec::short_return_column(20, 0.05)}) {
        for (StartLaw s : {StartLaw::MuE, StartLaw::MuY}) {
            auto o = opts(3000, 20'000, 9);
            const auto fast = sample_hitting_times(tower, E, s, o);
            o.unit_stepping = true;
            const auto slow = sample_hitting_times(tower, E, s, o);
            CHECK(fast.phi == slow.phi);
            CHECK(fast.censored == slow.censored);
        }
    }
}

TEST_CASE("boole: vector kernel reproduces scalar stepping bit for bit") {
    const auto boole = SystemModel::boole();
    for (double hw : {1e-2, 1e-3}) {
        auto o = opts(300, 200'000, 4);
        const auto fast = sample_hitting_times(boole, TargetSpec::interval(0, hw), StartLaw::MuE, o);
        o.unit_stepping = true;
        const auto slow = sample_hitting_times(boole, TargetSpec::interval(0, hw), StartLaw::MuE, o);
        CHECK(fast.phi == slow.phi);
        CHECK(fast.censored == slow.censored);
    }
}

TEST_CASE("tower phi has infinite mean") {
    const auto tower = SystemModel::renewal_tower(0.5);
    std::vector<double> m;
    for (std::uint64_t cap : {1'000ull, 100'000ull, 10'000'000ull}) m.push_back(mean_phi(sample_hitting_times(tower, TargetSpec::label_interval(0.01), StartLaw::MuE, opts(20'000, cap, 3))));
    // E[min(phi, cap)] grows like sqrt(cap) once cap exceeds the scale 1/p^2
    CHECK(m[1] > 3 * m[0]);
    CHECK(m[2] > 3 * m[1]);
}

TEST_CASE("Kac formula on finite-measure systems") {
    const auto dbl = SystemModel::doubling();
    for (int level : {3, 6}) {
        const auto E = TargetSpec::dyadic(level);
        const auto b = sample_hitting_times(dbl, E, StartLaw::MuE, opts(100'000, 1'000'000, 5));
        REQUIRE(b.censored_count() == 0);
        double s = 0, s2 = 0;
        for (auto p : b.phi) {
            s += static_cast<double>(p);
            s2 += static_cast<double>(p) * static_cast<double>(p);
        }
        const double n = static_cast<double>(b.size()), mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - std::ldexp(1.0, level)) <= 3 * se);
    }
    const auto m = SystemModel::markov({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.25, 0.25, 0.5}});
    const auto E = TargetSpec::state_set({1});
    const auto b = sample_hitting_times(m, E, StartLaw::MuE, opts(100'000, 1'000'000, 6));
    double s = 0, s2 = 0;
    for (auto p : b.phi) {
        s += static_cast<double>(p);
        s2 += static_cast<double>(p) * static_cast<double>(p);
    }
    const double n = 1e5, mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1 / measure_of_target(m, E)) <= 3 * se);
}

TEST_CASE("estimate_cdf examples") {
    const auto grid = uniform_grid(10, 512);
    const auto dbl = SystemModel::doubling();
    const auto F = estimate_cdf(dbl, TargetSpec::dyadic(10), StartLaw::MuE, Normalizer::gamma(ScalingFunction::identity()), opts(20'000, 100'000'000, 7), grid);
    CHECK(ks_distance(F, LimitLaw::exponential()) <= 0.05);

    // tower alpha = 1/2 at p = 0.01: the return law is close to the transform fixed point
    const auto tower = SystemModel::renewal_tower(0.5);
    const auto f = *known_scaling(tower);
    CHECK(f.gamma(0.01) == Approx(4e-4 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-13));
    const auto T = estimate_cdf(tower, TargetSpec::label_interval(0.01), StartLaw::MuE, Normalizer::gamma(f), opts(100'000, 10'000'000, 8), grid);
    CHECK(ks_distance(T, LimitLaw::transform_fixed_point(0.5)) <= 0.02);

    // cap = 1: the mass is the one-step return probability, here 1/2
    const auto one = estimate_cdf(dbl, TargetSpec::dyadic(1, 0), StartLaw::MuE, Normalizer::gamma(ScalingFunction::identity()), opts(100'000, 1, 9), grid);
    CHECK(std::abs(one.total_mass() - 0.5) <= 3 * std::sqrt(0.25 / 1e5));
    CHECK(one.censored_fraction() == Approx(1 - one.total_mass()).epsilon(1e-12));
}

TEST_CASE("seed and thread determinism") {
    const auto grid = uniform_grid(10, 512);
    const auto tower = SystemModel::renewal_tower(0.75);
    const auto norm = Normalizer::gamma(*known_scaling(tower));
    const auto E = TargetSpec::label_interval(0.02);
    const auto a = estimate_cdf(tower, E, StartLaw::MuY, norm, opts(20'000, 1'000'000, 10, 1), grid);
    const auto b = estimate_cdf(tower, E, StartLaw::MuY, norm, opts(20'000, 1'000'000, 10, 3), grid);
    const auto c = estimate_cdf(tower, E, StartLaw::MuY, norm, opts(20'000, 1'000'000, 11, 1), grid);
    CHECK(a.values() == b.values());
    CHECK(a.values() != c.values());
    const auto boole = SystemModel::boole();
    const auto x = sample_hitting_times(boole, TargetSpec::interval(0, 0.01), StartLaw::MuY, opts(500, 100'000, 12, 1));
    const auto y = sample_hitting_times(boole, TargetSpec::interval(0, 0.01), StartLaw::MuY, opts(500, 100'000, 12, 4));
    CHECK(x.phi == y.phi);
}

TEST_CASE("raising the cap never lowers the mass") {
    const auto grid = uniform_grid(10, 512);
    for (const auto& sys : {SystemModel::renewal_tower(0.5), SystemModel::boole()}) {
        const auto f = *known_scaling(sys);
        const auto E = sys.as<BooleMap>() ? TargetSpec::interval(0, 0.01) : TargetSpec::label_interval(0.01);
        double prev = -1;
        for (std::uint64_t cap : {1'000ull, 10'000ull, 100'000ull, 1'000'000ull}) {
            const auto F = estimate_cdf(sys, E, StartLaw::MuE, Normalizer::gamma(f), opts(2'000, cap, 13), grid);
            CHECK(F.total_mass() >= prev);
            prev = F.total_mass();
        }
    }
}

TEST_CASE("tails and wandering rate") {
    const auto tower = SystemModel::renewal_tower(0.5);
    const auto tw = estimate_tails_and_wandering(tower, 2'000, 200'000, 14);
    CHECK(tw.q[0] == 1.0);
    for (std::size_t n : {1u, 10u, 100u, 1000u}) CHECK(std::abs(tw.q[n] - std::pow(1.0 + n, -0.5)) <= 3 * tw.q_se[n] + 1e-12);
    double exact = 0;
    for (std::size_t n = 0; n < 2000; ++n) exact += std::pow(1.0 + n, -0.5);
    CHECK(tw.w.back() == Approx(exact).epsilon(0.05));

    const auto dbl = estimate_tails_and_wandering(SystemModel::doubling(), 50, 1000, 15);
    for (std::size_t n = 1; n <= 50; ++n) CHECK(dbl.q[n] == 0.0);
    CHECK(dbl.w.back() == 1.0);
}

TEST_CASE("scaling constants recovered from simulated wandering rates") {
    // renewal tower: c within 10% of 2/pi
    const auto tw = estimate_tails_and_wandering(SystemModel::renewal_tower(0.5), 20'000, 100'000, 16);
    const auto fit = estimate_return_sequence(tw.w, 0.5);
    CHECK(fit.fitted_c == Approx(2 / std::numbers::pi).epsilon(0.10));
    CHECK(fit.fitted_alpha == Approx(0.5).epsilon(0.1));

    // Boole's map: wandering rate index 1 - alpha = 1/2, c within 10% of sqrt2/pi
    const auto bt = estimate_tails_and_wandering(SystemModel::boole(), 100'000, 20'000, 17);
    std::vector<double> x, y;
    for (std::size_t N = 1000; N <= bt.w.size(); N *= 10) {
        x.push_back(std::log(static_cast<double>(N)));
        y.push_back(std::log(bt.w[N - 1]));
    }
    const double slope = (y.back() - y.front()) / (x.back() - x.front());
    CHECK(std::abs(slope - 0.5) <= 0.05);
    const auto bf = estimate_return_sequence(bt.w, 0.5);
    CHECK(bf.fitted_c == Approx(std::sqrt(2.0) / std::numbers::pi).epsilon(0.10));
}

TEST_CASE("tightness bound mu_E(phi_E > mn) <= mu(Y)/mu(E) (1/m + m q_n)") {
    for (double a : {0.5, 0.75, 1.0}) {
        const auto tower = SystemModel::renewal_tower(a);
        for (const auto& E : {TargetSpec::label_interval(1.0), TargetSpec::label_interval(0.5)}) {
            const auto rows = check_tightness(tower, E, {{10, 100}, {100, 10'000}, {3, 10}}, 20'000, 18);
            for (const auto& r : rows) {
                CAPTURE(a);
                CAPTURE(r.m);
                CAPTURE(r.n);
                CHECK(r.holds);
                CHECK(r.lhs <= r.bound + 3 * r.se);
            }
        }
    }
}

TEST_CASE("csv formats") {
    const auto dbl = SystemModel::doubling();
    const auto b = sample_hitting_times(dbl, TargetSpec::dyadic(4), StartLaw::MuE, opts(50, 3, 19));
    std::ostringstream os;
    write_batch_csv(os, b, Normalizer::gamma(ScalingFunction::identity()), {"abc", 19});
    const std::string s = os.str();
    CHECK(s.rfind("# config_hash=abc seed=19\nsample_index,phi,censored,normalized_value\n", 0) == 0);
    bool saw_censored = false;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.censored[i]) saw_censored = s.find("\n" + std::to_string(i) + ",,1,\n") != std::string::npos;
    CHECK(saw_censored);
    std::ostringstream cdf;
    write_cdf_csv(cdf, SubDistribution({0, 0.1, 1}, {0, 0.1, 1.0 / 3}), {"h", 1});
    CHECK(cdf.str() == "# config_hash=h seed=1\nt,F\n0,0\n0.10000000000000001,0.10000000000000001\n1,0.33333333333333331\n");
}

}
