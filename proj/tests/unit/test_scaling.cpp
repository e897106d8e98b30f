#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rtlab/scaling.hpp"

using namespace rtlab;
using doctest::Approx;

TEST_SUITE("scaling") {

TEST_CASE("eval_a examples") {
    CHECK(eval_a(ScalingFunction(1, 0.5), 100) == Approx(10).epsilon(1e-15));
    CHECK(eval_a(ScalingFunction(2, 1), 3) == Approx(6).epsilon(1e-15));
    // 10 ln(100 + e), 50-digit evaluation
    CHECK(eval_a(ScalingFunction(1, 0.5, 1), 100) == Approx(46.319901130538898864).epsilon(1e-14));
    CHECK(eval_a(ScalingFunction(1, 0.5, 1), 0) == 0.0);
}

TEST_CASE("eval_b examples") {
    CHECK(eval_b(ScalingFunction(2, 0.5), 4) == Approx(4).epsilon(1e-14));
    CHECK(eval_b(ScalingFunction(1, 1), 7) == Approx(7).epsilon(1e-15));
    const ScalingFunction f(1, 0.5, 1);
    CHECK(eval_b(f, 46.32) == Approx(100).epsilon(1e-4));
    CHECK(eval_b(f, 46.319901130538898864) == Approx(100).epsilon(1e-11));
}

TEST_CASE("gamma examples") {
    CHECK(gamma(ScalingFunction(1, 0.5), 0.1) == Approx(0.01).epsilon(1e-14));
    CHECK(gamma(ScalingFunction(1, 1), 0.25) == Approx(0.25).epsilon(1e-15));
    // b(s) = (pi s / 2)^2 so gamma(s) = 4 s^2 / pi^2
    const double pi = std::numbers::pi;
    const double oracle = 4 * 0.01 * 0.01 / (pi * pi);
    CHECK(gamma(ScalingFunction(2 / pi, 0.5), 0.01) == Approx(oracle).epsilon(1e-13));
    CHECK(oracle == Approx(4.0528473456935108578e-5).epsilon(1e-15));
    CHECK(GammaNormalizer(ScalingFunction(2 / pi, 0.5))(0.01) == gamma(ScalingFunction(2 / pi, 0.5), 0.01));
}

TEST_CASE("roundtrip b(a(s)) = s over twelve decades") {
    const std::vector<ScalingFunction> family{
        {1, 0.5}, {1, 0.5, 1}, {2, 1}, {0.3, 0.75, -0.5}, {1, 0.3, 2}, {1, 1, -1}, {1, 0, 2}, {0.45, 0.5}, {5, 0.9, 0.7},
    };
    for (const auto& f : family) {
        for (int j = 0; j <= 12; ++j) {
            const double s = std::pow(10.0, j);
            CAPTURE(f.c());
            CAPTURE(f.alpha());
            CAPTURE(f.beta());
            CAPTURE(s);
            CHECK(std::abs(eval_b(f, eval_a(f, s)) - s) / s <= 1e-9);
        }
    }
}

TEST_CASE("gamma is regularly varying with index 1/alpha at 0") {
    for (double a : {0.3, 0.5, 0.75, 1.0}) {
        const ScalingFunction f(1, a);
        for (double s : {1e-3, 1e-5, 1e-8, 1e-12}) {
            CAPTURE(a);
            CAPTURE(s);
            CHECK(std::abs(f.gamma(2 * s) / f.gamma(s) - std::pow(2.0, 1 / a)) <= 1e-6);
        }
    }
}

TEST_CASE("a(rho r)/a(rho) tends to r^alpha") {
    for (double a : {0.3, 0.5, 1.0}) {
        const ScalingFunction f(1, a);
        for (double r : {0.5, 1.0, 2.0}) {
            const double rho = 1e10;
            CHECK(std::abs(f(rho * r) / f(rho) - std::pow(r, a)) <= 1e-6);
        }
    }
    // with a log factor the ratio still converges, only slowly
    const ScalingFunction g(1, 0.5, 1);
    double prev = 1;
    for (double rho : {1e4, 1e7, 1e10, 1e13}) {
        const double err = std::abs(g(2 * rho) / g(rho) - std::sqrt(2.0));
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("admissibility") {
    CHECK_THROWS_AS(ScalingFunction(1, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(ScalingFunction(1, 0, -1), std::invalid_argument);
    CHECK_THROWS_AS(ScalingFunction(-1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ScalingFunction(1, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(ScalingFunction(1, 0.2, -3), std::invalid_argument);  // not increasing near 0
    CHECK_NOTHROW(ScalingFunction(1, 0, 1));
    CHECK(ScalingFunction(1, 0, 1)(0) == 0.0);
}

TEST_CASE("estimate_return_sequence: exact series") {
    const double pi = std::numbers::pi;
    std::vector<double> w(4000);
    for (std::size_t n = 1; n <= w.size(); ++n) w[n - 1] = 2 * std::sqrt(static_cast<double>(n));
    const auto fit = estimate_return_sequence(w, 0.5);
    // n / (Gamma(3/2)^2 2 sqrt n) = (2/pi) sqrt n
    CHECK(fit.fitted_c == Approx(2 / pi).epsilon(1e-9));
    CHECK(fit.fitted_alpha == Approx(0.5).epsilon(1e-9));
    CHECK(fit.scaling.alpha() == 0.5);
    CHECK(fit.first == 2001);
    CHECK(fit.last == 4000);

    std::vector<double> flat(1000, 3.0);
    const auto lin = estimate_return_sequence(flat, 1.0);
    CHECK(lin.fitted_c == Approx(1 / 3.0).epsilon(1e-9));
    CHECK(lin.fitted_alpha == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("estimate_return_sequence: inconsistent tail") {
    std::vector<double> w(1000);
    for (std::size_t n = 1; n <= w.size(); ++n) w[n - 1] = std::pow(static_cast<double>(n), 0.1);
    CHECK_THROWS_AS(estimate_return_sequence(w, 0.5), InconsistentTail);
    CHECK_THROWS_AS(estimate_return_sequence(std::vector<double>{1.0}, 0.5), std::invalid_argument);
}

}
