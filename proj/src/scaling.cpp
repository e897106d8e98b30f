#include "rtlab/scaling.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace rtlab {

namespace {
constexpr double kE = std::numbers::e;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("ScalingFunction: " + what);
}
}  // namespace

ScalingFunction::ScalingFunction(double c, double alpha, double beta) : c_(c), alpha_(alpha), beta_(beta) {
    require(std::isfinite(c) && c > 0, "c must be positive");
    require(std::isfinite(alpha) && alpha >= 0 && alpha <= 1, "alpha must lie in [0,1]");
    require(std::isfinite(beta), "beta must be finite");
    require(alpha > 0 || beta > 0, "alpha = 0 needs beta > 0 so that a grows without bound");
    if (alpha > 0 && beta != 0) {
        // d/ds log a > 0  <=>  alpha (s+e) ln(s+e) + beta s > 0
        for (int j = -180; j <= 180; ++j) {
            double s = std::pow(10.0, j / 10.0);
            double g = alpha * (s + kE) * std::log(s + kE) + beta * s;
            require(g > 0, "not increasing on the working range (beta too negative)");
        }
    }
}

double ScalingFunction::operator()(double s) const {
    if (!(s > 0)) return 0.0;
    if (alpha_ == 0) return c_ * (std::pow(std::log(s + kE), beta_) - 1.0);
    double v = c_ * std::pow(s, alpha_);
    if (beta_ != 0) v *= std::pow(std::log(s + kE), beta_);
    return v;
}

double ScalingFunction::inverse(double s) const {
    if (!(s > 0)) return 0.0;
    if (beta_ == 0) return std::pow(s / c_, 1.0 / alpha_);
    const ScalingFunction& a = *this;
    double lo = 1e-18, hi = 1e18;
    while (a(hi) < s && hi < 1e300) hi *= 2;
    while (a(lo) > s && lo > 1e-300) lo /= 2;
    // bisection on log t; a is increasing
    while (hi / lo - 1.0 > 1e-13) {
        double mid = std::sqrt(lo) * std::sqrt(hi);
        if (mid <= lo || mid >= hi) break;
        if (a(mid) < s) lo = mid; else hi = mid;
    }
    return std::sqrt(lo) * std::sqrt(hi);
}

double ScalingFunction::gamma(double s) const {
    if (!(s > 0)) return 0.0;
    return 1.0 / inverse(1.0 / s);
}

double eval_a(const ScalingFunction& f, double s) { return f(s); }
double eval_b(const ScalingFunction& f, double s) { return f.inverse(s); }
double gamma(const ScalingFunction& f, double s) { return f.gamma(s); }

ReturnSequenceFit estimate_return_sequence(std::span<const double> w, double alpha) {
    if (w.size() < 100) throw std::invalid_argument("estimate_return_sequence: need at least 100 terms");
    if (!(alpha >= 0 && alpha <= 1)) throw std::invalid_argument("estimate_return_sequence: alpha outside [0,1]");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0)) throw std::invalid_argument("estimate_return_sequence: wandering rate must be positive");
        if (i > 0 && w[i] < w[i - 1]) throw std::invalid_argument("estimate_return_sequence: wandering rate must be non-decreasing");
    }
    const double k = std::tgamma(2.0 - alpha) * std::tgamma(1.0 + alpha);
    const std::size_t N = w.size();
    const std::size_t first = N / 2 + 1, last = N;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys;
    for (std::size_t n = first; n <= last; ++n) {
        double x = std::log(static_cast<double>(n));
        double y = std::log(static_cast<double>(n) / (k * w[n - 1]));
        xs.push_back(x);
        ys.push_back(y);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = static_cast<double>(xs.size());
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
    }
    if (std::abs(slope - alpha) > 0.1)
        throw InconsistentTail("estimate_return_sequence: fitted index " + std::to_string(slope) +
                               " inconsistent with alpha " + std::to_string(alpha));
    if (alpha == 0)
        throw InconsistentTail("estimate_return_sequence: alpha = 0 needs a logarithmic fit, not supported");
    // the representative keeps the prescribed index; c is refitted with the slope pinned
    const double c = std::exp((sy - alpha * sx) / m);
    return {ScalingFunction(c, alpha, 0.0), slope, c, std::sqrt(rss / m), first, last};
}

}  // namespace rtlab
