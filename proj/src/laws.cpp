#include "rtlab/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace rtlab {

namespace {
void check_alpha(double alpha) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must lie in (0,1]");
}

// Terms peak near k = t/alpha at size ~e^t (t = x^(1/alpha)), so below the
// cutoff at most ~3 digits are lost to cancellation.
double ml_series(double alpha, double x) {
    if (x == 0) return 1.0;
    const double lx = std::log(x);
    double sum = 1.0;
    const int peak = static_cast<int>(std::pow(x, 1.0 / alpha) / alpha) + 1;
    for (int k = 1; k < 200; ++k) {
        double mag = std::exp(k * lx - std::lgamma(alpha * k + 1.0));
        sum += (k % 2 ? -mag : mag);
        if (k > peak && mag < 1e-17) break;
    }
    return sum;
}

// E_alpha(-x) = sin(pi a)/(pi a) int_0^inf exp(-(x u)^(1/a)) / (u^2 + 2u cos(pi a) + 1) du,
// truncated where the exponential factor drops below e^-46 (~1e-20).
// With u = w^2 the integrand is smooth at 0 for every alpha <= 1.
double ml_integral(double alpha, double x) {
    using boost::math::quadrature::gauss_kronrod;
    const double pa = std::numbers::pi * alpha;
    const double cs = std::cos(pa);
    const double inv = 1.0 / alpha;
    const double xs = std::pow(x, inv);
    auto f = [&](double w) {
        const double u = w * w;
        const double d = u * u + 2.0 * u * cs + 1.0;
        return 2.0 * w * std::exp(-xs * std::pow(w, 2.0 * inv)) / d;
    };
    const double top = std::sqrt(std::pow(46.0, alpha) / x);
    double sum;
    if (top <= 1.0) {
        sum = gauss_kronrod<double, 61>::integrate(f, 0.0, top, 10, 1e-11);
    } else {
        // the denominator peaks at w = 1 when alpha is near 1
        sum = gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 10, 1e-11) +
              gauss_kronrod<double, 61>::integrate(f, 1.0, top, 10, 1e-11);
    }
    return std::sin(pa) / pa * sum;
}
}  // namespace

MittagLefflerMethod mittag_leffler_method(double alpha, double x) {
    check_alpha(alpha);
    if (alpha == 1.0) return MittagLefflerMethod::Closed;
    return std::pow(x, 1.0 / alpha) <= kSeriesCutoff ? MittagLefflerMethod::Series : MittagLefflerMethod::Integral;
}

double mittag_leffler_neg(double alpha, double x) {
    if (!(x >= 0)) throw std::invalid_argument("mittag_leffler_neg: x must be >= 0");
    switch (mittag_leffler_method(alpha, x)) {
        case MittagLefflerMethod::Closed: return std::exp(-x);
        case MittagLefflerMethod::Series: return ml_series(alpha, x);
        case MittagLefflerMethod::Integral: return ml_integral(alpha, x);
    }
    return 0.0;
}

double cdf_H(double alpha, double t) {
    check_alpha(alpha);
    if (!(t > 0)) return 0.0;
    if (std::isinf(t)) return 1.0;
    if (alpha == 1.0) return -std::expm1(-t);
    const double x = std::pow(t, alpha);
    if (mittag_leffler_method(alpha, x) == MittagLefflerMethod::Series) {
        // 1 - E = sum_{k>=1} (-1)^(k+1) x^k / Gamma(ak+1), avoids 1 - (1 - small)
        const double lx = std::log(x);
        const int peak = static_cast<int>(t / alpha) + 1;
        double sum = 0;
        for (int k = 1; k < 200; ++k) {
            double mag = std::exp(k * lx - std::lgamma(alpha * k + 1.0));
            sum += (k % 2 ? mag : -mag);
            if (k > peak && mag < 1e-17) break;
        }
        return std::clamp(sum, 0.0, 1.0);
    }
    return std::clamp(1.0 - ml_integral(alpha, x), 0.0, 1.0);
}

double cdf_G0(double t) {
    if (!(t > 0)) return 0.0;
    if (std::isinf(t)) return 1.0;
    return t / (1.0 + t);
}

double sample_one_sided_stable(double alpha, Rng& rng) {
    check_alpha(alpha);
    if (alpha == 1.0) return 1.0;
    // Kanter: G = (A(U)/W)^((1-a)/a), U ~ U(0,pi), W ~ Exp(1)
    double u;
    do u = std::numbers::pi * rng.uniform(); while (u == 0.0);
    const double w = rng.exponential();
    const double a = std::pow(std::pow(std::sin(alpha * u), alpha) * std::pow(std::sin((1 - alpha) * u), 1 - alpha) / std::sin(u),
                              1.0 / (1.0 - alpha));
    return std::pow(a / w, (1.0 - alpha) / alpha);
}

double sample_H(double alpha, Rng& rng) {
    check_alpha(alpha);
    const double e = rng.exponential();
    return std::pow(e, 1.0 / alpha) * sample_one_sided_stable(alpha, rng);
}

LimitLaw LimitLaw::H(double alpha, double scale) {
    check_alpha(alpha);
    if (!(scale > 0)) throw std::invalid_argument("LimitLaw: scale must be positive");
    return LimitLaw(Tag::Halpha, alpha, scale);
}

LimitLaw LimitLaw::transform_fixed_point(double alpha) {
    check_alpha(alpha);
    return H(alpha, std::pow(std::tgamma(1.0 + alpha), -1.0 / alpha));
}

double LimitLaw::cdf(double t) const {
    if (t < 0) return 0.0;
    switch (tag_) {
        case Tag::Halpha: return cdf_H(alpha_, t / scale_);
        case Tag::Gzero: return cdf_G0(t / scale_);
        case Tag::Exponential: return -std::expm1(-t / scale_);
        case Tag::DeltaZero: return 1.0;
        case Tag::DeltaInfinity: return 0.0;
    }
    return 0.0;
}

double LimitLaw::sample(Rng& rng) const {
    switch (tag_) {
        case Tag::Halpha: return scale_ * sample_H(alpha_, rng);
        case Tag::Gzero: {
            double u = rng.uniform();
            return scale_ * u / (1.0 - u);
        }
        case Tag::Exponential: return scale_ * rng.exponential();
        case Tag::DeltaZero: return 0.0;
        case Tag::DeltaInfinity: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

std::string LimitLaw::name() const {
    std::ostringstream os;
    os.precision(17);
    switch (tag_) {
        case Tag::Halpha: os << "H(alpha=" << alpha_ << ")"; break;
        case Tag::Gzero: os << "G0"; break;
        case Tag::Exponential: os << "exponential"; break;
        case Tag::DeltaZero: return "delta0";
        case Tag::DeltaInfinity: return "delta_inf";
    }
    if (scale_ != 1.0) os << " scale=" << scale_;
    return os.str();
}

}  // namespace rtlab
