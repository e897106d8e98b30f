#pragma once

#include <string>

#include "rtlab/rng.hpp"

namespace rtlab {

enum class MittagLefflerMethod { Closed, Series, Integral };

// E_alpha(-x) for x >= 0, alpha in (0,1]
double mittag_leffler_neg(double alpha, double x);
// which evaluation path mittag_leffler_neg takes for (alpha, x)
MittagLefflerMethod mittag_leffler_method(double alpha, double x);
// largest t = x^(1/alpha) for which the power series is summed directly
inline constexpr double kSeriesCutoff = 6.0;

// Pr[E^(1/alpha) G_alpha <= t] = 1 - E_alpha(-t^alpha)
double cdf_H(double alpha, double t);
double cdf_G0(double t);

// Laplace transform exp(-s^alpha); alpha = 1 gives the constant 1
double sample_one_sided_stable(double alpha, Rng& rng);
double sample_H(double alpha, Rng& rng);

class LimitLaw {
public:
    enum class Tag { Halpha, Gzero, Exponential, DeltaZero, DeltaInfinity };

    static LimitLaw H(double alpha, double scale = 1.0);
    static LimitLaw G0() { return LimitLaw(Tag::Gzero, 0.0, 1.0); }
    static LimitLaw exponential(double scale = 1.0) { return LimitLaw(Tag::Exponential, 1.0, scale); }
    static LimitLaw delta_zero() { return LimitLaw(Tag::DeltaZero, 0.0, 1.0); }
    static LimitLaw delta_infinity() { return LimitLaw(Tag::DeltaInfinity, 0.0, 1.0); }
    // Law solving F(t) = int_0^t (1-F(s)) alpha (t-s)^(alpha-1) ds:
    // H_alpha rescaled by Gamma(1+alpha)^(-1/alpha).
    static LimitLaw transform_fixed_point(double alpha);

    Tag tag() const { return tag_; }
    double alpha() const { return alpha_; }
    double scale() const { return scale_; }

    // law of scale * X
    double cdf(double t) const;
    double sample(Rng& rng) const;
    std::string name() const;

private:
    LimitLaw(Tag tag, double alpha, double scale) : tag_(tag), alpha_(alpha), scale_(scale) {}
    Tag tag_;
    double alpha_;
    double scale_;
};

}  // namespace rtlab
