#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace rtlab {

// a(s) = c * s^alpha * ln(s+e)^beta, a(0) = 0.
// For alpha = 0 the log power alone would give a(0+) = c, so the pure
// logarithmic case is shifted to c * (ln(s+e)^beta - 1), which keeps a(0) = 0,
// continuity and the same asymptotics.
class ScalingFunction {
public:
    ScalingFunction(double c, double alpha, double beta = 0.0);

    static ScalingFunction identity() { return {1.0, 1.0, 0.0}; }

    double c() const { return c_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    double operator()(double s) const;  // a
    double inverse(double s) const;     // b = a^{-1}
    double gamma(double s) const;       // 1 / b(1/s)

    friend bool operator==(const ScalingFunction&, const ScalingFunction&) = default;

private:
    double c_, alpha_, beta_;
};

double eval_a(const ScalingFunction& f, double s);
double eval_b(const ScalingFunction& f, double s);
double gamma(const ScalingFunction& f, double s);

// s -> gamma(s); the time scale attached to a target of measure s
class GammaNormalizer {
public:
    explicit GammaNormalizer(ScalingFunction f) : f_(f) {}
    double operator()(double s) const { return f_.gamma(s); }
    const ScalingFunction& source() const { return f_; }

private:
    ScalingFunction f_;
};

struct ReturnSequenceFit {
    ScalingFunction scaling;
    double fitted_alpha;
    double fitted_c;
    double residual;  // rms of log-residuals of the free fit
    std::size_t first;  // 1-based window [first, last]
    std::size_t last;
};

class InconsistentTail : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// wandering[n-1] = w_n. Fits c n^alpha to n / (Gamma(2-alpha) Gamma(1+alpha) w_n)
// over the tail half. fitted_alpha is the free log-log slope; InconsistentTail
// when it is more than 0.1 away from alpha. The returned scaling keeps alpha
// and takes c from the fit with the slope held at alpha.
ReturnSequenceFit estimate_return_sequence(std::span<const double> wandering, double alpha);

}  // namespace rtlab
