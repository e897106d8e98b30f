#pragma once

#include <span>
#include <string>
#include <vector>

#include "rtlab/subdistribution.hpp"

namespace rtlab {

enum class TransformKind { HLV, Fractional, DistortedPositive, DistortedZero };

struct TransformSpec {
    TransformKind kind = TransformKind::HLV;
    double alpha = 1.0;

    static TransformSpec hlv() { return {TransformKind::HLV, 1.0}; }
    static TransformSpec fractional(double alpha) { return {TransformKind::Fractional, alpha}; }
    static TransformSpec distorted(double alpha);  // alpha = 0 selects DistortedZero
    static TransformSpec distorted_zero() { return {TransformKind::DistortedZero, 0.0}; }

    void validate() const;
    std::string describe() const;
    // kernel exponent of the convolution form (HLV is alpha = 1)
    double kernel_alpha() const { return kind == TransformKind::HLV ? 1.0 : alpha; }
};

// F(t_i) = sum_k W_ik g_k for g piecewise linear on the grid, W the exact
// integrals of alpha (t_i - s)^(alpha-1) against the hat functions.
// A uniform tail of the grid is handled with a Toeplitz table; nodes before
// it (e.g. a graded refinement near 0) get their weights computed directly.
class VolterraOperator {
public:
    VolterraOperator(std::vector<double> grid, double alpha);

    const std::vector<double>& grid() const { return grid_; }
    double alpha() const { return alpha_; }

    std::vector<double> apply(std::span<const double> g) const;
    // Solves apply(g) = F for g. Row 0 is empty, so g_0 is free; the
    // returned solution fixes it by minimizing the energy of third
    // differences of g (the homogeneous mode oscillates or decays, data don't).
    std::vector<double> solve(std::span<const double> F) const;

private:
    double diagonal(std::size_t i) const;
    template <class Fn> void row(std::size_t i, Fn&& visit) const;  // visit(k, w) for k <= i

    std::vector<double> grid_;
    double alpha_;
    std::size_t head_;  // first index of the uniform tail
    double h_ = 0;      // tail spacing
    std::vector<double> toeplitz_;  // combined weights K_d on the tail lattice, scaled by h^alpha
    std::vector<double> first_, last_;  // boundary weights: a_d (far end), b_d
    std::vector<double> head_cache_;    // tail rows: weights on g_0..g_head from the head cells
};

struct TransformResult {
    SubDistribution law;
    double clipped = 0;       // largest amount removed by clipping to [0,1]
    double max_decrease = 0;  // output non-monotonicity before any repair
};

TransformResult forward(const TransformSpec& spec, const SubDistribution& input);

struct InversionResult {
    SubDistribution law;
    double clamp_adjustment = 0;     // largest value moved into [0,1]
    double monotone_adjustment = 0;  // largest lift from the running max
};

InversionResult invert(const TransformSpec& spec, const SubDistribution& F);

enum class Direction {
    ReturnToDistorted,  // t -> t^alpha   (F -> G)
    DistortedToReturn,  // t -> t^(1/alpha)
};
SubDistribution change_of_variables(const SubDistribution& law, double alpha, Direction direction);

struct FixedPointResult {
    SubDistribution law;
    int iterations = 0;
    double last_change = 0;
};

// Graded nodes t_2 (k/K)^q on [0, t_2], merged with the given grid.
std::vector<double> refine_origin(std::span<const double> grid, double alpha, std::size_t nodes = 64);

// Picard iteration F <- clip(forward(Fractional alpha, F)) from F = 0.
FixedPointResult fixed_point(double alpha, std::span<const double> grid, double tol, bool refine = true);

}  // namespace rtlab
