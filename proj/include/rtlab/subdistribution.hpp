#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rtlab {

class LimitLaw;

// Grid values of a sub-probability distribution function on [0, t_max].
// Between nodes the function is read as a right-continuous step.
// Grid and range [0,1] are enforced; monotonicity is not, because transform
// outputs of arbitrary inputs need not be monotone (see max_decrease()).
class SubDistribution {
public:
    SubDistribution(std::vector<double> grid, std::vector<double> values, std::uint64_t samples = 0,
                    std::uint64_t censored = 0, std::uint64_t beyond = 0);

    static SubDistribution from_function(std::span<const double> grid, const std::function<double(double)>& f);
    static SubDistribution of_law(std::span<const double> grid, const LimitLaw& law);

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return grid_.size(); }
    double t_max() const { return grid_.back(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double operator()(double t) const;  // step evaluation

    double total_mass() const { return values_.back(); }
    std::uint64_t sample_count() const { return samples_; }
    std::uint64_t censored_count() const { return censored_; }
    // uncensored samples beyond t_max
    std::uint64_t beyond_count() const { return beyond_; }
    double censored_fraction() const { return samples_ ? static_cast<double>(censored_) / static_cast<double>(samples_) : 0.0; }

    double max_decrease() const;
    bool is_monotone() const { return max_decrease() == 0.0; }

private:
    std::vector<double> grid_, values_;
    std::uint64_t samples_, censored_, beyond_;
};

// t_k = k * t_max / cells, k = 0..cells
std::vector<double> uniform_grid(double t_max, std::size_t cells);
void validate_grid(std::span<const double> grid);

// sup over the union of both grids (restricted to the common range) of |F - G|
double ks_distance(const SubDistribution& F, const SubDistribution& G);
// sup over the grid nodes of |F(t_i) - law(t_i)|
double ks_distance(const SubDistribution& F, const LimitLaw& law);
// Exact Kolmogorov-Smirnov statistic of a sample against a law; sorted in place.
// Censored observations (infinite values) count in n but never in the CDF.
double ks_sample(std::vector<double>& sample, const LimitLaw& law);

}  // namespace rtlab
