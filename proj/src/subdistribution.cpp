#include "rtlab/subdistribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rtlab/laws.hpp"

namespace rtlab {

void validate_grid(std::span<const double> grid) {
    if (grid.size() < 2) throw std::invalid_argument("grid needs at least two nodes");
    if (grid[0] != 0.0) throw std::invalid_argument("grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i]))
            throw std::invalid_argument("grid must be strictly increasing and finite (node " + std::to_string(i) + ")");
}

SubDistribution::SubDistribution(std::vector<double> grid, std::vector<double> values, std::uint64_t samples,
                                 std::uint64_t censored, std::uint64_t beyond)
    : grid_(std::move(grid)), values_(std::move(values)), samples_(samples), censored_(censored), beyond_(beyond) {
    validate_grid(grid_);
    if (values_.size() != grid_.size()) throw std::invalid_argument("SubDistribution: grid/value size mismatch");
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("SubDistribution: value outside [0,1]");
    if (censored_ + beyond_ > samples_) throw std::invalid_argument("SubDistribution: inconsistent sample counts");
}

SubDistribution SubDistribution::from_function(std::span<const double> grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    std::transform(grid.begin(), grid.end(), v.begin(), f);
    return SubDistribution({grid.begin(), grid.end()}, std::move(v));
}

SubDistribution SubDistribution::of_law(std::span<const double> grid, const LimitLaw& law) {
    return from_function(grid, [&](double t) { return law.cdf(t); });
}

double SubDistribution::operator()(double t) const {
    if (t < 0) return 0.0;
    auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
}

double SubDistribution::max_decrease() const {
    double d = 0, run = values_[0];
    for (double v : values_) {
        d = std::max(d, run - v);
        run = std::max(run, v);
    }
    return d;
}

std::vector<double> uniform_grid(double t_max, std::size_t cells) {
    if (!(t_max > 0) || cells < 1) throw std::invalid_argument("uniform_grid: need t_max > 0 and cells >= 1");
    std::vector<double> g(cells + 1);
    const double h = t_max / static_cast<double>(cells);
    for (std::size_t k = 0; k <= cells; ++k) g[k] = static_cast<double>(k) * h;
    g.back() = t_max;
    return g;
}

double ks_distance(const SubDistribution& F, const SubDistribution& G) {
    const double top = std::min(F.t_max(), G.t_max());
    double d = 0;
    for (const auto* X : {&F, &G})
        for (double t : X->grid()) {
            if (t > top) break;
            d = std::max(d, std::abs(F(t) - G(t)));
        }
    return d;
}

double ks_distance(const SubDistribution& F, const LimitLaw& law) {
    double d = 0;
    for (std::size_t i = 0; i < F.size(); ++i) d = std::max(d, std::abs(F[i] - law.cdf(F.grid()[i])));
    return d;
}

double ks_sample(std::vector<double>& sample, const LimitLaw& law) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!std::isfinite(sample[i])) {
            // remaining mass never observed: compare with the law's limit
            d = std::max(d, std::abs(static_cast<double>(i) / n - law.cdf(std::numeric_limits<double>::max())));
            break;
        }
        double c = law.cdf(sample[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - c), std::abs(c - static_cast<double>(i) / n)});
    }
    return d;
}

}  // namespace rtlab
