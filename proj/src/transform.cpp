#include "rtlab/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace rtlab {

namespace {

struct CellWeights {
    double a;  // on the node at distance hi from t_i
    double b;  // on the node at distance lo
};

// Exact integral of alpha u^(alpha-1) against the two hat functions of the
// cell u in [lo, hi] (u = t_i - s).
CellWeights cell_weights(double lo, double hi, double alpha) {
    const double d = hi - lo;
    if (alpha == 1.0) return {0.5 * d, 0.5 * d};
    if (lo == 0.0) {
        const double p = std::pow(d, alpha) / (alpha + 1.0);
        return {alpha * p, p};
    }
    const double r = d / lo;
    if (r < 0.25) {
        // expand (1 + r x)^(alpha-1); the closed form cancels badly here
        double c = 1.0, rk = 1.0, sa = 0.0, sb = 0.0;
        for (int k = 0; k < 60; ++k) {
            const double term = c * rk;
            sa += term / (k + 2.0);
            sb += term / ((k + 1.0) * (k + 2.0));
            if (std::abs(term) < 1e-18) break;
            c *= (alpha - 1.0 - k) / (k + 1.0);
            rk *= r;
        }
        const double pre = alpha * d * std::pow(lo, alpha - 1.0);
        return {pre * sa, pre * sb};
    }
    const double i0 = std::pow(hi, alpha) - std::pow(lo, alpha);
    const double i1 = alpha / (alpha + 1.0) * (std::pow(hi, alpha + 1.0) - std::pow(lo, alpha + 1.0));
    const double a = (i1 - lo * i0) / d;
    return {a, i0 - a};
}

constexpr std::size_t kCacheLimit = 4'000'000;

double clip01(double v, double& clipped) {
    if (v < 0) {
        clipped = std::max(clipped, -v);
        return 0.0;
    }
    if (v > 1) {
        clipped = std::max(clipped, v - 1);
        return 1.0;
    }
    return v;
}

void require_resolution(const SubDistribution& F) {
    if (F.size() < 8) throw std::invalid_argument("transform: grid too coarse (fewer than 8 points)");
}

}  // namespace

TransformSpec TransformSpec::distorted(double alpha) {
    if (alpha == 0.0) return distorted_zero();
    return {TransformKind::DistortedPositive, alpha};
}

void TransformSpec::validate() const {
    switch (kind) {
        case TransformKind::HLV:
            if (alpha != 1.0) throw std::invalid_argument("HLV transform has alpha = 1");
            break;
        case TransformKind::Fractional:
        case TransformKind::DistortedPositive:
            if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("transform alpha must lie in (0,1]");
            break;
        case TransformKind::DistortedZero:
            if (alpha != 0.0) throw std::invalid_argument("distorted zero transform has alpha = 0");
            break;
    }
}

std::string TransformSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case TransformKind::HLV: return "hlv";
        case TransformKind::Fractional: os << "fractional(alpha=" << alpha << ")"; break;
        case TransformKind::DistortedPositive: os << "distorted(alpha=" << alpha << ")"; break;
        case TransformKind::DistortedZero: return "distorted(alpha=0)";
    }
    return os.str();
}

// ---------------------------------------------------------------------------

VolterraOperator::VolterraOperator(std::vector<double> grid, double alpha) : grid_(std::move(grid)), alpha_(alpha) {
    validate_grid(grid_);
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("VolterraOperator: alpha must lie in (0,1]");
    const std::size_t m = grid_.size() - 1;
    h_ = grid_[m] - grid_[m - 1];
    std::size_t j = m - 1;
    while (j >= 1 && std::abs((grid_[j] - grid_[j - 1]) - h_) <= 1e-9 * h_) --j;
    head_ = j;

    const std::size_t n = m - head_;  // tail cells
    const double scale = std::pow(h_, alpha);
    std::vector<double> a(n + 2), b(n + 2);
    for (std::size_t d = 1; d <= n + 1; ++d) {
        auto w = cell_weights(static_cast<double>(d - 1), static_cast<double>(d), alpha);
        a[d] = w.a * scale;
        b[d] = w.b * scale;
    }
    // combined weight on g_{i-k}: b_1 (k=0), a_k + b_{k+1} (0<k<n_i), a_{n_i} (k=n_i)
    toeplitz_.assign(n + 1, 0.0);
    toeplitz_[0] = b[1];
    for (std::size_t k = 1; k <= n; ++k) toeplitz_[k] = a[k] + b[k + 1];
    first_ = a;
    last_ = b;

    if (head_ > 0 && n * (head_ + 1) <= kCacheLimit) {
        head_cache_.assign(n * (head_ + 1), 0.0);
        for (std::size_t i = head_ + 1; i <= m; ++i) {
            double* w = &head_cache_[(i - head_ - 1) * (head_ + 1)];
            for (std::size_t jj = 0; jj < head_; ++jj) {
                auto c = cell_weights(grid_[i] - grid_[jj + 1], grid_[i] - grid_[jj], alpha_);
                w[jj] += c.a;
                w[jj + 1] += c.b;
            }
        }
    }
}

double VolterraOperator::diagonal(std::size_t i) const {
    if (i > head_) return last_[1];
    return cell_weights(0.0, grid_[i] - grid_[i - 1], alpha_).b;
}

template <class Fn>
void VolterraOperator::row(std::size_t i, Fn&& visit) const {
    if (i == 0) return;
    const double ti = grid_[i];
    if (i > head_ && !head_cache_.empty()) {
        const double* w = &head_cache_[(i - head_ - 1) * (head_ + 1)];
        for (std::size_t j = 0; j <= head_; ++j) visit(j, w[j]);
    } else {
        const std::size_t stop = std::min(i, head_);
        for (std::size_t j = 0; j < stop; ++j) {
            auto w = cell_weights(ti - grid_[j + 1], ti - grid_[j], alpha_);
            visit(j, w.a);
            visit(j + 1, w.b);
        }
    }
    if (i <= head_) return;
    const std::size_t n = i - head_;
    visit(i, toeplitz_[0]);
    for (std::size_t k = 1; k < n; ++k) visit(i - k, toeplitz_[k]);
    visit(head_, first_[n]);
}

std::vector<double> VolterraOperator::apply(std::span<const double> g) const {
    if (g.size() != grid_.size()) throw std::invalid_argument("VolterraOperator::apply: size mismatch");
    std::vector<double> F(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        double s = 0;
        if (i > head_) {
            // split so the tail is a plain dot product
            const std::size_t n = i - head_;
            if (!head_cache_.empty()) {
                const double* w = &head_cache_[(i - head_ - 1) * (head_ + 1)];
                for (std::size_t j = 0; j <= head_; ++j) s += w[j] * g[j];
            } else {
                const double ti = grid_[i];
                for (std::size_t j = 0; j < head_; ++j) {
                    auto w = cell_weights(ti - grid_[j + 1], ti - grid_[j], alpha_);
                    s += w.a * g[j] + w.b * g[j + 1];
                }
            }
            for (std::size_t k = 0; k < n; ++k) s += toeplitz_[k] * g[i - k];
            s += first_[n] * g[head_];
        } else {
            row(i, [&](std::size_t k, double w) { s += w * g[k]; });
        }
        F[i] = s;
    }
    return F;
}

std::vector<double> VolterraOperator::solve(std::span<const double> F) const {
    const std::size_t m = grid_.size();
    if (F.size() != m) throw std::invalid_argument("VolterraOperator::solve: size mismatch");
    if (m < 4) throw std::invalid_argument("VolterraOperator::solve: need at least 4 nodes");
    // particular solution (g_0 = 0) and homogeneous mode (g_0 = 1) in one sweep
    std::vector<double> p(m, 0.0), z(m, 0.0);
    z[0] = 1.0;
    for (std::size_t i = 1; i < m; ++i) {
        double sp = 0, sz = 0;
        row(i, [&](std::size_t k, double w) {
            sp += w * p[k];
            sz += w * z[k];
        });
        const double d = diagonal(i);
        p[i] = (F[i] - sp) / d;
        z[i] = -sz / d;
    }
    double pz = 0, zz = 0;
    for (std::size_t k = 0; k + 3 < m; ++k) {
        const double dp = p[k + 3] - 3 * p[k + 2] + 3 * p[k + 1] - p[k];
        const double dz = z[k + 3] - 3 * z[k + 2] + 3 * z[k + 1] - z[k];
        pz += dp * dz;
        zz += dz * dz;
    }
    const double c = zz > 0 ? -pz / zz : 0.0;
    for (std::size_t k = 0; k < m; ++k) p[k] += c * z[k];
    return p;
}

// ---------------------------------------------------------------------------

TransformResult forward(const TransformSpec& spec, const SubDistribution& input) {
    spec.validate();
    require_resolution(input);
    const auto& t = input.grid();
    const std::size_t m = t.size();
    std::vector<double> out(m, 0.0);

    switch (spec.kind) {
        case TransformKind::HLV:
        case TransformKind::Fractional: {
            std::vector<double> g(m);
            for (std::size_t i = 0; i < m; ++i) g[i] = 1.0 - input[i];
            out = VolterraOperator(t, spec.kernel_alpha()).apply(g);
            break;
        }
        case TransformKind::DistortedPositive: {
            // G(t) = t int_0^1 g(s(v)) dv, s(v) = t (1 - v^(1/alpha))^alpha, g = 1 - G~ linear
            // between nodes. Each cell [t_k, t_k+1] maps to a v-interval on which the
            // integrand is smooth, so a fixed Gauss rule per piece suffices.
            const double a = spec.alpha;
            using boost::math::quadrature::gauss;
            for (std::size_t i = 1; i < m; ++i) {
                const double ti = t[i];
                auto v_of = [&](double s) { return std::pow(1.0 - std::pow(s / ti, 1.0 / a), a); };
                double acc = 0, v_hi = 1.0;
                for (std::size_t k = 0; k < i; ++k) {
                    const double v_lo = k + 1 == i ? 0.0 : v_of(t[k + 1]);
                    const double g0 = 1.0 - input[k], slope = (input[k] - input[k + 1]) / (t[k + 1] - t[k]);
                    auto f = [&](double v) { return g0 + slope * (ti * std::pow(1.0 - std::pow(v, 1.0 / a), a) - t[k]); };
                    acc += gauss<double, 7>::integrate(f, v_lo, v_hi);
                    v_hi = v_lo;
                }
                out[i] = ti * acc;
            }
            break;
        }
        case TransformKind::DistortedZero:
            for (std::size_t i = 0; i < m; ++i) out[i] = t[i] * (1.0 - input[i]);
            break;
    }

    double clipped = 0;
    for (auto& v : out) v = clip01(v, clipped);
    SubDistribution law(t, std::move(out));
    const double dec = law.max_decrease();
    return {std::move(law), clipped, dec};
}

InversionResult invert(const TransformSpec& spec, const SubDistribution& F) {
    spec.validate();
    if (spec.kind != TransformKind::HLV && spec.kind != TransformKind::Fractional)
        throw std::invalid_argument("invert: only the HLV and fractional transforms are inverted");
    require_resolution(F);
    if (std::abs(F[0]) > 1e-6) throw std::invalid_argument("invert: input must vanish at t = 0");
    const auto g = VolterraOperator(F.grid(), spec.kernel_alpha()).solve(F.values());
    std::vector<double> v(g.size());
    InversionResult r{SubDistribution(F.grid(), std::vector<double>(g.size(), 0.0)), 0.0, 0.0};
    double run = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = clip01(1.0 - g[i], r.clamp_adjustment);
        if (x < run) {
            r.monotone_adjustment = std::max(r.monotone_adjustment, run - x);
            x = run;
        }
        run = x;
        v[i] = x;
    }
    r.law = SubDistribution(F.grid(), std::move(v));
    return r;
}

SubDistribution change_of_variables(const SubDistribution& law, double alpha, Direction direction) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("change_of_variables: alpha must lie in (0,1]");
    const double p = direction == Direction::ReturnToDistorted ? alpha : 1.0 / alpha;
    std::vector<double> g(law.grid());
    if (alpha != 1.0)
        for (auto& x : g) x = std::pow(x, p);
    return SubDistribution(std::move(g), law.values(), law.sample_count(), law.censored_count(), law.beyond_count());
}

std::vector<double> refine_origin(std::span<const double> grid, double alpha, std::size_t nodes) {
    validate_grid(grid);
    if (grid.size() < 3) return {grid.begin(), grid.end()};
    const double top = grid[2];
    const double q = std::min(4.0, 2.0 / alpha);
    std::vector<double> g(grid.begin(), grid.end());
    for (std::size_t k = 1; k < nodes; ++k) g.push_back(top * std::pow(static_cast<double>(k) / static_cast<double>(nodes), q));
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double x : g)
        if (out.empty() || x - out.back() > 1e-9 * top) out.push_back(x);
        else if (std::find(grid.begin(), grid.end(), x) != grid.end()) out.back() = x;  // keep requested nodes exact
    return out;
}

FixedPointResult fixed_point(double alpha, std::span<const double> grid, double tol, bool refine) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("fixed_point: alpha must lie in (0,1]");
    if (!(tol > 0)) throw std::invalid_argument("fixed_point: tol must be positive");
    validate_grid(grid);
    if (grid.size() < 8) throw std::invalid_argument("fixed_point: grid too coarse (fewer than 8 points)");

    const std::vector<double> inner = (refine && alpha < 1.0) ? refine_origin(grid, alpha) : std::vector<double>(grid.begin(), grid.end());
    const VolterraOperator op(inner, alpha);
    const std::size_t m = inner.size();
    std::vector<double> F(m, 0.0), g(m);
    double change = 0;
    int it = 0;
    for (it = 1; it <= 10000; ++it) {
        for (std::size_t i = 0; i < m; ++i) g[i] = 1.0 - F[i];
        auto next = op.apply(g);
        double clipped = 0;
        change = 0;
        for (std::size_t i = 0; i < m; ++i) {
            next[i] = clip01(next[i], clipped);
            change = std::max(change, std::abs(next[i] - F[i]));
        }
        F = std::move(next);
        if (change < tol) break;
    }
    if (change >= tol) throw std::runtime_error("fixed_point: no convergence after 10^4 iterations");

    std::vector<double> out;
    out.reserve(grid.size());
    std::size_t k = 0;
    for (double t : grid) {
        while (inner[k] != t) ++k;
        out.push_back(F[k]);
    }
    return {SubDistribution({grid.begin(), grid.end()}, std::move(out)), it, change};
}

}  // namespace rtlab
