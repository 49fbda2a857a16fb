#include "mfuq/tensor_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace mfuq {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

int level_to_knots(int level) {
    if (level < 0) throw std::invalid_argument("level_to_knots: negative level");
    if (level == 0) return 0;
    if (level == 1) return 1;
    return (1 << (level - 1)) + 1;
}

std::vector<double> cc_points(int count) {
    if (count < 1) throw std::invalid_argument("cc_points: need at least one node");
    if (count == 1) return {0.0};
    std::vector<double> pts(count);
    for (int j = 0; j < count; ++j)
        pts[j] = std::cos(static_cast<double>(j) * kPi / static_cast<double>(count - 1));
    // cos(pi/2) carries the rounding of pi; the true midpoint is 0.
    if (count % 2 == 1) pts[(count - 1) / 2] = 0.0;
    return pts;
}

std::vector<double> cc_barycentric_weights(int count) {
    if (count < 1) throw std::invalid_argument("cc_barycentric_weights: need at least one node");
    std::vector<double> w(count, 1.0);
    if (count == 1) return w;
    for (int j = 0; j < count; ++j) w[j] = (j % 2 == 0) ? 1.0 : -1.0;
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P'_n(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

UnivariateLevel make_univariate_level(const ParamDomain& domain, std::size_t dim, int level) {
    if (level < 1) throw std::invalid_argument("make_univariate_level: level must be >= 1");
    if (dim >= domain.dim()) throw std::invalid_argument("make_univariate_level: dimension out of range");

    const int count = level_to_knots(level);
    UnivariateLevel lvl;
    lvl.level = level;
    const std::vector<double> ref = cc_points(count);
    lvl.nodes.resize(count);
    for (int j = 0; j < count; ++j) lvl.nodes[j] = domain.from_reference(dim, ref[j]);
    lvl.bary = cc_barycentric_weights(count);

    // Quadrature weights against the uniform density: integrate each Lagrange
    // basis polynomial (degree count-1) exactly with a Gauss-Legendre rule.
    lvl.quad.assign(count, 0.0);
    if (count == 1) {
        lvl.quad[0] = 1.0;
        return lvl;
    }
    std::vector<double> gx, gw;
    gauss_legendre(count, gx, gw);
    std::vector<double> basis(count);
    UnivariateLevel ref_lvl;
    ref_lvl.level = level;
    ref_lvl.nodes = ref;
    ref_lvl.bary = lvl.bary;
    for (int i = 0; i < count; ++i) {
        barycentric_basis(ref_lvl, gx[i], basis.data());
        for (int j = 0; j < count; ++j) lvl.quad[j] += 0.5 * gw[i] * basis[j];
    }
    return lvl;
}

void barycentric_basis(const UnivariateLevel& lvl, double x, double* out) {
    const std::size_t count = lvl.nodes.size();
    if (count == 1) {
        out[0] = 1.0;
        return;
    }
    for (std::size_t j = 0; j < count; ++j) {
        if (x == lvl.nodes[j]) {
            for (std::size_t k = 0; k < count; ++k) out[k] = 0.0;
            out[j] = 1.0;
            return;
        }
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        out[j] = lvl.bary[j] / (x - lvl.nodes[j]);
        denom += out[j];
    }
    for (std::size_t j = 0; j < count; ++j) out[j] /= denom;
}

const UnivariateLevel& UnivariateLevelCache::get(std::size_t dim, int level) {
    if (level < 1) throw std::invalid_argument("UnivariateLevelCache: level must be >= 1");
    if (dim >= domain_.dim()) throw std::invalid_argument("UnivariateLevelCache: dimension out of range");
    if (table_.size() < domain_.dim()) table_.resize(domain_.dim());
    auto& column = table_[dim];
    while (column.size() < static_cast<std::size_t>(level)) {
        column.push_back(make_univariate_level(domain_, dim, static_cast<int>(column.size()) + 1));
    }
    return column[static_cast<std::size_t>(level - 1)];
}

} // namespace mfuq
