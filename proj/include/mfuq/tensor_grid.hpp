#pragma once

#include <cstddef>
#include <vector>

#include "mfuq/domain.hpp"

namespace mfuq {

// Number of knots per level: 0, 1, 3, 5, 9, 17, ... (nested doubling).
int level_to_knots(int level);

// Clenshaw-Curtis nodes on [-1,1] in generation order (1 down to -1);
// count == 1 yields the single node {0}. For odd counts the middle node is
// exactly 0, which keeps grids of successive levels bitwise nested.
std::vector<double> cc_points(int count);

// Barycentric weights of the nodes above, up to a common factor (half weight
// at the interval endpoints, alternating sign). Valid for any affine image
// of the node set.
std::vector<double> cc_barycentric_weights(int count);

// Gauss-Legendre rule on [-1,1]; weights sum to 2.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// One interpolation level in one parameter dimension: mapped nodes plus the
// ingredients for barycentric evaluation and for quadrature against the
// uniform density (quad weights sum to 1).
struct UnivariateLevel {
    int level = 0;
    std::vector<double> nodes;
    std::vector<double> bary;
    std::vector<double> quad;
};

UnivariateLevel make_univariate_level(const ParamDomain& domain, std::size_t dim, int level);

// Lagrange basis values at x for all nodes of the level (barycentric second
// form; exact node hits return a unit vector).
void barycentric_basis(const UnivariateLevel& lvl, double x, double* out);

// Lazily built per-(dimension, level) table shared by interpolants.
class UnivariateLevelCache {
public:
    explicit UnivariateLevelCache(ParamDomain domain) : domain_(std::move(domain)) {}

    const ParamDomain& domain() const { return domain_; }
    const UnivariateLevel& get(std::size_t dim, int level);

private:
    ParamDomain domain_;
    std::vector<std::vector<UnivariateLevel>> table_; // [dim][level-1]
};

} // namespace mfuq
