#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "mfuq/errors.hpp"
#include "mfuq/rng.hpp"

namespace mfuq {

using Point = std::vector<double>;

// Box domain for the uncertain parameters, with the uniform probability
// density rho(y) = prod 1/(b_n - a_n).
class ParamDomain {
public:
    ParamDomain(std::vector<double> lower, std::vector<double> upper)
        : lower_(std::move(lower)), upper_(std::move(upper)) {
        if (lower_.empty() || lower_.size() != upper_.size())
            throw std::invalid_argument("ParamDomain: bounds must be non-empty and of equal size");
        for (std::size_t n = 0; n < lower_.size(); ++n)
            if (!(lower_[n] < upper_[n]))
                throw std::invalid_argument("ParamDomain: need lower < upper in every dimension");
    }

    static ParamDomain unit_cube(std::size_t dim) {
        return ParamDomain(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
    }

    std::size_t dim() const { return lower_.size(); }
    double lower(std::size_t n) const { return lower_[n]; }
    double upper(std::size_t n) const { return upper_[n]; }

    bool contains(const Point& y) const {
        if (y.size() != dim()) return false;
        for (std::size_t n = 0; n < dim(); ++n)
            if (y[n] < lower_[n] || y[n] > upper_[n]) return false;
        return true;
    }

    void require_inside(const Point& y) const {
        if (y.size() != dim())
            throw std::domain_error("point dimension does not match domain");
        if (!contains(y))
            throw std::domain_error("point outside parameter domain");
    }

    // Affine map from the reference interval [-1,1]; the single code path for
    // placing structured nodes, so equal reference coordinates always produce
    // bit-identical domain coordinates.
    double from_reference(std::size_t n, double t) const {
        return 0.5 * (lower_[n] + upper_[n]) + 0.5 * (upper_[n] - lower_[n]) * t;
    }

    double to_unit(std::size_t n, double y) const {
        return (y - lower_[n]) / (upper_[n] - lower_[n]);
    }

    double from_unit(std::size_t n, double u) const {
        return lower_[n] + (upper_[n] - lower_[n]) * u;
    }

    Point center() const {
        Point c(dim());
        for (std::size_t n = 0; n < dim(); ++n) c[n] = from_reference(n, 0.0);
        return c;
    }

    Point sample(std::mt19937_64& gen) const {
        Point y(dim());
        for (std::size_t n = 0; n < dim(); ++n) y[n] = uniform(gen, lower_[n], upper_[n]);
        return y;
    }

    // Shared testing/evaluation point sets are always drawn through this
    // helper so every consumer sees the same sequence for a given seed.
    std::vector<Point> sample_many(std::uint64_t seed, std::size_t count) const {
        std::mt19937_64 gen(seed);
        std::vector<Point> pts;
        pts.reserve(count);
        for (std::size_t i = 0; i < count; ++i) pts.push_back(sample(gen));
        return pts;
    }

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

} // namespace mfuq
