#include "mfuq/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfuq {

namespace {

double halton(std::size_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % static_cast<std::size_t>(base));
        index /= static_cast<std::size_t>(base);
    }
    return r;
}

int nth_prime(std::size_t n) {
    static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    if (n < sizeof(primes) / sizeof(primes[0])) return primes[n];
    int candidate = primes[sizeof(primes) / sizeof(primes[0]) - 1];
    std::size_t found = sizeof(primes) / sizeof(primes[0]) - 1;
    while (found < n) {
        candidate += 2;
        bool prime = true;
        for (int d = 3; d * d <= candidate; d += 2)
            if (candidate % d == 0) {
                prime = false;
                break;
            }
        if (prime) ++found;
    }
    return candidate;
}

// Starting lattice: center, then corners, then face centers, then Halton
// fill. Truncated or extended to the requested particle count.
std::vector<Point> starting_positions(const ParamDomain& domain, int count) {
    const std::size_t dims = domain.dim();
    std::vector<Point> pos;
    pos.reserve(static_cast<std::size_t>(count));
    pos.push_back(domain.center());
    if (dims <= 20) {
        for (unsigned long long mask = 0; mask < (1ull << dims) && pos.size() < static_cast<std::size_t>(count); ++mask) {
            Point p(dims);
            for (std::size_t n = 0; n < dims; ++n)
                p[n] = (mask & (1ull << n)) ? domain.upper(n) : domain.lower(n);
            pos.push_back(p);
        }
    }
    for (std::size_t n = 0; n < dims && pos.size() < static_cast<std::size_t>(count); ++n) {
        Point lo = domain.center();
        lo[n] = domain.lower(n);
        pos.push_back(lo);
        if (pos.size() == static_cast<std::size_t>(count)) break;
        Point hi = domain.center();
        hi[n] = domain.upper(n);
        pos.push_back(hi);
    }
    std::size_t fill = 1;
    while (pos.size() < static_cast<std::size_t>(count)) {
        Point p(dims);
        for (std::size_t n = 0; n < dims; ++n)
            p[n] = domain.from_unit(n, halton(fill, nth_prime(n)));
        pos.push_back(p);
        ++fill;
    }
    pos.resize(static_cast<std::size_t>(count));
    return pos;
}

} // namespace

PsoResult pso_maximize(const std::function<double(const Point&)>& objective,
                       const ParamDomain& domain, const PsoOptions& options) {
    if (!objective) throw std::invalid_argument("pso_maximize: objective must be callable");
    if (options.iterations < 0) throw std::invalid_argument("pso_maximize: negative iteration count");
    const std::size_t dims = domain.dim();
    int count = options.particles;
    if (count == 0) count = dims < 30 ? 4 * (1 << dims) : 1 << 30;
    if (count < 1) throw std::invalid_argument("pso_maximize: need at least one particle");

    std::vector<Point> x = starting_positions(domain, count);
    std::vector<Point> v(x.size(), Point(dims, 0.0));
    std::vector<Point> pbest = x;
    std::vector<double> pval(x.size());

    PsoResult result;
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    auto eval = [&](const Point& p) {
        const double val = objective(p);
        ++result.evaluations;
        vmin = std::min(vmin, val);
        vmax = std::max(vmax, val);
        return val;
    };

    std::size_t gbest = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        pval[i] = eval(x[i]);
        if (pval[i] > pval[gbest]) gbest = i;
    }

    std::vector<double> clamp(dims);
    for (std::size_t n = 0; n < dims; ++n)
        clamp[n] = options.velocity_clamp * (domain.upper(n) - domain.lower(n));

    for (int iter = 0; iter < options.iterations; ++iter) {
        const Point gx = pbest[gbest]; // synchronous update: frozen for the sweep
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (std::size_t n = 0; n < dims; ++n) {
                double vel = options.inertia * v[i][n] +
                             options.cognitive * (pbest[i][n] - x[i][n]) +
                             options.social * (gx[n] - x[i][n]);
                vel = std::clamp(vel, -clamp[n], clamp[n]);
                v[i][n] = vel;
                x[i][n] = std::clamp(x[i][n] + vel, domain.lower(n), domain.upper(n));
            }
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double val = eval(x[i]);
            if (val > pval[i]) {
                pval[i] = val;
                pbest[i] = x[i];
            }
        }
        for (std::size_t i = 0; i < x.size(); ++i)
            if (pval[i] > pval[gbest]) gbest = i;
    }

    result.degenerate = !(vmax > vmin);
    result.best = result.degenerate ? domain.center() : pbest[gbest];
    result.value = result.degenerate ? pval[0] : pval[gbest];
    result.ranked_bests.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) result.ranked_bests.emplace_back(pval[i], pbest[i]);
    std::stable_sort(result.ranked_bests.begin(), result.ranked_bests.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    return result;
}

} // namespace mfuq
