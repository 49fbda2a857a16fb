#include "mfuq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfuq/misc.hpp"
#include "mfuq/rng.hpp"

namespace mfuq {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

MomentSet standardize(const RawMoments& rm) {
    const double m1 = rm.raw[0], m2 = rm.raw[1], m3 = rm.raw[2], m4 = rm.raw[3];
    MomentSet out;
    out.mean = m1;
    double var = m2 - m1 * m1;
    // Quadrature round-off can push a tiny variance below zero.
    if (var < 0.0 && var > -1e-12 * std::max(1.0, std::abs(m2))) var = 0.0;
    out.variance = var;
    const double mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 * m1 * m1;
    const double mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
    if (var > 0.0) {
        out.skewness = mu3 / std::pow(var, 1.5);
        out.kurtosis = mu4 / (var * var);
    } else {
        out.skewness = kNaN;
        out.kurtosis = kNaN;
    }
    return out;
}

MomentSet moments_from_samples(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("moments_from_samples: empty sample");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double mu2 = 0.0, mu3 = 0.0, mu4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        mu2 += d2;
        mu3 += d2 * d;
        mu4 += d2 * d2;
    }
    mu2 /= n;
    mu3 /= n;
    mu4 /= n;
    MomentSet out;
    out.mean = mean;
    out.variance = mu2;
    if (mu2 > 0.0) {
        out.skewness = mu3 / std::pow(mu2, 1.5);
        out.kurtosis = mu4 / (mu2 * mu2);
    } else {
        out.skewness = kNaN;
        out.kurtosis = kNaN;
    }
    return out;
}

std::array<double, 4> relative_moment_errors(const MomentSet& est, const MomentSet& ref) {
    auto rel = [](double e, double r) {
        if (!std::isfinite(r) || r == 0.0) return kNaN;
        return std::abs(e - r) / std::abs(r);
    };
    return {rel(est.mean, ref.mean), rel(est.variance, ref.variance),
            rel(est.skewness, ref.skewness), rel(est.kurtosis, ref.kurtosis)};
}

DiscreteErrors discrete_errors(const std::vector<double>& surrogate_values,
                               const std::vector<double>& reference_values) {
    if (surrogate_values.size() != reference_values.size() || surrogate_values.empty())
        throw std::invalid_argument("discrete_errors: need matching non-empty value vectors");
    const std::size_t n = surrogate_values.size();
    double sq = 0.0, ref_sq = 0.0, max_abs = 0.0, ref_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = surrogate_values[i] - reference_values[i];
        sq += d * d;
        ref_sq += reference_values[i] * reference_values[i];
        max_abs = std::max(max_abs, std::abs(d));
        ref_max = std::max(ref_max, reference_values[i]);
    }
    if (ref_sq == 0.0 || ref_max == 0.0)
        throw std::invalid_argument("discrete_errors: reference normalization is zero");
    DiscreteErrors out;
    out.l2 = std::sqrt(sq / static_cast<double>(n)) / std::sqrt(ref_sq / static_cast<double>(n));
    out.linf = max_abs / ref_max;
    return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double quantile_type7(const std::vector<double>& sorted_values, double p) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile_type7: empty sample");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_type7: p outside [0,1]");
    const std::size_t n = sorted_values.size();
    if (n == 1) return sorted_values[0];
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted_values[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

double silverman_bandwidth(const std::vector<double>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("silverman_bandwidth: need at least two samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
    if (spread <= 0.0) throw std::invalid_argument("silverman_bandwidth: sample has zero spread");
    return 0.9 * spread * std::pow(n, -0.2);
}

namespace {

std::vector<double> gaussian_kde(const std::vector<double>& samples,
                                 const std::vector<double>& grid, double h) {
    const double norm = 1.0 / (static_cast<double>(samples.size()) * h *
                               std::sqrt(2.0 * 3.141592653589793238462643));
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double s : samples) {
            const double z = (grid[g] - s) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out[g] = norm * acc;
    }
    return out;
}

} // namespace

std::vector<double> kde_pdf(const std::vector<double>& samples, const std::vector<double>& grid,
                            bool positive_support) {
    if (samples.size() < 2) throw std::invalid_argument("kde_pdf: need at least two samples");
    if (grid.empty()) throw std::invalid_argument("kde_pdf: empty grid");
    if (!positive_support) {
        return gaussian_kde(samples, grid, silverman_bandwidth(samples));
    }
    std::vector<double> logs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] > 0.0))
            throw std::invalid_argument("kde_pdf: positive support requires positive samples");
        logs[i] = std::log(samples[i]);
    }
    for (double g : grid)
        if (!(g > 0.0)) throw std::invalid_argument("kde_pdf: positive support requires positive grid");
    std::vector<double> log_grid(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) log_grid[i] = std::log(grid[i]);
    std::vector<double> dens = gaussian_kde(logs, log_grid, silverman_bandwidth(logs));
    for (std::size_t i = 0; i < grid.size(); ++i) dens[i] /= grid[i]; // Jacobian of exp
    return dens;
}

std::vector<double> kde_grid(const std::vector<double>& samples, std::size_t count,
                             bool positive_support) {
    if (samples.size() < 2) throw std::invalid_argument("kde_grid: need at least two samples");
    if (count < 2) throw std::invalid_argument("kde_grid: need at least two grid points");
    const double h = silverman_bandwidth(samples);
    double lo = *std::min_element(samples.begin(), samples.end());
    double hi = *std::max_element(samples.begin(), samples.end());
    if (positive_support) {
        lo = std::max(lo / std::exp(3.0 * silverman_bandwidth(samples)), 1e-300);
        hi = hi * std::exp(3.0 * h);
        // geometric spacing matches the log-space estimate
        std::vector<double> grid(count);
        const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i) grid[i] = std::exp(std::log(lo) + step * i);
        return grid;
    }
    lo -= 3.0 * h;
    hi += 3.0 * h;
    std::vector<double> grid(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) grid[i] = lo + step * i;
    return grid;
}

MomentSet reference_moments(FidelityModel& model, int level, int points_per_dim,
                            RawMoments* raw_out) {
    if (points_per_dim < 1 || (points_per_dim > 1 && ((points_per_dim - 1) & (points_per_dim - 2)) != 0))
        throw std::invalid_argument("reference_moments: points per dimension must be 1 or 2^k + 1");
    int lvl = 1;
    while (level_to_knots(lvl) < points_per_dim) ++lvl;
    if (level_to_knots(lvl) != points_per_dim)
        throw std::invalid_argument("reference_moments: points per dimension must be 1 or 2^k + 1");
    // model.levels() validity is checked by the surrogate itself
    TensorSurrogate ref(model, level, std::vector<int>(model.domain().dim(), lvl));
    RawMoments raw;
    for (int r = 1; r <= 4; ++r) raw.raw[static_cast<std::size_t>(r - 1)] = ref.quadrature(r);
    if (raw_out) *raw_out = raw;
    return standardize(raw);
}

MomentSet mc_moments(const std::function<std::vector<double>(const std::vector<Point>&)>& batch_eval,
                     const ParamDomain& domain, std::uint64_t master_seed,
                     int repetitions, std::size_t samples) {
    if (repetitions < 1 || samples < 2)
        throw std::invalid_argument("mc_moments: need at least one repetition of two samples");
    MomentSet acc;
    for (int rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t seed = derive_seed(master_seed, 0x6d630000ULL + static_cast<std::uint64_t>(rep));
        std::vector<Point> pts = domain.sample_many(seed, samples);
        std::vector<double> vals = batch_eval(pts);
        MomentSet m = moments_from_samples(vals);
        acc.mean += m.mean;
        acc.variance += m.variance;
        acc.skewness += m.skewness;
        acc.kurtosis += m.kurtosis;
    }
    const double r = static_cast<double>(repetitions);
    acc.mean /= r;
    acc.variance /= r;
    acc.skewness /= r;
    acc.kurtosis /= r;
    return acc;
}

} // namespace mfuq
