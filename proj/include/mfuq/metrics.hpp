#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "mfuq/domain.hpp"
#include "mfuq/model.hpp"

namespace mfuq {

// Raw moments E[G^r], r = 1..4.
struct RawMoments {
    std::array<double, 4> raw{0.0, 0.0, 0.0, 0.0};
};

// Central-moment summary; skewness and kurtosis are the standardized third
// and fourth central moments (kurtosis is not excess: uniform -> 1.8).
struct MomentSet {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
};

MomentSet standardize(const RawMoments& raw);

// Population-convention sample moments (divide by n, no bias correction).
MomentSet moments_from_samples(const std::vector<double>& values);

// Componentwise |est - ref| / |ref| in the order mean, variance, skewness,
// kurtosis; NaN where the reference component is zero or not finite.
std::array<double, 4> relative_moment_errors(const MomentSet& est, const MomentSet& ref);

struct DiscreteErrors {
    double l2 = 0.0;
    double linf = 0.0;
};

// Reference-normalized discrete errors over paired evaluations:
//   l2   = rms(s - ref) / rms(ref)
//   linf = max|s - ref| / max(ref)
DiscreteErrors discrete_errors(const std::vector<double>& surrogate_values,
                               const std::vector<double>& reference_values);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| over the merged
// support, with right-continuous empirical CDFs.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// Linear-interpolated order statistic of sorted data (the common "type 7"
// convention): h = (n-1) p.
double quantile_type7(const std::vector<double>& sorted_values, double p);

// Rule-of-thumb kernel bandwidth 0.9 min(sd, iqr/1.349) n^(-1/5).
double silverman_bandwidth(const std::vector<double>& samples);

// Gaussian kernel density estimate on `grid`. With positive_support the
// estimate is built in log space and transformed back, so no probability
// mass leaks below zero; samples and grid must then be strictly positive.
std::vector<double> kde_pdf(const std::vector<double>& samples, const std::vector<double>& grid,
                            bool positive_support = false);

// Evenly spaced evaluation grid covering the samples plus a 3-bandwidth
// margin (clipped to positive values when requested).
std::vector<double> kde_grid(const std::vector<double>& samples, std::size_t count = 401,
                             bool positive_support = false);

// One row of a convergence table. Cost is the cumulative model cost after
// the iteration; error fields are NaN when no reference was supplied.
struct ConvergenceRecord {
    int iteration = 0;
    double cumulative_cost = 0.0;
    MomentSet moments;
    std::array<double, 4> moment_errors{};
    double err_l2 = 0.0;
    double err_linf = 0.0;
    double ks = 0.0;
};

// Moments of the highest-fidelity model by full tensor quadrature with
// `points_per_dim` nodes per dimension (must be 1 or 2^k + 1).
MomentSet reference_moments(FidelityModel& model, int level, int points_per_dim,
                            RawMoments* raw_out = nullptr);

// Monte Carlo moments of a surrogate: `repetitions` independent batches of
// `samples` uniform draws, each reduced with moments_from_samples, averaged
// componentwise. The batch evaluator receives all points of one repetition.
MomentSet mc_moments(const std::function<std::vector<double>(const std::vector<Point>&)>& batch_eval,
                     const ParamDomain& domain, std::uint64_t master_seed,
                     int repetitions = 10, std::size_t samples = 10000);

} // namespace mfuq
