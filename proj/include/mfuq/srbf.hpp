#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mfuq/metrics.hpp"
#include "mfuq/model.hpp"
#include "mfuq/pso.hpp"
#include "mfuq/stopping.hpp"

#include <Eigen/Dense>

namespace mfuq {

// Power kernel expansion sum_j w_j * ||y - c_j||^tau.
double rbf_kernel_value(const std::vector<Point>& centers, const std::vector<double>& weights,
                        double tau, const Point& y);

// Deterministic k-means: farthest-point seeding from the data centroid,
// nearest-center assignment with lowest-index tie-breaks, at most
// `max_iterations` update sweeps or until centroids move less than
// `tolerance`. k == points.size() returns the points themselves.
std::vector<Point> kmeans_centers(const std::vector<Point>& points, std::size_t k,
                                  int max_iterations = 100, double tolerance = 1e-10);

enum class SrbfMode {
    loocv,         // center count chosen by leave-one-out cross-validation
    interpolation, // centers = training points, square system
};

struct SrbfOptions {
    std::size_t theta = 1000; // kernel-exponent samples shared across surrogates
    double tau_min = 1.0;
    double tau_max = 3.0;
    SrbfMode mode = SrbfMode::loocv;
    bool normal_equations = false; // literal (A^T A)^-1 A^T b least-squares path
    int kmeans_max_iterations = 100;
    double kmeans_tolerance = 1e-10;
};

std::shared_ptr<const std::vector<double>> sample_tau(std::uint64_t seed, const SrbfOptions& options);

// One stochastic RBF surrogate: per tau sample a weight vector fitted to the
// training data (interpolation when the centers are the training points,
// least squares otherwise). Prediction averages over the tau samples; the
// uncertainty is the central 95% spread of the per-tau predictions.
class SrbfSurrogate {
public:
    SrbfSurrogate(std::vector<Point> train_inputs, std::vector<double> train_values,
                  std::vector<Point> centers, std::shared_ptr<const std::vector<double>> taus,
                  bool normal_equations = false);

    std::size_t input_dim() const { return dim_; }
    std::size_t training_count() const { return train_count_; }
    std::size_t center_count() const { return static_cast<std::size_t>(centers_.rows()); }
    bool interpolating() const { return interpolating_; }
    const std::vector<Point>& center_points() const { return center_points_; }
    const std::shared_ptr<const std::vector<double>>& taus() const { return taus_; }
    std::vector<double> weights_row_major() const; // theta x K

    double predict(const Point& y) const;
    double uncertainty(const Point& y) const;
    void predict_with_uncertainty(const Point& y, double* mean, double* band) const;
    double predict_single_tau(const Point& y, std::size_t tau_index) const;
    std::vector<double> predict_many(const std::vector<Point>& ys) const;

private:
    std::size_t dim_ = 0;
    std::size_t train_count_ = 0;
    bool interpolating_ = false;
    std::vector<Point> center_points_;
    Eigen::MatrixXd centers_; // K x dim
    std::shared_ptr<const std::vector<double>> taus_;
    Eigen::MatrixXd weights_; // theta x K

    Eigen::VectorXd per_tau_predictions(const Point& y) const;
};

// Leave-one-out RMSE of the tau-averaged prediction for a given center
// count. Centers come from kmeans_centers on the full input set (or the
// inputs themselves when k equals the sample count).
double loocv_rmse(const std::vector<Point>& inputs, const std::vector<double>& values,
                  std::size_t k, const std::shared_ptr<const std::vector<double>>& taus,
                  const SrbfOptions& options);

// Smallest-RMSE center count within [k_lo, k_hi] (clamped to the sample
// count); ties pick the smaller k.
std::size_t loocv_select_k(const std::vector<Point>& inputs, const std::vector<double>& values,
                           std::size_t k_lo, std::size_t k_hi,
                           const std::shared_ptr<const std::vector<double>>& taus,
                           const SrbfOptions& options);

// Training data of one fidelity level, in unit-cube coordinates. Duplicate
// inputs (bitwise) are rejected so interpolation systems stay nonsingular.
class TrainingSet {
public:
    explicit TrainingSet(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return inputs_.size(); }
    const std::vector<Point>& inputs() const { return inputs_; }
    const std::vector<double>& values() const { return values_; }
    bool contains(const Point& u) const;
    bool add(const Point& u, double value); // false on duplicate input

private:
    std::size_t dim_;
    std::vector<Point> inputs_;
    std::vector<double> values_;
};

// Multi-fidelity stack: a base surrogate of the lowest fidelity plus one
// error surrogate per inter-level correction, all sharing the tau samples.
class MfSrbfSurrogate {
public:
    MfSrbfSurrogate(std::vector<SrbfSurrogate> layers, std::size_t dim);

    std::size_t input_dim() const { return dim_; }
    std::size_t layer_count() const { return layers_.size(); }
    const SrbfSurrogate& layer(std::size_t i) const { return layers_.at(i); }

    double predict(const Point& y) const;                    // highest-fidelity prediction
    double predict_partial(const Point& y, std::size_t m) const; // first m layers
    std::vector<double> predict_many(const std::vector<Point>& ys) const;
    std::vector<double> uncertainty_components(const Point& y) const;
    double uncertainty(const Point& y) const;                // sqrt(sum of squares)

private:
    std::vector<SrbfSurrogate> layers_;
    std::size_t dim_;
};

// Builds the stack from per-level training sets. loocv_windows[i] bounds the
// center-count search per layer (ignored in interpolation mode); the chosen
// counts are reported through k_star_out.
MfSrbfSurrogate build_mf_surrogate(const std::vector<TrainingSet>& sets,
                                   const std::shared_ptr<const std::vector<double>>& taus,
                                   const SrbfOptions& options,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& loocv_windows,
                                   std::vector<std::size_t>* k_star_out = nullptr);

// Index (1-based) of the largest uncertainty-to-cost ratio; ties pick the
// smallest index.
std::size_t select_fidelity(const std::vector<double>& uncertainty_components,
                            const std::vector<double>& gammas);

struct InfillResult {
    Point point;               // unit-cube coordinates
    double uncertainty = 0.0;
    bool degenerate = false;   // uncertainty field was flat
};

// Maximizes the stack uncertainty over the unit cube.
InfillResult find_infill_point(const MfSrbfSurrogate& surrogate, const PsoOptions& pso);

struct SrbfIterationState {
    int iteration = 0;
    double cumulative_cost = 0.0;
    const MfSrbfSurrogate* surrogate = nullptr;
    const std::vector<TrainingSet>* training = nullptr; // unit-cube coordinates
};

struct SrbfRunOptions {
    SrbfOptions srbf;
    PsoOptions pso;
    std::size_t guessing_steps = 1; // provisional surrogate-valued additions per iteration
    StoppingCriteria stop;
    std::uint64_t seed = 0;
    std::function<void(ConvergenceRecord&, const SrbfIterationState&)> metric_hook;
};

struct SrbfRunResult {
    std::shared_ptr<MfSrbfSurrogate> surrogate;
    std::vector<TrainingSet> training;
    std::vector<std::size_t> k_star;
    std::vector<ConvergenceRecord> records; // index 0 = initial training only
};

// Adaptive multi-fidelity sampling: starts from 2N+1 points per level
// (domain center plus boundary-face centers), then per iteration runs a
// batch of uncertainty-driven infills. Within a batch the new points carry
// surrogate predictions; the model is only evaluated once the batch is
// fixed, and the provisional values are then replaced by model values.
SrbfRunResult srbf_adaptive_run(std::shared_ptr<FidelityModel> model, const SrbfRunOptions& options);

} // namespace mfuq
