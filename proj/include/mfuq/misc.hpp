#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "mfuq/metrics.hpp"
#include "mfuq/model.hpp"
#include "mfuq/multi_index.hpp"
#include "mfuq/stopping.hpp"
#include "mfuq/tensor_grid.hpp"

namespace mfuq {

// Single tensor-product interpolant of one fidelity level on the grid
// described by `beta` (one level per parameter dimension). A zero component
// in alpha or beta denotes the zero operator.
class TensorSurrogate {
public:
    TensorSurrogate(FidelityModel& model, int alpha, std::vector<int> beta);

    bool is_zero() const { return zero_; }
    double evaluate(const Point& y) const;
    double quadrature(int power = 1) const; // integral of G_alpha^power against rho

private:
    bool zero_ = false;
    std::vector<int> beta_;
    std::shared_ptr<UnivariateLevelCache> levels_;
    std::vector<int> shape_;
    std::vector<double> values_;
    ParamDomain domain_;
};

enum class ProfitKind { quadrature, surrogate };

// Serializable view of one combination term: its multi-index, coefficient,
// and the grid-value tensor (row-major, first dimension slowest).
struct TensorDump {
    MultiIndex index;
    int coefficient = 0;
    std::vector<int> shape;
    std::vector<double> values;
};

// Cached univariate basis matrices for one fixed evaluation point set;
// repeated surrogate evaluations over the same points reuse them.
class BatchBasis {
public:
    const std::vector<Point>& points() const;
    std::size_t size() const;

private:
    friend class MiscApproximation;
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// Combination-technique approximation over a downward-closed set of
// [alpha, beta_1..beta_N] indices. Holds every grid-value tensor it has ever
// needed, so evaluation after construction never touches the model again.
class MiscApproximation {
public:
    MiscApproximation(std::shared_ptr<FidelityModel> model, const MultiIndexSet& index_set);

    const FidelityModel& model() const { return *model_; }
    const std::shared_ptr<FidelityModel>& model_ptr() const { return model_; }
    const MultiIndexSet& index_set() const { return set_; }
    const std::map<MultiIndex, int>& coefficients() const { return coeff_; }

    double evaluate(const Point& y) const;

    BatchBasis make_batch_basis(std::vector<Point> pts) const;
    std::vector<double> evaluate_many(const BatchBasis& basis) const;
    std::vector<double> evaluate_many(const std::vector<Point>& pts) const;

    double quadrature(int power = 1) const;
    RawMoments raw_moments() const;

    // Work of adding `idx`: cost(alpha) times the number of new grid points.
    double work_contribution(const MultiIndex& idx) const;

    // |R_{set+idx} - R_set|; requires that adding idx keeps the set downward
    // closed. Builds the grid tensors for idx (and charges their cost).
    double error_contribution_quadrature(const MultiIndex& idx);

    // max_y |S_{set+idx}(y) - S_set(y)| over the supplied points.
    double error_contribution_surrogate(const MultiIndex& idx, const std::vector<Point>& pts);

    // First-difference operator of idx applied to the interpolant family,
    // evaluated over a point set (the increment S_{set+idx} - S_set).
    std::vector<double> detail_values(const MultiIndex& idx, const BatchBasis& basis);
    std::vector<double> detail_values(const MultiIndex& idx, const std::vector<Point>& pts);

    // Same increment applied to the quadrature of G^r, r = 1..4.
    std::array<double, 4> detail_raw_quadrature(const MultiIndex& idx);

    // Adds idx (must keep the set downward closed) and refreshes coefficients.
    void insert_index(const MultiIndex& idx);

    // All combination terms with nonzero coefficient, in set order.
    std::vector<TensorDump> dump_tensors();

private:
    struct Tensor {
        std::vector<int> shape;
        std::vector<double> values;
    };

    void check_candidate(const MultiIndex& idx) const;
    const Tensor& tensor_for(int alpha, const std::vector<int>& beta);
    void refresh_coefficients();
    std::vector<double> tensor_eval_many(const Tensor& t, const std::vector<int>& beta,
                                         const BatchBasis& basis,
                                         const std::vector<double>* minus_values) const;

    std::shared_ptr<FidelityModel> model_;
    std::shared_ptr<UnivariateLevelCache> levels_;
    MultiIndexSet set_;
    std::map<MultiIndex, int> coeff_;
    std::map<std::pair<int, std::vector<int>>, Tensor> tensors_;
};

struct MiscIterationState {
    int iteration = 0;
    double cumulative_cost = 0.0;
    const MiscApproximation* approx = nullptr;
    const std::vector<Point>* test_points = nullptr;  // shared testing set
    const std::vector<double>* test_values = nullptr; // surrogate at the testing set
    RawMoments raw_moments;
};

struct AdaptOptions {
    ProfitKind profit = ProfitKind::surrogate;
    StoppingCriteria stop;
    std::uint64_t seed = 0;
    std::size_t test_point_count = 10000;
    bool track_test_values = true;
    // Called once per record; may fill the error fields of the record.
    std::function<void(ConvergenceRecord&, const MiscIterationState&)> metric_hook;
};

struct CandidateInfo {
    double error = 0.0;
    double work = 0.0;
    double profit = 0.0;
};

struct MiscRunResult {
    std::shared_ptr<MiscApproximation> approx; // combination over all explored indices
    MultiIndexSet accepted;                    // the set profits were accepted into
    std::map<MultiIndex, CandidateInfo> bookkeeping;
    std::vector<ConvergenceRecord> records;    // one per iteration, index 0 = initial state
};

// Profit-driven index-set growth: explores the reduced margin of the
// accepted set, assigns each candidate a profit (error contribution per unit
// work, frozen when first explored), and accepts the best candidate per
// iteration until a stopping criterion fires. Returns the combination over
// every explored index, which is richer than the accepted set.
MiscRunResult misc_adapt(std::shared_ptr<FidelityModel> model, const AdaptOptions& options);

} // namespace mfuq
