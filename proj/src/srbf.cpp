#include "mfuq/srbf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "mfuq/errors.hpp"
#include "mfuq/rng.hpp"

namespace mfuq {

namespace {

constexpr std::uint64_t kTauStreamSalt = 0x6b65726eULL; // kernel-exponent stream tag

double euclid(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double d = a[n] - b[n];
        s += d * d;
    }
    return std::sqrt(s);
}

std::uint64_t canonical_bits(double x) {
    if (x == 0.0) x = 0.0; // collapse -0.0 into +0.0
    return std::bit_cast<std::uint64_t>(x);
}

bool same_point_bits(const Point& a, const Point& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t n = 0; n < a.size(); ++n)
        if (canonical_bits(a[n]) != canonical_bits(b[n])) return false;
    return true;
}

// Log of the training-to-center distance matrix; log(0) = -inf, which the
// exponent map exp(tau * log d) turns back into the exact kernel value 0.
Eigen::MatrixXd log_distance_matrix(const std::vector<Point>& rows, const std::vector<Point>& cols) {
    Eigen::MatrixXd L(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::log(euclid(rows[i], cols[j]));
    return L;
}

void check_point_list(const std::vector<Point>& points, std::size_t dim, const char* what) {
    for (const auto& p : points)
        if (p.size() != dim)
            throw std::invalid_argument(std::string(what) + ": inconsistent point dimension");
}

} // namespace

double rbf_kernel_value(const std::vector<Point>& centers, const std::vector<double>& weights,
                        double tau, const Point& y) {
    if (centers.size() != weights.size())
        throw std::invalid_argument("rbf_kernel_value: centers/weights size mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
        if (centers[j].size() != y.size())
            throw std::invalid_argument("rbf_kernel_value: dimension mismatch");
        const double d = euclid(centers[j], y);
        s += weights[j] * (d == 0.0 ? 0.0 : std::pow(d, tau));
    }
    return s;
}

std::vector<Point> kmeans_centers(const std::vector<Point>& points, std::size_t k,
                                  int max_iterations, double tolerance) {
    if (points.empty()) throw std::invalid_argument("kmeans_centers: no points");
    const std::size_t dim = points[0].size();
    if (dim == 0) throw std::invalid_argument("kmeans_centers: zero-dimensional points");
    check_point_list(points, dim, "kmeans_centers");
    const std::size_t n = points.size();
    if (k == 0 || k > n)
        throw std::invalid_argument("kmeans_centers: need 1 <= k <= number of points");
    if (k == n) return points;

    Point centroid(dim, 0.0);
    for (const auto& p : points)
        for (std::size_t d = 0; d < dim; ++d) centroid[d] += p[d];
    for (std::size_t d = 0; d < dim; ++d) centroid[d] /= static_cast<double>(n);

    // Farthest-point seeding, starting from the point farthest away from the
    // data centroid; every argmax keeps the lowest index on ties.
    std::vector<std::size_t> seeds;
    std::vector<char> used(n, 0);
    {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = euclid(points[i], centroid);
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        seeds.push_back(best);
        used[best] = 1;
    }
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    while (seeds.size() < k) {
        const Point& last = points[seeds.back()];
        for (std::size_t i = 0; i < n; ++i)
            nearest[i] = std::min(nearest[i], euclid(points[i], last));
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            if (nearest[i] > best_d) {
                best_d = nearest[i];
                best = i;
            }
        }
        seeds.push_back(best);
        used[best] = 1;
    }

    std::vector<Point> centers;
    centers.reserve(k);
    for (std::size_t s : seeds) centers.push_back(points[s]);

    std::vector<std::size_t> assign(n, 0);
    for (int iter = 0; iter < max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = euclid(points[i], centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = euclid(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Point mean(dim, 0.0);
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (assign[i] != c) continue;
                for (std::size_t d = 0; d < dim; ++d) mean[d] += points[i][d];
                ++count;
            }
            if (count == 0) continue; // empty cluster keeps its center
            for (std::size_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(count);
            movement = std::max(movement, euclid(mean, centers[c]));
            centers[c] = std::move(mean);
        }
        if (movement < tolerance) break;
    }
    return centers;
}

std::shared_ptr<const std::vector<double>> sample_tau(std::uint64_t seed, const SrbfOptions& options) {
    if (options.theta == 0) throw std::invalid_argument("sample_tau: theta must be positive");
    if (!(options.tau_min > 0.0) || !(options.tau_min <= options.tau_max))
        throw std::invalid_argument("sample_tau: need 0 < tau_min <= tau_max");
    auto taus = std::make_shared<std::vector<double>>();
    taus->reserve(options.theta);
    std::mt19937_64 gen(seed);
    for (std::size_t i = 0; i < options.theta; ++i)
        taus->push_back(uniform(gen, options.tau_min, options.tau_max));
    return taus;
}

SrbfSurrogate::SrbfSurrogate(std::vector<Point> train_inputs, std::vector<double> train_values,
                             std::vector<Point> centers, std::shared_ptr<const std::vector<double>> taus,
                             bool normal_equations)
    : taus_(std::move(taus)) {
    if (train_inputs.empty() || train_inputs.size() != train_values.size())
        throw std::invalid_argument("SrbfSurrogate: training inputs and values must match and be non-empty");
    if (!taus_ || taus_->empty())
        throw std::invalid_argument("SrbfSurrogate: need at least one kernel exponent sample");
    for (double t : *taus_)
        if (!(t > 0.0)) throw std::invalid_argument("SrbfSurrogate: kernel exponents must be positive");
    dim_ = train_inputs[0].size();
    if (dim_ == 0) throw std::invalid_argument("SrbfSurrogate: zero-dimensional inputs");
    check_point_list(train_inputs, dim_, "SrbfSurrogate");
    if (centers.empty() || centers.size() > train_inputs.size())
        throw std::invalid_argument("SrbfSurrogate: need 1 <= centers <= training samples");
    check_point_list(centers, dim_, "SrbfSurrogate");

    train_count_ = train_inputs.size();
    center_points_ = std::move(centers);
    interpolating_ = center_points_.size() == train_count_;

    const auto J = static_cast<Eigen::Index>(train_count_);
    const auto K = static_cast<Eigen::Index>(center_points_.size());
    const auto theta = static_cast<Eigen::Index>(taus_->size());

    centers_.resize(K, static_cast<Eigen::Index>(dim_));
    for (Eigen::Index j = 0; j < K; ++j)
        for (std::size_t d = 0; d < dim_; ++d)
            centers_(j, static_cast<Eigen::Index>(d)) = center_points_[static_cast<std::size_t>(j)][d];

    const Eigen::MatrixXd L = log_distance_matrix(train_inputs, center_points_);
    const Eigen::Map<const Eigen::VectorXd> b(train_values.data(), J);

    weights_.resize(theta, K);
    for (Eigen::Index t = 0; t < theta; ++t) {
        const Eigen::MatrixXd A = ((*taus_)[static_cast<std::size_t>(t)] * L.array()).exp();
        Eigen::VectorXd w;
        if (normal_equations) {
            const Eigen::MatrixXd gram = A.transpose() * A;
            w = gram.inverse() * (A.transpose() * b);
            if (!w.allFinite())
                throw StructureError("SrbfSurrogate: singular normal equations, the kernel matrix has dependent columns");
        } else {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
            if (qr.rank() < K)
                throw StructureError("SrbfSurrogate: kernel matrix is rank deficient (" +
                                     std::to_string(qr.rank()) + " < " + std::to_string(K) + ")");
            w = qr.solve(b);
        }
        weights_.row(t) = w.transpose();
    }
}

std::vector<double> SrbfSurrogate::weights_row_major() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(weights_.size()));
    for (Eigen::Index t = 0; t < weights_.rows(); ++t)
        for (Eigen::Index j = 0; j < weights_.cols(); ++j) out.push_back(weights_(t, j));
    return out;
}

Eigen::VectorXd SrbfSurrogate::per_tau_predictions(const Point& y) const {
    if (y.size() != dim_)
        throw std::invalid_argument("SrbfSurrogate: query point dimension mismatch");
    const auto K = centers_.rows();
    const auto theta = static_cast<Eigen::Index>(taus_->size());
    Eigen::VectorXd logr(K);
    for (Eigen::Index j = 0; j < K; ++j)
        logr(j) = std::log(euclid(center_points_[static_cast<std::size_t>(j)], y));
    const Eigen::Map<const Eigen::VectorXd> tv(taus_->data(), theta);
    const Eigen::MatrixXd E = (tv * logr.transpose()).array().exp();
    return (weights_.array() * E.array()).rowwise().sum();
}

double SrbfSurrogate::predict(const Point& y) const { return per_tau_predictions(y).mean(); }

double SrbfSurrogate::uncertainty(const Point& y) const {
    double band = 0.0;
    predict_with_uncertainty(y, nullptr, &band);
    return band;
}

void SrbfSurrogate::predict_with_uncertainty(const Point& y, double* mean, double* band) const {
    const Eigen::VectorXd p = per_tau_predictions(y);
    if (mean) *mean = p.mean();
    if (band) {
        std::vector<double> sorted(p.data(), p.data() + p.size());
        std::sort(sorted.begin(), sorted.end());
        *band = quantile_type7(sorted, 0.975) - quantile_type7(sorted, 0.025);
    }
}

double SrbfSurrogate::predict_single_tau(const Point& y, std::size_t tau_index) const {
    if (tau_index >= taus_->size())
        throw std::out_of_range("SrbfSurrogate: tau index out of range");
    if (y.size() != dim_)
        throw std::invalid_argument("SrbfSurrogate: query point dimension mismatch");
    const double tau = (*taus_)[tau_index];
    double s = 0.0;
    for (Eigen::Index j = 0; j < centers_.rows(); ++j) {
        const double d = euclid(center_points_[static_cast<std::size_t>(j)], y);
        s += weights_(static_cast<Eigen::Index>(tau_index), j) * (d == 0.0 ? 0.0 : std::exp(tau * std::log(d)));
    }
    return s;
}

std::vector<double> SrbfSurrogate::predict_many(const std::vector<Point>& ys) const {
    const auto K = centers_.rows();
    const auto theta = static_cast<Eigen::Index>(taus_->size());
    const Eigen::Map<const Eigen::VectorXd> tv(taus_->data(), theta);
    Eigen::VectorXd logr(K);
    Eigen::MatrixXd E(theta, K);
    std::vector<double> out;
    out.reserve(ys.size());
    for (const auto& y : ys) {
        if (y.size() != dim_)
            throw std::invalid_argument("SrbfSurrogate: query point dimension mismatch");
        for (Eigen::Index j = 0; j < K; ++j)
            logr(j) = std::log(euclid(center_points_[static_cast<std::size_t>(j)], y));
        E = (tv * logr.transpose()).array().exp();
        out.push_back((weights_.array() * E.array()).sum() / static_cast<double>(theta));
    }
    return out;
}

double loocv_rmse(const std::vector<Point>& inputs, const std::vector<double>& values,
                  std::size_t k, const std::shared_ptr<const std::vector<double>>& taus,
                  const SrbfOptions& options) {
    if (inputs.empty() || inputs.size() != values.size())
        throw std::invalid_argument("loocv_rmse: inputs and values must match and be non-empty");
    if (!taus || taus->empty())
        throw std::invalid_argument("loocv_rmse: need kernel exponent samples");
    const std::size_t J = inputs.size();
    if (k == 0 || k > J) throw std::invalid_argument("loocv_rmse: need 1 <= k <= sample count");

    const std::vector<Point> centers =
        (k == J) ? inputs : kmeans_centers(inputs, k, options.kmeans_max_iterations, options.kmeans_tolerance);
    const Eigen::MatrixXd L = log_distance_matrix(inputs, centers);
    const Eigen::Map<const Eigen::VectorXd> b(values.data(), static_cast<Eigen::Index>(J));
    const auto Ke = static_cast<Eigen::Index>(k);
    const auto Je = static_cast<Eigen::Index>(J);

    // Signed leave-one-out residuals, averaged over the exponent samples.
    // Least-squares fits use the closed form r_i / (1 - h_ii) with fixed
    // centers; square systems use w_i / (A^-1)_ii.
    Eigen::VectorXd mean_loo = Eigen::VectorXd::Zero(Je);
    for (double tau : *taus) {
        const Eigen::MatrixXd A = (tau * L.array()).exp();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < Ke)
            throw StructureError("loocv_rmse: kernel matrix is rank deficient (" +
                                 std::to_string(qr.rank()) + " < " + std::to_string(Ke) + ")");
        Eigen::VectorXd e(Je);
        if (k < J) {
            const Eigen::VectorXd w = qr.solve(b);
            const Eigen::VectorXd r = b - A * w;
            const Eigen::MatrixXd thin_q =
                qr.householderQ() * Eigen::MatrixXd::Identity(Je, Ke);
            for (Eigen::Index i = 0; i < Je; ++i)
                e(i) = r(i) / (1.0 - thin_q.row(i).squaredNorm());
        } else {
            const Eigen::VectorXd w = qr.solve(b);
            const Eigen::MatrixXd inv = qr.inverse();
            for (Eigen::Index i = 0; i < Je; ++i) e(i) = w(i) / inv(i, i);
        }
        mean_loo += e;
    }
    mean_loo /= static_cast<double>(taus->size());
    return std::sqrt(mean_loo.squaredNorm() / static_cast<double>(J));
}

std::size_t loocv_select_k(const std::vector<Point>& inputs, const std::vector<double>& values,
                           std::size_t k_lo, std::size_t k_hi,
                           const std::shared_ptr<const std::vector<double>>& taus,
                           const SrbfOptions& options) {
    const std::size_t J = inputs.size();
    if (J == 0) throw std::invalid_argument("loocv_select_k: no samples");
    std::size_t lo = std::clamp<std::size_t>(k_lo, 1, J);
    std::size_t hi = std::clamp<std::size_t>(k_hi, lo, J);
    if (lo == hi) return lo; // forced choice, skip the cross-validation

    std::size_t best_k = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = lo; k <= hi; ++k) {
        double rmse;
        try {
            rmse = loocv_rmse(inputs, values, k, taus, options);
        } catch (const StructureError&) {
            continue; // singular candidate, never selectable
        }
        any = true;
        if (rmse < best_rmse) {
            best_rmse = rmse;
            best_k = k;
        }
    }
    if (!any || best_k == 0)
        throw StructureError("loocv_select_k: every candidate center count gave a singular system");
    return best_k;
}

bool TrainingSet::contains(const Point& u) const {
    if (u.size() != dim_) throw std::invalid_argument("TrainingSet: point dimension mismatch");
    for (const auto& p : inputs_)
        if (same_point_bits(p, u)) return true;
    return false;
}

bool TrainingSet::add(const Point& u, double value) {
    if (contains(u)) return false;
    inputs_.push_back(u);
    values_.push_back(value);
    return true;
}

MfSrbfSurrogate::MfSrbfSurrogate(std::vector<SrbfSurrogate> layers, std::size_t dim)
    : layers_(std::move(layers)), dim_(dim) {
    if (layers_.empty()) throw std::invalid_argument("MfSrbfSurrogate: no layers");
    for (const auto& l : layers_)
        if (l.input_dim() != dim_)
            throw std::invalid_argument("MfSrbfSurrogate: layer dimension mismatch");
}

double MfSrbfSurrogate::predict(const Point& y) const { return predict_partial(y, layers_.size()); }

double MfSrbfSurrogate::predict_partial(const Point& y, std::size_t m) const {
    if (m > layers_.size()) throw std::out_of_range("MfSrbfSurrogate: partial depth out of range");
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += layers_[i].predict(y);
    return s;
}

std::vector<double> MfSrbfSurrogate::predict_many(const std::vector<Point>& ys) const {
    std::vector<double> out(ys.size(), 0.0);
    for (const auto& layer : layers_) {
        const std::vector<double> part = layer.predict_many(ys);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
    }
    return out;
}

std::vector<double> MfSrbfSurrogate::uncertainty_components(const Point& y) const {
    std::vector<double> out;
    out.reserve(layers_.size());
    for (const auto& layer : layers_) out.push_back(layer.uncertainty(y));
    return out;
}

double MfSrbfSurrogate::uncertainty(const Point& y) const {
    double s = 0.0;
    for (const auto& layer : layers_) {
        const double u = layer.uncertainty(y);
        s += u * u;
    }
    return std::sqrt(s);
}

MfSrbfSurrogate build_mf_surrogate(const std::vector<TrainingSet>& sets,
                                   const std::shared_ptr<const std::vector<double>>& taus,
                                   const SrbfOptions& options,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& loocv_windows,
                                   std::vector<std::size_t>* k_star_out) {
    if (sets.empty()) throw std::invalid_argument("build_mf_surrogate: no training sets");
    const std::size_t dim = sets[0].dim();
    for (const auto& s : sets) {
        if (s.dim() != dim) throw std::invalid_argument("build_mf_surrogate: training set dimension mismatch");
        if (s.size() == 0) throw std::invalid_argument("build_mf_surrogate: empty training set");
    }
    if (options.mode == SrbfMode::loocv && loocv_windows.size() != sets.size())
        throw std::invalid_argument("build_mf_surrogate: need one center-count window per level");
    if (k_star_out) k_star_out->clear();

    std::vector<SrbfSurrogate> layers;
    layers.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto& inputs = sets[i].inputs();
        std::vector<double> vals = sets[i].values();
        // Layers beyond the first model the gap between the level data and
        // everything the stack explains so far.
        for (const auto& layer : layers) {
            const std::vector<double> part = layer.predict_many(inputs);
            for (std::size_t j = 0; j < vals.size(); ++j) vals[j] -= part[j];
        }
        const std::size_t J = inputs.size();
        std::size_t k = J;
        if (options.mode == SrbfMode::loocv)
            k = loocv_select_k(inputs, vals, loocv_windows[i].first, loocv_windows[i].second, taus, options);
        std::vector<Point> centers =
            (k == J) ? inputs : kmeans_centers(inputs, k, options.kmeans_max_iterations, options.kmeans_tolerance);
        layers.emplace_back(inputs, std::move(vals), std::move(centers), taus, options.normal_equations);
        if (k_star_out) k_star_out->push_back(k);
    }
    return MfSrbfSurrogate(std::move(layers), dim);
}

std::size_t select_fidelity(const std::vector<double>& uncertainty_components,
                            const std::vector<double>& gammas) {
    if (uncertainty_components.empty() || uncertainty_components.size() != gammas.size())
        throw std::invalid_argument("select_fidelity: components and costs must match and be non-empty");
    std::size_t best = 0;
    double best_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < uncertainty_components.size(); ++l) {
        if (!(gammas[l] > 0.0)) throw std::invalid_argument("select_fidelity: costs must be positive");
        const double ratio = uncertainty_components[l] / gammas[l];
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = l;
        }
    }
    return best + 1;
}

InfillResult find_infill_point(const MfSrbfSurrogate& surrogate, const PsoOptions& pso) {
    const ParamDomain cube = ParamDomain::unit_cube(surrogate.input_dim());
    const PsoResult r = pso_maximize([&](const Point& u) { return surrogate.uncertainty(u); }, cube, pso);
    return InfillResult{r.best, r.value, r.degenerate};
}

namespace {

// 2N+1 starting design on the unit cube: center plus the low/high face
// centers of every axis.
std::vector<Point> initial_design(std::size_t dim) {
    std::vector<Point> pts;
    pts.reserve(2 * dim + 1);
    pts.emplace_back(dim, 0.5);
    for (std::size_t n = 0; n < dim; ++n) {
        Point lo(dim, 0.5), hi(dim, 0.5);
        lo[n] = 0.0;
        hi[n] = 1.0;
        pts.push_back(std::move(lo));
        pts.push_back(std::move(hi));
    }
    return pts;
}

} // namespace

SrbfRunResult srbf_adaptive_run(std::shared_ptr<FidelityModel> model, const SrbfRunOptions& options) {
    if (!model) throw std::invalid_argument("srbf_adaptive_run: null model");
    const ParamDomain& domain = model->domain();
    const std::size_t dim = domain.dim();
    const int levels = model->levels();

    const auto taus = sample_tau(derive_seed(options.seed, kTauStreamSalt), options.srbf);
    std::vector<double> gammas;
    gammas.reserve(static_cast<std::size_t>(levels));
    for (int l = 1; l <= levels; ++l) gammas.push_back(model->cost(l));

    const auto to_physical = [&](const Point& u) {
        Point y(dim);
        for (std::size_t n = 0; n < dim; ++n) y[n] = domain.from_unit(n, u[n]);
        return y;
    };

    SrbfRunResult result;
    result.training.assign(static_cast<std::size_t>(levels), TrainingSet(dim));
    for (int l = 1; l <= levels; ++l)
        for (const auto& u : initial_design(dim))
            result.training[static_cast<std::size_t>(l - 1)].add(u, model->evaluate(l, to_physical(u)));

    // First build searches the center count over the whole initial design;
    // later builds only consider keeping or growing the previous choice.
    std::vector<std::pair<std::size_t, std::size_t>> windows;
    for (const auto& s : result.training) windows.emplace_back(1, s.size());
    MfSrbfSurrogate stack = build_mf_surrogate(result.training, taus, options.srbf, windows, &result.k_star);

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    const auto make_record = [&](int iteration) {
        ConvergenceRecord rec;
        rec.iteration = iteration;
        rec.cumulative_cost = model->total_cost();
        rec.moments = MomentSet{nan, nan, nan, nan};
        rec.moment_errors = {nan, nan, nan, nan};
        rec.err_l2 = nan;
        rec.err_linf = nan;
        rec.ks = nan;
        if (options.metric_hook) {
            SrbfIterationState state;
            state.iteration = iteration;
            state.cumulative_cost = rec.cumulative_cost;
            state.surrogate = &stack;
            state.training = &result.training;
            options.metric_hook(rec, state);
        }
        result.records.push_back(rec);
    };
    make_record(0);

    const std::size_t batch_size = std::max<std::size_t>(1, options.guessing_steps);
    int completed = 0;
    while (true) {
        if (model->total_cost() > options.stop.max_cost) break;
        if (completed >= options.stop.max_iterations) break;

        // Pick a batch of infill points. All but the first see provisional
        // stacks in which the earlier picks carry surrogate-predicted values,
        // so one batch spreads out without intermediate model runs.
        const std::vector<TrainingSet> saved = result.training;
        std::vector<std::pair<int, Point>> batch;
        for (std::size_t g = 0; g < batch_size; ++g) {
            const ParamDomain cube = ParamDomain::unit_cube(dim);
            const PsoResult pso =
                pso_maximize([&](const Point& u) { return stack.uncertainty(u); }, cube, options.pso);

            int chosen_level = 0;
            Point chosen;
            for (const auto& [value, cand] : pso.ranked_bests) {
                (void)value;
                const int lvl = static_cast<int>(
                    select_fidelity(stack.uncertainty_components(cand), gammas));
                if (!result.training[static_cast<std::size_t>(lvl - 1)].contains(cand)) {
                    chosen_level = lvl;
                    chosen = cand;
                    break;
                }
            }
            if (chosen_level == 0) break; // every candidate already sampled at its level

            batch.emplace_back(chosen_level, chosen);
            const double guess = stack.predict_partial(chosen, static_cast<std::size_t>(chosen_level));
            result.training[static_cast<std::size_t>(chosen_level - 1)].add(chosen, guess);
            if (g + 1 < batch_size) {
                std::vector<std::pair<std::size_t, std::size_t>> fixed;
                for (std::size_t l = 0; l < result.k_star.size(); ++l)
                    fixed.emplace_back(result.k_star[l], result.k_star[l]);
                stack = build_mf_surrogate(result.training, taus, options.srbf, fixed, nullptr);
            }
        }
        result.training = saved;
        if (batch.empty()) break;

        for (const auto& [lvl, u] : batch)
            result.training[static_cast<std::size_t>(lvl - 1)].add(u, model->evaluate(lvl, to_physical(u)));

        windows.clear();
        for (std::size_t l = 0; l < result.training.size(); ++l)
            windows.emplace_back(result.k_star[l], result.k_star[l] + 1);
        stack = build_mf_surrogate(result.training, taus, options.srbf, windows, &result.k_star);

        ++completed;
        make_record(completed);
    }

    result.surrogate = std::make_shared<MfSrbfSurrogate>(std::move(stack));
    return result;
}

} // namespace mfuq
