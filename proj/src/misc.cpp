#include "mfuq/misc.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfuq/errors.hpp"
#include "mfuq/rng.hpp"

namespace mfuq {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTestSetSalt = 0x6d697363u; // testing-set stream id

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double pow_small(double v, int r) {
    switch (r) {
        case 1: return v;
        case 2: return v * v;
        case 3: return v * v * v;
        case 4: {
            const double v2 = v * v;
            return v2 * v2;
        }
        default: return std::pow(v, r);
    }
}

// Values of G_alpha on the tensor grid described by beta, flat row-major with
// the first dimension slowest.
void build_tensor_values(FidelityModel& model, UnivariateLevelCache& levels, int alpha,
                         const std::vector<int>& beta, std::vector<int>& shape,
                         std::vector<double>& values) {
    const std::size_t dims = beta.size();
    std::vector<const UnivariateLevel*> lv(dims);
    shape.resize(dims);
    std::size_t total = 1;
    for (std::size_t n = 0; n < dims; ++n) {
        lv[n] = &levels.get(n, beta[n]);
        shape[n] = static_cast<int>(lv[n]->nodes.size());
        total *= static_cast<std::size_t>(shape[n]);
    }
    values.resize(total);
    std::vector<std::size_t> j(dims, 0);
    Point y(dims);
    for (std::size_t n = 0; n < dims; ++n) y[n] = lv[n]->nodes[0];
    std::size_t flat = 0;
    while (true) {
        values[flat] = model.evaluate(alpha, y);
        int n = static_cast<int>(dims) - 1;
        while (n >= 0) {
            std::size_t un = static_cast<std::size_t>(n);
            if (++j[un] < static_cast<std::size_t>(shape[un])) {
                y[un] = lv[un]->nodes[j[un]];
                break;
            }
            j[un] = 0;
            y[un] = lv[un]->nodes[0];
            --n;
        }
        if (n < 0) break;
        ++flat;
    }
}

double eval_tensor_point(UnivariateLevelCache& levels, const std::vector<int>& beta,
                         const std::vector<int>& shape, const std::vector<double>& values,
                         const Point& y) {
    const std::size_t dims = beta.size();
    std::vector<std::vector<double>> basis(dims);
    for (std::size_t n = 0; n < dims; ++n) {
        basis[n].resize(static_cast<std::size_t>(shape[n]));
        barycentric_basis(levels.get(n, beta[n]), y[n], basis[n].data());
    }
    if (dims == 1) {
        double acc = 0.0;
        for (std::size_t j = 0; j < basis[0].size(); ++j) acc += basis[0][j] * values[j];
        return acc;
    }
    if (dims == 2) {
        double acc = 0.0;
        const std::size_t m1 = basis[1].size();
        for (std::size_t j0 = 0; j0 < basis[0].size(); ++j0) {
            const double* row = values.data() + j0 * m1;
            double inner = 0.0;
            for (std::size_t j1 = 0; j1 < m1; ++j1) inner += basis[1][j1] * row[j1];
            acc += basis[0][j0] * inner;
        }
        return acc;
    }
    double acc = 0.0;
    std::vector<std::size_t> j(dims, 0);
    std::size_t flat = 0;
    while (true) {
        double w = 1.0;
        for (std::size_t n = 0; n < dims; ++n) w *= basis[n][j[n]];
        acc += w * values[flat];
        int n = static_cast<int>(dims) - 1;
        while (n >= 0 && ++j[static_cast<std::size_t>(n)] == static_cast<std::size_t>(shape[static_cast<std::size_t>(n)])) {
            j[static_cast<std::size_t>(n)] = 0;
            --n;
        }
        if (n < 0) break;
        ++flat;
    }
    return acc;
}

double quad_tensor(UnivariateLevelCache& levels, const std::vector<int>& beta,
                   const std::vector<int>& shape, const std::vector<double>& values, int power) {
    const std::size_t dims = beta.size();
    std::vector<const std::vector<double>*> q(dims);
    for (std::size_t n = 0; n < dims; ++n) q[n] = &levels.get(n, beta[n]).quad;
    if (dims == 2) {
        double acc = 0.0;
        const std::size_t m1 = static_cast<std::size_t>(shape[1]);
        for (std::size_t j0 = 0; j0 < static_cast<std::size_t>(shape[0]); ++j0) {
            const double* row = values.data() + j0 * m1;
            double inner = 0.0;
            for (std::size_t j1 = 0; j1 < m1; ++j1) inner += (*q[1])[j1] * pow_small(row[j1], power);
            acc += (*q[0])[j0] * inner;
        }
        return acc;
    }
    double acc = 0.0;
    std::vector<std::size_t> j(dims, 0);
    std::size_t flat = 0;
    while (true) {
        double w = 1.0;
        for (std::size_t n = 0; n < dims; ++n) w *= (*q[n])[j[n]];
        acc += w * pow_small(values[flat], power);
        int n = static_cast<int>(dims) - 1;
        while (n >= 0 && ++j[static_cast<std::size_t>(n)] == static_cast<std::size_t>(shape[static_cast<std::size_t>(n)])) {
            j[static_cast<std::size_t>(n)] = 0;
            --n;
        }
        if (n < 0) break;
        ++flat;
    }
    return acc;
}

} // namespace

// ---------------------------------------------------------------------------
// BatchBasis

struct BatchBasis::Impl {
    std::shared_ptr<UnivariateLevelCache> levels;
    std::vector<Point> pts;
    std::map<std::pair<std::size_t, int>, Eigen::MatrixXd> cache;

    const Eigen::MatrixXd& get(std::size_t dim, int level) {
        auto key = std::make_pair(dim, level);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const UnivariateLevel& lvl = levels->get(dim, level);
        const std::size_t m = lvl.nodes.size();
        Eigen::MatrixXd B(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(m));
        std::vector<double> row(m);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            barycentric_basis(lvl, pts[p][dim], row.data());
            for (std::size_t k = 0; k < m; ++k)
                B(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = row[k];
        }
        return cache.emplace(std::move(key), std::move(B)).first->second;
    }
};

const std::vector<Point>& BatchBasis::points() const { return impl_->pts; }
std::size_t BatchBasis::size() const { return impl_->pts.size(); }

// ---------------------------------------------------------------------------
// TensorSurrogate

TensorSurrogate::TensorSurrogate(FidelityModel& model, int alpha, std::vector<int> beta)
    : beta_(std::move(beta)),
      levels_(std::make_shared<UnivariateLevelCache>(model.domain())),
      domain_(model.domain()) {
    if (beta_.size() != domain_.dim())
        throw std::invalid_argument("TensorSurrogate: beta dimension must match the domain");
    if (alpha < 0) throw std::invalid_argument("TensorSurrogate: negative fidelity index");
    for (int b : beta_)
        if (b < 0) throw std::invalid_argument("TensorSurrogate: negative grid level");
    zero_ = alpha == 0 || std::any_of(beta_.begin(), beta_.end(), [](int b) { return b == 0; });
    if (zero_) return;
    build_tensor_values(model, *levels_, alpha, beta_, shape_, values_);
}

double TensorSurrogate::evaluate(const Point& y) const {
    if (zero_) return 0.0;
    domain_.require_inside(y);
    return eval_tensor_point(*levels_, beta_, shape_, values_, y);
}

double TensorSurrogate::quadrature(int power) const {
    if (power < 1) throw std::invalid_argument("TensorSurrogate: power must be >= 1");
    if (zero_) return 0.0;
    return quad_tensor(*levels_, beta_, shape_, values_, power);
}

// ---------------------------------------------------------------------------
// MiscApproximation

MiscApproximation::MiscApproximation(std::shared_ptr<FidelityModel> model,
                                     const MultiIndexSet& index_set)
    : model_(std::move(model)) {
    if (!model_) throw std::invalid_argument("MiscApproximation: null model");
    levels_ = std::make_shared<UnivariateLevelCache>(model_->domain());
    if (index_set.empty()) throw StructureError("MiscApproximation: empty index set");
    if (index_set.dim() != model_->domain().dim() + 1)
        throw std::invalid_argument("MiscApproximation: index dimension must be 1 + parameter dimension");
    if (!index_set.is_downward_closed())
        throw StructureError("MiscApproximation: index set is not downward closed");
    for (const auto& idx : index_set) {
        if (idx[0] > model_->levels())
            throw std::out_of_range("MiscApproximation: fidelity index exceeds model levels");
        set_.insert(idx);
        tensor_for(idx[0], std::vector<int>(idx.begin() + 1, idx.end()));
    }
    refresh_coefficients();
}

const MiscApproximation::Tensor& MiscApproximation::tensor_for(int alpha,
                                                               const std::vector<int>& beta) {
    auto key = std::make_pair(alpha, beta);
    auto it = tensors_.find(key);
    if (it != tensors_.end()) return it->second;
    Tensor t;
    build_tensor_values(*model_, *levels_, alpha, beta, t.shape, t.values);
    return tensors_.emplace(std::move(key), std::move(t)).first->second;
}

void MiscApproximation::refresh_coefficients() { coeff_ = combination_coefficients(set_); }

double MiscApproximation::evaluate(const Point& y) const {
    model_->domain().require_inside(y);
    double acc = 0.0;
    for (const auto& [idx, c] : coeff_) {
        if (c == 0) continue;
        const std::vector<int> beta(idx.begin() + 1, idx.end());
        const Tensor& t = tensors_.at(std::make_pair(idx[0], beta));
        acc += c * eval_tensor_point(*levels_, beta, t.shape, t.values, y);
    }
    return acc;
}

BatchBasis MiscApproximation::make_batch_basis(std::vector<Point> pts) const {
    for (const auto& y : pts) model_->domain().require_inside(y);
    BatchBasis basis;
    basis.impl_ = std::make_shared<BatchBasis::Impl>();
    basis.impl_->levels = levels_;
    basis.impl_->pts = std::move(pts);
    return basis;
}

std::vector<double> MiscApproximation::evaluate_many(const BatchBasis& basis) const {
    const std::size_t dims = model_->domain().dim();
    BatchBasis::Impl& bb = *basis.impl_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bb.pts.size()));
    for (const auto& [idx, c] : coeff_) {
        if (c == 0) continue;
        const std::vector<int> beta(idx.begin() + 1, idx.end());
        const Tensor& t = tensors_.at(std::make_pair(idx[0], beta));
        if (dims == 1) {
            Eigen::Map<const Eigen::VectorXd> f(t.values.data(),
                                                static_cast<Eigen::Index>(t.values.size()));
            out += static_cast<double>(c) * (bb.get(0, beta[0]) * f);
        } else if (dims == 2) {
            Eigen::Map<const RowMajor> F(t.values.data(), t.shape[0], t.shape[1]);
            Eigen::MatrixXd C = bb.get(0, beta[0]) * F;
            out += static_cast<double>(c) * (C.cwiseProduct(bb.get(1, beta[1]))).rowwise().sum();
        } else {
            for (std::size_t p = 0; p < bb.pts.size(); ++p)
                out(static_cast<Eigen::Index>(p)) +=
                    c * eval_tensor_point(*levels_, beta, t.shape, t.values, bb.pts[p]);
        }
    }
    return std::vector<double>(out.data(), out.data() + out.size());
}

std::vector<double> MiscApproximation::evaluate_many(const std::vector<Point>& pts) const {
    return evaluate_many(make_batch_basis(pts));
}

double MiscApproximation::quadrature(int power) const {
    if (power < 1) throw std::invalid_argument("MiscApproximation: power must be >= 1");
    double acc = 0.0;
    for (const auto& [idx, c] : coeff_) {
        if (c == 0) continue;
        const std::vector<int> beta(idx.begin() + 1, idx.end());
        const Tensor& t = tensors_.at(std::make_pair(idx[0], beta));
        acc += c * quad_tensor(*levels_, beta, t.shape, t.values, power);
    }
    return acc;
}

RawMoments MiscApproximation::raw_moments() const {
    RawMoments rm;
    for (int r = 1; r <= 4; ++r) rm.raw[static_cast<std::size_t>(r - 1)] = quadrature(r);
    return rm;
}

void MiscApproximation::check_candidate(const MultiIndex& idx) const {
    if (idx.size() != model_->domain().dim() + 1)
        throw std::invalid_argument("candidate index dimension mismatch");
    for (int v : idx)
        if (v < 1) throw std::invalid_argument("candidate index entries must be >= 1");
    if (idx[0] > model_->levels())
        throw std::out_of_range("candidate fidelity index exceeds model levels");
    if (set_.contains(idx)) throw std::invalid_argument("candidate index already in the set");
    MultiIndex back = idx;
    for (std::size_t k = 0; k < back.size(); ++k) {
        if (back[k] == 1) continue;
        back[k] -= 1;
        if (!set_.contains(back))
            throw StructureError("adding the candidate would break downward closedness");
        back[k] += 1;
    }
}

double MiscApproximation::work_contribution(const MultiIndex& idx) const {
    if (idx.size() != model_->domain().dim() + 1)
        throw std::invalid_argument("work_contribution: index dimension mismatch");
    for (int v : idx)
        if (v < 1) throw std::invalid_argument("work_contribution: index entries must be >= 1");
    double pts = 1.0;
    for (std::size_t n = 1; n < idx.size(); ++n)
        pts *= static_cast<double>(level_to_knots(idx[n]) - level_to_knots(idx[n] - 1));
    return model_->cost(idx[0]) * pts;
}

std::vector<double> MiscApproximation::tensor_eval_many(const Tensor& t, const std::vector<int>& beta,
                                                        const BatchBasis& basis,
                                                        const std::vector<double>* minus_values) const {
    const std::size_t dims = beta.size();
    BatchBasis::Impl& bb = *basis.impl_;
    if (dims == 2) {
        Eigen::Map<const RowMajor> Fhi(t.values.data(), t.shape[0], t.shape[1]);
        Eigen::MatrixXd C;
        if (minus_values) {
            Eigen::Map<const RowMajor> Flo(minus_values->data(), t.shape[0], t.shape[1]);
            C = bb.get(0, beta[0]) * (Fhi - Flo);
        } else {
            C = bb.get(0, beta[0]) * Fhi;
        }
        Eigen::VectorXd out = (C.cwiseProduct(bb.get(1, beta[1]))).rowwise().sum();
        return std::vector<double>(out.data(), out.data() + out.size());
    }
    if (dims == 1) {
        Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(t.values.data(),
                                                              static_cast<Eigen::Index>(t.values.size()));
        if (minus_values)
            f -= Eigen::Map<const Eigen::VectorXd>(minus_values->data(),
                                                   static_cast<Eigen::Index>(minus_values->size()));
        Eigen::VectorXd out = bb.get(0, beta[0]) * f;
        return std::vector<double>(out.data(), out.data() + out.size());
    }
    std::vector<double> diff;
    const std::vector<double>* vals = &t.values;
    if (minus_values) {
        diff.resize(t.values.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = t.values[i] - (*minus_values)[i];
        vals = &diff;
    }
    std::vector<double> result(bb.pts.size());
    for (std::size_t p = 0; p < bb.pts.size(); ++p)
        result[p] = eval_tensor_point(*levels_, beta, t.shape, *vals, bb.pts[p]);
    return result;
}

std::vector<double> MiscApproximation::detail_values(const MultiIndex& idx, const BatchBasis& basis) {
    check_candidate(idx);
    const int alpha = idx[0];
    const std::vector<int> beta(idx.begin() + 1, idx.end());
    const std::size_t dims = beta.size();
    std::vector<double> acc(basis.size(), 0.0);
    for (unsigned mask = 0; mask < (1u << dims); ++mask) {
        std::vector<int> corner = beta;
        int ones = 0;
        bool degenerate = false;
        for (std::size_t n = 0; n < dims; ++n)
            if (mask & (1u << n)) {
                corner[n] -= 1;
                ++ones;
                if (corner[n] == 0) degenerate = true;
            }
        if (degenerate) continue; // zero operator
        const double sign = (ones % 2 == 0) ? 1.0 : -1.0;
        const Tensor& hi = tensor_for(alpha, corner);
        const std::vector<double>* lo = nullptr;
        if (alpha > 1) lo = &tensor_for(alpha - 1, corner).values;
        std::vector<double> term = tensor_eval_many(hi, corner, basis, lo);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += sign * term[p];
    }
    return acc;
}

std::vector<double> MiscApproximation::detail_values(const MultiIndex& idx,
                                                     const std::vector<Point>& pts) {
    return detail_values(idx, make_batch_basis(pts));
}

std::array<double, 4> MiscApproximation::detail_raw_quadrature(const MultiIndex& idx) {
    check_candidate(idx);
    const int alpha = idx[0];
    const std::vector<int> beta(idx.begin() + 1, idx.end());
    const std::size_t dims = beta.size();
    std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
    for (unsigned mask = 0; mask < (1u << dims); ++mask) {
        std::vector<int> corner = beta;
        int ones = 0;
        bool degenerate = false;
        for (std::size_t n = 0; n < dims; ++n)
            if (mask & (1u << n)) {
                corner[n] -= 1;
                ++ones;
                if (corner[n] == 0) degenerate = true;
            }
        if (degenerate) continue;
        const double sign = (ones % 2 == 0) ? 1.0 : -1.0;
        const Tensor& hi = tensor_for(alpha, corner);
        for (int r = 1; r <= 4; ++r)
            acc[static_cast<std::size_t>(r - 1)] +=
                sign * quad_tensor(*levels_, corner, hi.shape, hi.values, r);
        if (alpha > 1) {
            const Tensor& lo = tensor_for(alpha - 1, corner);
            for (int r = 1; r <= 4; ++r)
                acc[static_cast<std::size_t>(r - 1)] -=
                    sign * quad_tensor(*levels_, corner, lo.shape, lo.values, r);
        }
    }
    return acc;
}

double MiscApproximation::error_contribution_quadrature(const MultiIndex& idx) {
    return std::abs(detail_raw_quadrature(idx)[0]);
}

double MiscApproximation::error_contribution_surrogate(const MultiIndex& idx,
                                                       const std::vector<Point>& pts) {
    if (pts.empty()) throw std::invalid_argument("error_contribution_surrogate: empty point set");
    std::vector<double> d = detail_values(idx, pts);
    double m = 0.0;
    for (double v : d) m = std::max(m, std::abs(v));
    return m;
}

void MiscApproximation::insert_index(const MultiIndex& idx) {
    check_candidate(idx);
    tensor_for(idx[0], std::vector<int>(idx.begin() + 1, idx.end()));
    set_.insert(idx);
    refresh_coefficients();
}

std::vector<TensorDump> MiscApproximation::dump_tensors() {
    std::vector<TensorDump> out;
    for (const auto& [idx, c] : coeff_) {
        if (c == 0) continue;
        const Tensor& t = tensor_for(idx[0], std::vector<int>(idx.begin() + 1, idx.end()));
        TensorDump d;
        d.index = idx;
        d.coefficient = c;
        d.shape = t.shape;
        d.values = t.values;
        out.push_back(std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adaptive index-set construction

MiscRunResult misc_adapt(std::shared_ptr<FidelityModel> model, const AdaptOptions& options) {
    if (!model) throw std::invalid_argument("misc_adapt: null model");
    const std::size_t nparams = model->domain().dim();
    const MultiIndex root(nparams + 1, 1);
    MultiIndexSet init;
    init.insert(root);

    MiscRunResult result;
    result.approx = std::make_shared<MiscApproximation>(model, init);
    MiscApproximation& approx = *result.approx;
    MultiIndexSet lambda;
    lambda.insert(root);

    const bool need_test = options.profit == ProfitKind::surrogate || options.track_test_values;
    BatchBasis basis;
    std::vector<double> test_values;
    if (need_test) {
        basis = approx.make_batch_basis(model->domain().sample_many(
            derive_seed(options.seed, kTestSetSalt), options.test_point_count));
        test_values = approx.evaluate_many(basis);
    }
    RawMoments running = approx.raw_moments();

    auto make_record = [&](int iteration) {
        ConvergenceRecord rec;
        rec.iteration = iteration;
        rec.cumulative_cost = model->total_cost();
        rec.moments = standardize(running);
        rec.moment_errors = {kNaN, kNaN, kNaN, kNaN};
        rec.err_l2 = kNaN;
        rec.err_linf = kNaN;
        rec.ks = kNaN;
        if (options.metric_hook) {
            MiscIterationState state;
            state.iteration = iteration;
            state.cumulative_cost = rec.cumulative_cost;
            state.approx = &approx;
            state.test_points = need_test ? &basis.points() : nullptr;
            state.test_values = need_test ? &test_values : nullptr;
            state.raw_moments = running;
            options.metric_hook(rec, state);
        }
        result.records.push_back(rec);
    };

    make_record(0);

    std::map<MultiIndex, CandidateInfo> live;
    int iteration = 1;
    while (true) {
        if (model->total_cost() > options.stop.max_cost) break;
        if (iteration > options.stop.max_iterations) break;

        for (const auto& idx : lambda.reduced_margin()) {
            if (approx.index_set().contains(idx)) continue;
            if (idx[0] > model->levels()) continue;
            if (*std::max_element(idx.begin(), idx.end()) > options.stop.max_level) continue;

            CandidateInfo info;
            const std::array<double, 4> rawd = approx.detail_raw_quadrature(idx);
            if (need_test) {
                std::vector<double> dvals = approx.detail_values(idx, basis);
                double sup = 0.0;
                for (std::size_t p = 0; p < dvals.size(); ++p) {
                    test_values[p] += dvals[p];
                    sup = std::max(sup, std::abs(dvals[p]));
                }
                info.error = options.profit == ProfitKind::surrogate ? sup : std::abs(rawd[0]);
            } else {
                info.error = std::abs(rawd[0]);
            }
            for (std::size_t r = 0; r < 4; ++r) running.raw[r] += rawd[r];
            info.work = approx.work_contribution(idx);
            info.profit = info.error / info.work;
            approx.insert_index(idx);
            live.emplace(idx, info);
            result.bookkeeping.emplace(idx, info);
        }
        if (live.empty()) break;

        // Highest profit wins; map order makes the lexicographically smallest
        // index the tie-breaker.
        auto best = live.begin();
        for (auto it = std::next(live.begin()); it != live.end(); ++it)
            if (it->second.profit > best->second.profit) best = it;

        if (options.stop.min_profit > 0.0 && best->second.profit < options.stop.min_profit) {
            make_record(iteration);
            break;
        }

        lambda.insert(best->first);
        live.erase(best);

        make_record(iteration);
        ++iteration;
    }

    result.accepted = lambda;
    return result;
}

} // namespace mfuq
