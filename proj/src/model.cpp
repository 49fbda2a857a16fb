#include "mfuq/model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "mfuq/rng.hpp"

namespace mfuq {

double apply_noise(double raw, int level, std::uint64_t point_hash, const NoiseSpec& noise) {
    if (noise.kind == NoiseKind::none) return raw;
    const std::size_t idx = static_cast<std::size_t>(level - 1);
    const double amp = idx < noise.amplitudes.size() ? noise.amplitudes[idx] : 0.0;
    if (amp == 0.0) return raw;
    std::uint64_t h = hash_mix(noise.seed, static_cast<std::uint64_t>(level));
    h = hash_mix(h, point_hash);
    std::mt19937_64 gen(h);
    switch (noise.kind) {
        case NoiseKind::multiplicative_uniform:
            return raw * (1.0 + amp * (2.0 * uniform01(gen) - 1.0));
        case NoiseKind::additive_gaussian:
            return raw + amp * standard_normal(gen);
        default:
            return raw;
    }
}

FidelityModel::FidelityModel(ParamDomain domain, int levels, Evaluator evaluator,
                             double cost_base, NoiseSpec noise)
    : domain_(std::move(domain)), levels_(levels), evaluator_(std::move(evaluator)),
      cost_base_(cost_base), noise_(std::move(noise)),
      counts_(static_cast<std::size_t>(levels), 0) {
    if (levels_ < 1) throw std::invalid_argument("FidelityModel: need at least one level");
    if (!evaluator_) throw std::invalid_argument("FidelityModel: evaluator must be callable");
    if (!(cost_base_ > 0.0)) throw std::invalid_argument("FidelityModel: cost base must be positive");
}

std::size_t FidelityModel::KeyHash::operator()(const Key& k) const {
    std::uint64_t h = hash_mix(0x6d66757164ULL, static_cast<std::uint64_t>(k.level));
    for (std::uint64_t b : k.bits) h = hash_mix(h, b);
    return static_cast<std::size_t>(h);
}

void FidelityModel::check_level(int level) const {
    if (level < 1 || level > levels_)
        throw std::out_of_range("fidelity level out of range");
}

double FidelityModel::cost(int level) const {
    check_level(level);
    return std::pow(cost_base_, level - 1);
}

double FidelityModel::evaluate(int level, const Point& y) {
    check_level(level);
    domain_.require_inside(y);

    Key key;
    key.level = level;
    key.bits.reserve(y.size());
    for (double v : y) key.bits.push_back(std::bit_cast<std::uint64_t>(v));

    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }

    double value = evaluator_(level, y);
    if (noise_.kind != NoiseKind::none) {
        std::uint64_t ph = 0x706f696e74ULL;
        for (std::uint64_t b : key.bits) ph = hash_mix(ph, b);
        value = apply_noise(value, level, ph, noise_);
    }
    if (!std::isfinite(value))
        throw std::runtime_error("FidelityModel: evaluator produced a non-finite value");

    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = cache_.try_emplace(std::move(key), value);
    if (inserted) {
        // Cost is charged exactly once per distinct key, by the inserting call.
        counts_[static_cast<std::size_t>(level - 1)] += 1;
        total_cost_ += std::pow(cost_base_, level - 1);
    }
    return it->second;
}

double FidelityModel::total_cost() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return total_cost_;
}

std::uint64_t FidelityModel::eval_count(int level) const {
    check_level(level);
    std::lock_guard<std::mutex> lock(mutex_);
    return counts_[static_cast<std::size_t>(level - 1)];
}

std::uint64_t FidelityModel::distinct_evaluations() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.size();
}

double taylor_argument(int alpha, double s) {
    if (alpha < 0) throw std::invalid_argument("taylor_argument: negative order");
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= alpha; ++k) {
        term *= s / static_cast<double>(k);
        sum += term;
    }
    return 0.2 * sum;
}

double taylor_fidelity(int alpha, const Point& y) {
    double s = 0.0;
    for (double v : y) s += v;
    return std::sin(taylor_argument(alpha, s));
}

std::shared_ptr<FidelityModel> make_taylor_benchmark(std::size_t dims, int levels,
                                                     double cost_base, NoiseSpec noise) {
    return std::make_shared<FidelityModel>(
        ParamDomain::unit_cube(dims), levels,
        [](int level, const Point& y) { return taylor_fidelity(level, y); },
        cost_base, std::move(noise));
}

} // namespace mfuq
