#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mfuq/domain.hpp"

namespace mfuq {

enum class NoiseKind { none, multiplicative_uniform, additive_gaussian };

// Synthetic noise frozen per (seed, level, evaluation point): repeated calls
// see the same perturbed value, so a noisy model is still a fixed function.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    std::vector<double> amplitudes; // per level, size = levels (missing -> 0)
    std::uint64_t seed = 0;
};

double apply_noise(double raw, int level, std::uint64_t point_hash, const NoiseSpec& noise);

// A hierarchy of model fidelities G_1..G_M over a common parameter domain.
// Every distinct (level, point) pair is evaluated exactly once; repeats are
// served from the cache and do not add cost. The cache key is the exact bit
// pattern of the coordinates, so "same point" means bitwise identical.
class FidelityModel {
public:
    using Evaluator = std::function<double(int level, const Point& y)>;

    FidelityModel(ParamDomain domain, int levels, Evaluator evaluator,
                  double cost_base = 8.0, NoiseSpec noise = NoiseSpec{});

    const ParamDomain& domain() const { return domain_; }
    int levels() const { return levels_; }
    double cost_base() const { return cost_base_; }

    // Cost of one evaluation at `level`: cost_base^(level-1).
    double cost(int level) const;

    double evaluate(int level, const Point& y);

    double total_cost() const;
    std::uint64_t eval_count(int level) const;
    std::uint64_t distinct_evaluations() const;

private:
    struct Key {
        int level;
        std::vector<std::uint64_t> bits;
        bool operator==(const Key& o) const { return level == o.level && bits == o.bits; }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };

    void check_level(int level) const;

    ParamDomain domain_;
    int levels_;
    Evaluator evaluator_;
    double cost_base_;
    NoiseSpec noise_;

    mutable std::mutex mutex_;
    std::unordered_map<Key, double, KeyHash> cache_;
    std::vector<std::uint64_t> counts_;
    double total_cost_ = 0.0;
};

// Truncated-series argument of the analytical benchmark: the degree-alpha
// Taylor polynomial of exp(s)/5 about s = 0.
double taylor_argument(int alpha, double s);

// Benchmark fidelity G_alpha(y) = sin(taylor_argument(alpha, sum_n y_n)).
double taylor_fidelity(int alpha, const Point& y);

// Analytical benchmark on [0,1]^dims with `levels` fidelities. The exact
// function sin(exp(sum y_n)/5) is the levels -> infinity limit.
std::shared_ptr<FidelityModel> make_taylor_benchmark(std::size_t dims = 2, int levels = 6,
                                                     double cost_base = 8.0,
                                                     NoiseSpec noise = NoiseSpec{});

} // namespace mfuq
