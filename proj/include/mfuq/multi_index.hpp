#pragma once

#include <map>
#include <set>
#include <vector>

namespace mfuq {

// Multi-index with entries >= 1. For a model with one fidelity axis and N
// stochastic dimensions the layout is [alpha, beta_1, ..., beta_N].
using MultiIndex = std::vector<int>;

bool index_leq(const MultiIndex& a, const MultiIndex& b); // componentwise <=

// Finite set of multi-indices of a common dimension, ordered
// lexicographically. Lexicographic order is also the tie-breaking order used
// by the adaptive algorithms, so iteration order is meaningful.
class MultiIndexSet {
public:
    MultiIndexSet() = default;
    explicit MultiIndexSet(std::size_t dim) : dim_(dim) {}
    MultiIndexSet(std::initializer_list<MultiIndex> indices);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return set_.size(); }
    bool empty() const { return set_.empty(); }

    bool contains(const MultiIndex& idx) const { return set_.count(idx) > 0; }
    bool insert(const MultiIndex& idx);
    bool erase(const MultiIndex& idx) { return set_.erase(idx) > 0; }

    auto begin() const { return set_.begin(); }
    auto end() const { return set_.end(); }

    bool is_downward_closed() const;

    // All forward neighbours j + e_k outside the set.
    MultiIndexSet margin() const;

    // Margin members whose backward neighbours are all inside, i.e. the
    // indices whose addition preserves downward closedness.
    MultiIndexSet reduced_margin() const;

private:
    void check_index(const MultiIndex& idx) const;

    std::size_t dim_ = 0;
    std::set<MultiIndex> set_;
};

// Combination-technique coefficients over a downward-closed set:
//   c_k = sum over e in {0,1}^dim with k + e in the set of (-1)^|e|.
// Members outside the Pareto front typically get coefficient zero.
// Throws StructureError if the set is not downward closed.
std::map<MultiIndex, int> combination_coefficients(const MultiIndexSet& lambda);

} // namespace mfuq
