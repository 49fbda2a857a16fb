#include "mfuq/multi_index.hpp"

#include <stdexcept>

#include "mfuq/errors.hpp"

namespace mfuq {

bool index_leq(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] > b[k]) return false;
    return true;
}

MultiIndexSet::MultiIndexSet(std::initializer_list<MultiIndex> indices) {
    for (const auto& idx : indices) insert(idx);
}

void MultiIndexSet::check_index(const MultiIndex& idx) const {
    if (idx.empty()) throw std::invalid_argument("multi-index must be non-empty");
    if (dim_ != 0 && idx.size() != dim_)
        throw std::invalid_argument("multi-index dimension mismatch");
    for (int v : idx)
        if (v < 1) throw std::invalid_argument("multi-index entries must be >= 1");
}

bool MultiIndexSet::insert(const MultiIndex& idx) {
    check_index(idx);
    if (dim_ == 0) dim_ = idx.size();
    return set_.insert(idx).second;
}

bool MultiIndexSet::is_downward_closed() const {
    for (const auto& idx : set_) {
        MultiIndex back = idx;
        for (std::size_t k = 0; k < back.size(); ++k) {
            if (back[k] == 1) continue;
            back[k] -= 1;
            if (!contains(back)) return false;
            back[k] += 1;
        }
    }
    return true;
}

MultiIndexSet MultiIndexSet::margin() const {
    MultiIndexSet out(dim_);
    for (const auto& idx : set_) {
        MultiIndex fwd = idx;
        for (std::size_t k = 0; k < fwd.size(); ++k) {
            fwd[k] += 1;
            if (!contains(fwd)) out.insert(fwd);
            fwd[k] -= 1;
        }
    }
    return out;
}

MultiIndexSet MultiIndexSet::reduced_margin() const {
    MultiIndexSet out(dim_);
    for (const auto& idx : margin()) {
        MultiIndex back = idx;
        bool admissible = true;
        for (std::size_t k = 0; k < back.size() && admissible; ++k) {
            if (back[k] == 1) continue;
            back[k] -= 1;
            admissible = contains(back);
            back[k] += 1;
        }
        if (admissible) out.insert(idx);
    }
    return out;
}

std::map<MultiIndex, int> combination_coefficients(const MultiIndexSet& lambda) {
    if (lambda.empty()) throw StructureError("combination_coefficients: empty index set");
    if (!lambda.is_downward_closed())
        throw StructureError("combination_coefficients: index set is not downward closed");

    const std::size_t dim = lambda.dim();
    std::map<MultiIndex, int> coeff;
    for (const auto& idx : lambda) {
        int c = 0;
        for (unsigned mask = 0; mask < (1u << dim); ++mask) {
            MultiIndex shifted = idx;
            int ones = 0;
            for (std::size_t k = 0; k < dim; ++k)
                if (mask & (1u << k)) {
                    shifted[k] += 1;
                    ++ones;
                }
            if (lambda.contains(shifted)) c += (ones % 2 == 0) ? 1 : -1;
        }
        coeff[idx] = c;
    }
    return coeff;
}

} // namespace mfuq
