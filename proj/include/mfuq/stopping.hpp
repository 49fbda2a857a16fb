#pragma once

#include <limits>

namespace mfuq {

// Shared stopping rules for the adaptive drivers. The cost budget is
// compared against the model's cumulative evaluation cost; a run stops after
// the iteration in which the accumulated cost first exceeds the budget.
struct StoppingCriteria {
    double max_cost = std::numeric_limits<double>::infinity();
    int max_iterations = std::numeric_limits<int>::max();
    double min_profit = 0.0; // 0 disables the profit-based stop
    int max_level = 30;      // safety cap on any index component
};

} // namespace mfuq
