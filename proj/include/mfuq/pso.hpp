#pragma once

#include <functional>
#include <vector>

#include "mfuq/domain.hpp"

namespace mfuq {

// Fully deterministic particle-swarm maximizer: fixed starting lattice
// (domain center, corners, face centers, low-discrepancy fill), zero initial
// velocities, and no random factors in the velocity update. The same
// objective and options always reproduce the same trajectory.
struct PsoOptions {
    int particles = 0;            // 0 -> 4 * 2^dim
    int iterations = 200;
    double inertia = 0.721;
    double cognitive = 1.193;
    double social = 1.193;
    double velocity_clamp = 0.5;  // fraction of the domain width per dimension
};

struct PsoResult {
    Point best;
    double value = 0.0;
    bool degenerate = false;      // objective constant over every evaluation
    long evaluations = 0;
    // Final per-particle bests, ordered by decreasing value (ties keep the
    // particle order); useful as deterministic fallback candidates.
    std::vector<std::pair<double, Point>> ranked_bests;
};

PsoResult pso_maximize(const std::function<double(const Point&)>& objective,
                       const ParamDomain& domain, const PsoOptions& options);

} // namespace mfuq
