#pragma once

#include "npmerge/permutation.hpp"
#include "npmerge/tensor.hpp"

namespace npmerge {

enum class LapSense { Minimize, Maximize };

struct LapResult {
    Permutation perm;  // perm.map[row] = assigned column
    double value = 0.0;
};

// Exact linear sum assignment on a square, finite cost matrix via
// Jonker-Volgenant shortest augmenting paths, O(n^3). Maximization is
// solved by negating the costs. When several assignments tie, the solver's
// deterministic scan order picks one.
LapResult lap_solve(const Tensor& cost, LapSense sense);

}  // namespace npmerge
