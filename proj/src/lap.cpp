#include "npmerge/lap.hpp"

#include <cmath>
#include <limits>

#include "npmerge/errors.hpp"

namespace npmerge {

LapResult lap_solve(const Tensor& cost, LapSense sense) {
    if (cost.ndim() != 2 || cost.rows() != cost.cols())
        throw InputError("lap_solve: cost matrix must be square, got " + cost.shape_str());
    for (std::int64_t i = 0; i < cost.size(); ++i)
        if (!std::isfinite(cost[i])) throw InputError("lap_solve: cost matrix has non-finite entries");

    const std::int64_t n = cost.rows();
    const double sign = sense == LapSense::Maximize ? -1.0 : 1.0;
    const double inf = std::numeric_limits<double>::infinity();

    // Shortest augmenting path with dual potentials, 1-based with column 0
    // as the virtual start. p[j] holds the row matched to column j.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<std::int64_t> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::int64_t> way(static_cast<std::size_t>(n) + 1, 0);

    for (std::int64_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::int64_t j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const std::int64_t i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            std::int64_t j1 = 0;
            for (std::int64_t j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = sign * cost.at(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (std::int64_t j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const std::int64_t j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    LapResult result;
    result.perm.map.assign(static_cast<std::size_t>(n), 0);
    for (std::int64_t j = 1; j <= n; ++j)
        result.perm.map[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    result.perm.validate();
    for (std::int64_t i = 0; i < n; ++i)
        result.value += cost.at(i, result.perm.map[static_cast<std::size_t>(i)]);
    return result;
}

}  // namespace npmerge
