#include "opo/kernels.hpp"

#include "opo/errors.hpp"

#include <vector>

namespace opo::kernels
{
namespace
{
void check(const GridSpec &g)
{
    require(g.ts_points >= 2 && g.td_points >= 2, ErrorCode::domain, "grid needs at least 2x2 points");
    require(g.ts_hi > g.ts_lo && g.td_hi > g.td_lo, ErrorCode::domain, "grid bounds are empty");
}

double axis(double lo, double hi, int n, int i) { return lo + (hi - lo) * i / (n - 1); }

GridOptimum scan_row(const GridSpec &g, const optics::TuningResponse &resp, int i)
{
    GridOptimum best{0.0, 0.0, -1.0};
    const double ts = axis(g.ts_lo, g.ts_hi, g.ts_points, i);
    for (int j = 0; j < g.td_points; ++j) {
        const double td = axis(g.td_lo, g.td_hi, g.td_points, j);
        const double f = optics::tuning_factor(optics::ThermalState::from_coordinates(g.T_A, ts, td), resp);
        if (f > best.factor)
            best = {ts, td, f};
    }
    return best;
}
} // namespace

GridOptimum tuning_grid_scan_serial(const GridSpec &grid, const optics::TuningResponse &resp)
{
    check(grid);
    GridOptimum best{0.0, 0.0, -1.0};
    for (int i = 0; i < grid.ts_points; ++i) {
        const GridOptimum row = scan_row(grid, resp, i);
        if (row.factor > best.factor)
            best = row;
    }
    return best;
}

GridOptimum tuning_grid_scan_parallel(const GridSpec &grid, const optics::TuningResponse &resp)
{
    check(grid);
    std::vector<GridOptimum> rows(static_cast<std::size_t>(grid.ts_points));

#pragma omp parallel for schedule(static)
    for (int i = 0; i < grid.ts_points; ++i)
        rows[i] = scan_row(grid, resp, i);

    GridOptimum best{0.0, 0.0, -1.0};
    for (const auto &row : rows)
        if (row.factor > best.factor)
            best = row;
    return best;
}
} // namespace opo::kernels
