#pragma once

// Region masses and symmetry scores used to compare designs on the unit square.

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"

#include <cmath>
#include <functional>

namespace stochopt {

namespace regions {

/// The four 1/8 x 1/8 blocks touching the corners of the domain.
inline bool in_corners(double x, double y)
{
    return (x < 0.125 || x > 0.875) && (y < 0.125 || y > 0.875);
}

/// Strips of half-width 1/8 along the two mid-lines, outside D0.
inline bool in_cross_arms(double x, double y)
{
    return in_d1(x, y) && (std::abs(x - 0.5) < 0.125 || std::abs(y - 0.5) < 0.125);
}

} // namespace regions

/// int_R a dx with R given by cell-center membership.
inline double mass_in_region(const CellField& a, const std::function<bool(double, double)>& inside)
{
    const GridSpec& g = a.grid;
    double s = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            if (inside(g.cell_cx(i), g.cell_cy(j)))
                s += a(i, j);
    return s * g.cell_area();
}

struct RegionMasses {
    double d0 = 0.0;
    double d1 = 0.0;
    double corners = 0.0;
    double cross_arms = 0.0;
    double total = 0.0;
};

inline RegionMasses region_masses(const CellField& a)
{
    return {mass_in_region(a, regions::in_d0), mass_in_region(a, regions::in_d1),
            mass_in_region(a, regions::in_corners), mass_in_region(a, regions::in_cross_arms),
            integrate_cells(a)};
}

/// int |a - b| dx.
inline double l1_distance(const CellField& a, const CellField& b)
{
    if (!(a.grid == b.grid))
        throw InvalidInput("l1_distance: grid mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < a.values.size(); ++c)
        s += std::abs(a.values[c] - b.values[c]);
    return s * a.grid.cell_area();
}

/// The field rotated by 90 degrees about the domain center (square grids only).
inline CellField rotate90(const CellField& a)
{
    const GridSpec& g = a.grid;
    if (g.nx != g.ny)
        throw InvalidInput("rotate90: grid must be square");
    CellField out(g);
    const std::size_t n = g.nx;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            out(i, j) = a(j, n - 1 - i);
    return out;
}

inline CellField mirror_x(const CellField& a)
{
    const GridSpec& g = a.grid;
    CellField out(g);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            out(i, j) = a(g.nx - 1 - i, j);
    return out;
}

inline CellField mirror_y(const CellField& a)
{
    const GridSpec& g = a.grid;
    CellField out(g);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            out(i, j) = a(i, g.ny - 1 - j);
    return out;
}

struct SymmetryScores {
    double rotation = 0.0; ///< int |a - R90 a|, or NaN on non-square grids
    double mirror_x = 0.0;
    double mirror_y = 0.0;
};

inline SymmetryScores symmetry_scores(const CellField& a)
{
    SymmetryScores s;
    s.rotation = a.grid.nx == a.grid.ny ? l1_distance(a, rotate90(a)) : std::nan("");
    s.mirror_x = l1_distance(a, mirror_x(a));
    s.mirror_y = l1_distance(a, mirror_y(a));
    return s;
}

} // namespace stochopt
