#pragma once

// Q1 finite elements on a uniform rectangular grid with homogeneous
// Dirichlet data. Nodes are numbered i + j*(nx+1), cells i + j*nx, and the
// unknowns of the linear system are the interior nodes numbered
// (i-1) + (j-1)*(nx-1).

#include "stochopt/errors.hpp"
#include "stochopt/sparse_linalg.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stochopt {

struct GridSpec {
    std::size_t nx = 2;
    std::size_t ny = 2;
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    static GridSpec unit_square(std::size_t nx, std::size_t ny)
    {
        GridSpec g{nx, ny, 0.0, 0.0, 1.0, 1.0};
        g.validate();
        return g;
    }

    void validate() const
    {
        if (nx < 2 || ny < 2)
            throw InvalidInput("GridSpec: need at least 2 cells per direction");
        if (!(x1 > x0) || !(y1 > y0))
            throw InvalidInput("GridSpec: empty domain");
    }

    [[nodiscard]] double hx() const noexcept { return (x1 - x0) / static_cast<double>(nx); }
    [[nodiscard]] double hy() const noexcept { return (y1 - y0) / static_cast<double>(ny); }
    [[nodiscard]] double cell_area() const noexcept { return hx() * hy(); }
    [[nodiscard]] double area() const noexcept { return (x1 - x0) * (y1 - y0); }

    [[nodiscard]] std::size_t node_count() const noexcept { return (nx + 1) * (ny + 1); }
    [[nodiscard]] std::size_t cell_count() const noexcept { return nx * ny; }
    [[nodiscard]] std::size_t interior_count() const noexcept { return (nx - 1) * (ny - 1); }

    [[nodiscard]] std::size_t node(std::size_t i, std::size_t j) const noexcept { return i + j * (nx + 1); }
    [[nodiscard]] std::size_t cell(std::size_t i, std::size_t j) const noexcept { return i + j * nx; }

    [[nodiscard]] bool is_boundary_node(std::size_t i, std::size_t j) const noexcept
    {
        return i == 0 || j == 0 || i == nx || j == ny;
    }

    [[nodiscard]] double node_x(std::size_t i) const noexcept { return x0 + static_cast<double>(i) * hx(); }
    [[nodiscard]] double node_y(std::size_t j) const noexcept { return y0 + static_cast<double>(j) * hy(); }
    [[nodiscard]] double cell_cx(std::size_t i) const noexcept { return x0 + (static_cast<double>(i) + 0.5) * hx(); }
    [[nodiscard]] double cell_cy(std::size_t j) const noexcept { return y0 + (static_cast<double>(j) + 0.5) * hy(); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Piecewise-constant per-cell scalar (the design coefficient, loads).
struct CellField {
    GridSpec grid;
    std::vector<double> values;

    CellField() = default;
    explicit CellField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.cell_count(), fill) {}
    CellField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v))
    {
        if (values.size() != grid.cell_count())
            throw InvalidInput("CellField: value count does not match cell count");
    }

    /// Samples fn at cell centers.
    static CellField sample(const GridSpec& g, const std::function<double(double, double)>& fn)
    {
        CellField out(g);
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t i = 0; i < g.nx; ++i)
                out.values[g.cell(i, j)] = fn(g.cell_cx(i), g.cell_cy(j));
        return out;
    }

    [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return values[grid.cell(i, j)]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[grid.cell(i, j)]; }
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

/// The design variable a(x).
using DensityField = CellField;

/// Node-wise scalar (state, adjoint). Solutions carry exact zeros on the boundary.
struct NodalField {
    GridSpec grid;
    std::vector<double> values;

    NodalField() = default;
    explicit NodalField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}

    static NodalField sample(const GridSpec& g, const std::function<double(double, double)>& fn)
    {
        NodalField out(g);
        for (std::size_t j = 0; j <= g.ny; ++j)
            for (std::size_t i = 0; i <= g.nx; ++i)
                out.values[g.node(i, j)] = fn(g.node_x(i), g.node_y(j));
        return out;
    }

    /// Scatters interior unknowns into a full nodal field with zero boundary.
    static NodalField from_interior(const GridSpec& g, std::span<const double> interior)
    {
        if (interior.size() != g.interior_count())
            throw InvalidInput("NodalField: interior vector size mismatch");
        NodalField out(g);
        std::size_t k = 0;
        for (std::size_t j = 1; j < g.ny; ++j)
            for (std::size_t i = 1; i < g.nx; ++i)
                out.values[g.node(i, j)] = interior[k++];
        return out;
    }

    [[nodiscard]] std::vector<double> interior() const
    {
        std::vector<double> out;
        out.reserve(grid.interior_count());
        for (std::size_t j = 1; j < grid.ny; ++j)
            for (std::size_t i = 1; i < grid.nx; ++i)
                out.push_back(values[grid.node(i, j)]);
        return out;
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[grid.node(i, j)]; }
};

using Vec2 = std::array<double, 2>;

struct CellVectorField {
    GridSpec grid;
    std::vector<Vec2> values;

    CellVectorField() = default;
    explicit CellVectorField(const GridSpec& g) : grid(g), values(g.cell_count(), Vec2{0.0, 0.0}) {}
};

/// Local node order of a cell: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// Unit-coefficient Q1 stiffness of one hx-by-hy cell, 2x2 Gauss rule.
/// The strict upper triangle is mirrored so the result is bitwise symmetric.
inline ElementMatrix unit_element_stiffness(double hx, double hy)
{
    constexpr std::array<double, 4> xi_n{-1.0, 1.0, 1.0, -1.0};
    constexpr std::array<double, 4> eta_n{-1.0, -1.0, 1.0, 1.0};
    const double g = 1.0 / std::sqrt(3.0);
    const std::array<double, 2> gp{-g, g};
    const double jac = hx * hy / 4.0;

    ElementMatrix K{};
    for (double xi : gp)
        for (double eta : gp) {
            std::array<Vec2, 4> grad{};
            for (std::size_t a = 0; a < 4; ++a) {
                grad[a][0] = xi_n[a] * (1.0 + eta_n[a] * eta) / 4.0 * (2.0 / hx);
                grad[a][1] = eta_n[a] * (1.0 + xi_n[a] * xi) / 4.0 * (2.0 / hy);
            }
            for (std::size_t a = 0; a < 4; ++a)
                for (std::size_t b = a; b < 4; ++b)
                    K[a][b] += (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]) * jac;
        }
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < a; ++b)
            K[a][b] = K[b][a];
    return K;
}

namespace detail {

inline std::array<std::size_t, 4> cell_nodes(const GridSpec& g, std::size_t i, std::size_t j)
{
    return {g.node(i, j), g.node(i + 1, j), g.node(i + 1, j + 1), g.node(i, j + 1)};
}

} // namespace detail

/// Stiffness matrix of a -> int a grad(phi_i).grad(phi_j) on interior nodes.
inline SparseSpdMatrix assemble_stiffness(const DensityField& a)
{
    const GridSpec& g = a.grid;
    g.validate();
    if (a.values.size() != g.cell_count())
        throw InvalidInput("assemble_stiffness: density size mismatch");
    for (double v : a.values)
        if (!(v > 0.0))
            throw InvalidInput("assemble_stiffness: coefficient must be strictly positive");

    const std::size_t nix = g.nx - 1;
    const std::size_t n = g.interior_count();
    // 3x3 stencil slot per interior row: slot = (dj+1)*3 + (di+1).
    std::vector<std::array<double, 9>> stencil(n, std::array<double, 9>{});
    const ElementMatrix Ke = unit_element_stiffness(g.hx(), g.hy());
    constexpr std::array<std::size_t, 4> loc_i{0, 1, 1, 0};
    constexpr std::array<std::size_t, 4> loc_j{0, 0, 1, 1};

    for (std::size_t cj = 0; cj < g.ny; ++cj)
        for (std::size_t ci = 0; ci < g.nx; ++ci) {
            const double coef = a(ci, cj);
            for (std::size_t p = 0; p < 4; ++p) {
                const std::size_t ni = ci + loc_i[p], nj = cj + loc_j[p];
                if (g.is_boundary_node(ni, nj))
                    continue;
                const std::size_t row = (ni - 1) + (nj - 1) * nix;
                for (std::size_t q = 0; q < 4; ++q) {
                    const std::size_t mi = ci + loc_i[q], mj = cj + loc_j[q];
                    if (g.is_boundary_node(mi, mj))
                        continue;
                    const std::size_t slot = (mj + 1 - nj) * 3 + (mi + 1 - ni);
                    stencil[row][slot] += coef * Ke[p][q];
                }
            }
        }

    std::vector<std::size_t> offsets(n + 1, 0), cols;
    std::vector<double> vals;
    cols.reserve(9 * n);
    vals.reserve(9 * n);
    for (std::size_t nj = 1; nj < g.ny; ++nj)
        for (std::size_t ni = 1; ni < g.nx; ++ni) {
            const std::size_t row = (ni - 1) + (nj - 1) * nix;
            for (std::size_t s = 0; s < 9; ++s) {
                const std::size_t mi = ni + s % 3 - 1, mj = nj + s / 3 - 1;
                if (g.is_boundary_node(mi, mj))
                    continue;
                cols.push_back((mi - 1) + (mj - 1) * nix);
                vals.push_back(stencil[row][s]);
            }
            offsets[row + 1] = cols.size();
        }
    return {n, std::move(offsets), std::move(cols), std::move(vals)};
}

/// Load vector int g phi_i on interior nodes for a per-cell constant g
/// (midpoint rule, exact for cell-wise constant data).
inline std::vector<double> assemble_load(const CellField& load)
{
    const GridSpec& g = load.grid;
    if (load.values.size() != g.cell_count())
        throw InvalidInput("assemble_load: load size mismatch");
    std::vector<double> rhs(g.interior_count(), 0.0);
    const double quarter = g.cell_area() / 4.0;
    const std::size_t nix = g.nx - 1;
    for (std::size_t cj = 0; cj < g.ny; ++cj)
        for (std::size_t ci = 0; ci < g.nx; ++ci) {
            const double v = load(ci, cj) * quarter;
            for (std::size_t dj = 0; dj < 2; ++dj)
                for (std::size_t di = 0; di < 2; ++di) {
                    const std::size_t ni = ci + di, nj = cj + dj;
                    if (!g.is_boundary_node(ni, nj))
                        rhs[(ni - 1) + (nj - 1) * nix] += v;
                }
        }
    return rhs;
}

/// Gradient of the bilinear interpolant at each cell center.
inline CellVectorField cell_gradients(const NodalField& u)
{
    const GridSpec& g = u.grid;
    if (u.values.size() != g.node_count())
        throw InvalidInput("cell_gradients: nodal field size mismatch");
    CellVectorField out(g);
    const double hx = g.hx(), hy = g.hy();
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double u0 = u(i, j), u1 = u(i + 1, j), u2 = u(i + 1, j + 1), u3 = u(i, j + 1);
            out.values[g.cell(i, j)] = {((u1 - u0) + (u2 - u3)) / (2.0 * hx),
                                        ((u3 - u0) + (u2 - u1)) / (2.0 * hy)};
        }
    return out;
}

/// Per-cell integral of grad(u).grad(p) for the bilinear interpolants
/// (exact, through the unit element stiffness).
inline std::vector<double> cell_gradient_products(const NodalField& u, const NodalField& p)
{
    const GridSpec& g = u.grid;
    if (!(p.grid == g) || u.values.size() != g.node_count() || p.values.size() != g.node_count())
        throw InvalidInput("cell_gradient_products: field/grid mismatch");
    const ElementMatrix Ke = unit_element_stiffness(g.hx(), g.hy());
    std::vector<double> out(g.cell_count());
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const auto nodes = detail::cell_nodes(g, i, j);
            double s = 0.0;
            for (std::size_t a = 0; a < 4; ++a) {
                double row = 0.0;
                for (std::size_t b = 0; b < 4; ++b)
                    row += Ke[a][b] * p.values[nodes[b]];
                s += u.values[nodes[a]] * row;
            }
            out[g.cell(i, j)] = s;
        }
    return out;
}

/// sum_c w_c * |cell|.
inline double integrate_cells(const GridSpec& g, std::span<const double> w)
{
    if (w.size() != g.cell_count())
        throw InvalidInput("integrate_cells: size mismatch");
    double s = 0.0;
    for (double v : w)
        s += v;
    return s * g.cell_area();
}

inline double integrate_cells(const CellField& w) { return integrate_cells(w.grid, w.values); }

/// L2 norm of (bilinear interpolant of u) - exact, 3x3 Gauss per cell.
inline double l2_error(const NodalField& u, const std::function<double(double, double)>& exact)
{
    const GridSpec& g = u.grid;
    const std::array<double, 3> pts{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const std::array<double, 3> wts{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double jac = g.cell_area() / 4.0;
    double acc = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double u0 = u(i, j), u1 = u(i + 1, j), u2 = u(i + 1, j + 1), u3 = u(i, j + 1);
            for (std::size_t qa = 0; qa < 3; ++qa)
                for (std::size_t qb = 0; qb < 3; ++qb) {
                    const double s = (pts[qa] + 1.0) / 2.0, t = (pts[qb] + 1.0) / 2.0;
                    const double uh = u0 * (1 - s) * (1 - t) + u1 * s * (1 - t) + u2 * s * t + u3 * (1 - s) * t;
                    const double x = g.node_x(i) + s * g.hx(), y = g.node_y(j) + t * g.hy();
                    const double e = uh - exact(x, y);
                    acc += wts[qa] * wts[qb] * jac * e * e;
                }
        }
    return std::sqrt(acc);
}

} // namespace stochopt
