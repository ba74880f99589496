#pragma once

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"
#include "stochopt/pde_solver.hpp"

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace stochopt {

/// Per-cell expectation sum_k w_k grad(u_k).grad(p_k). The directional
/// derivative of the expected cost is dI/da . d = -int d g dx.
using GradientDensity = CellField;

/// Expected cost from the load pairing: sum_k w_k int (f + xi_k) u_k dx,
/// negated for the energy.
inline double cost(const std::vector<ScenarioSolution>& sols, ObjectiveKind kind)
{
    double total = 0.0;
    for (const auto& s : sols) {
        const std::vector<double> u = s.u.interior();
        total += s.weight * detail::dot(s.load, u);
    }
    return kind == ObjectiveKind::compliance ? total : -total;
}

inline double cost(const DensityField& a, const std::vector<ScenarioSolution>& sols, ObjectiveKind kind)
{
    for (const auto& s : sols)
        if (!(s.u.grid == a.grid))
            throw InvalidInput("cost: solutions were computed on a different grid");
    return cost(sols, kind);
}

/// Same quantity through the stiffness energy sum_k w_k int a |grad u_k|^2.
/// Agrees with cost() up to solver error; used as an assembly cross-check.
inline double cost_stiffness_form(const DensityField& a, const std::vector<ScenarioSolution>& sols,
                                  ObjectiveKind kind)
{
    double total = 0.0;
    for (const auto& s : sols) {
        const std::vector<double> e = cell_gradient_products(s.u, s.u);
        double acc = 0.0;
        for (std::size_t c = 0; c < e.size(); ++c)
            acc += a.values[c] * e[c];
        total += s.weight * acc;
    }
    return kind == ObjectiveKind::compliance ? total : -total;
}

inline double penalized_cost(const DensityField& a, const std::vector<ScenarioSolution>& sols, ObjectiveKind kind,
                             double gamma_pen)
{
    if (!(gamma_pen >= 0.0))
        throw InvalidInput("penalized_cost: penalty must be non-negative");
    return cost(a, sols, kind) + gamma_pen * integrate_cells(a);
}

/// Cell averages of sum_k w_k grad(u_k).grad(p_k), integrated exactly over
/// each cell so that -int d g is the exact derivative of the discrete cost.
inline GradientDensity gradient_density(const std::vector<ScenarioSolution>& sols)
{
    if (sols.empty())
        throw InvalidInput("gradient_density: no scenario solutions");
    const GridSpec& g = sols.front().u.grid;
    GradientDensity out(g, 0.0);
    const double inv_area = 1.0 / g.cell_area();
    for (const auto& s : sols) {
        if (!s.has_adjoint)
            throw InvalidInput("gradient_density: adjoint part missing");
        const std::vector<double> e = cell_gradient_products(s.u, s.p);
        for (std::size_t c = 0; c < e.size(); ++c)
            out.values[c] += s.weight * e[c] * inv_area;
    }
    return out;
}

/// -int d g dx.
inline double directional_derivative(const GradientDensity& g, std::span<const double> direction)
{
    if (direction.size() != g.values.size())
        throw InvalidInput("directional_derivative: size mismatch");
    double s = 0.0;
    for (std::size_t c = 0; c < direction.size(); ++c)
        s += direction[c] * g.values[c];
    return -s * g.grid.cell_area();
}

struct DecompositionCheck {
    double expected;   ///< sum_k w_k int (f + xi_k) u(f + xi_k)
    double decomposed; ///< int f u(f) + sum_k w_k int xi_k u(xi_k)
};

/// Expected compliance against the split into a mean-load term and a
/// perturbation term. The cross terms cancel because sum_k w_k xi_k = 0.
inline DecompositionCheck expected_decomposition_check(const DensityField& a, const ScenarioSet& set,
                                                       const SolverOptions& opts = {})
{
    const auto full = solve_state(a, set, opts);
    const double lhs = cost(full, ObjectiveKind::compliance);

    const double mean_part = cost(solve_state(a, make_deterministic(set.f), opts), ObjectiveKind::compliance);

    ScenarioSet only_xi{CellField(set.grid(), 0.0), set.scenarios};
    const double perturbation_part = cost(solve_state(a, only_xi, opts), ObjectiveKind::compliance);
    return {lhs, mean_part + perturbation_part};
}

} // namespace stochopt
