#pragma once

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"
#include "stochopt/sparse_linalg.hpp"

#include <future>
#include <string>
#include <vector>

namespace stochopt {

enum class ObjectiveKind { compliance, energy };

inline const char* to_string(ObjectiveKind k) { return k == ObjectiveKind::compliance ? "compliance" : "energy"; }

struct SolverOptions {
    double tol = 1e-10;
    /// 0 selects 20 * (number of unknowns).
    std::size_t max_iter = 0;
    /// Solve scenarios on worker threads; results are ordered by scenario index either way.
    bool parallel = true;
};

/// State/adjoint pair for one atom of the probability space.
struct ScenarioSolution {
    NodalField u;
    NodalField p;
    CellVectorField grad_u;
    CellVectorField grad_p;
    /// Interior load vector of f + xi_k.
    std::vector<double> load;
    double weight = 1.0;
    SolveReport report;
    bool has_adjoint = false;
};

/// Solves -div(a grad u_k) = f + xi_k, u_k = 0 on the boundary, for every scenario.
/// The stiffness matrix is assembled once and shared.
inline std::vector<ScenarioSolution> solve_state(const DensityField& a, const ScenarioSet& set,
                                                 const SolverOptions& opts = {})
{
    if (!(a.grid == set.grid()))
        throw InvalidInput("solve_state: density and scenario grids differ");
    if (auto v = validate(set, kFileScenarioTol); !v.empty())
        throw InvalidInput("solve_state: invalid scenario set: " + v.front());

    const SparseSpdMatrix K = assemble_stiffness(a);
    const GridSpec& g = a.grid;

    auto solve_one = [&](std::size_t k) {
        ScenarioSolution sol;
        sol.weight = set.scenarios[k].weight;
        sol.load = assemble_load(set.load(k));
        auto [x, report] = cg_solve(K, sol.load, opts.tol, opts.max_iter);
        if (!report.converged)
            throw SolverError("solve_state: CG did not converge for scenario " + std::to_string(k) +
                              " (relative residual " + std::to_string(report.relative_residual) + ")");
        sol.report = report;
        sol.u = NodalField::from_interior(g, x);
        sol.grad_u = cell_gradients(sol.u);
        return sol;
    };

    const std::size_t count = set.scenarios.size();
    std::vector<ScenarioSolution> out;
    out.reserve(count);
    if (opts.parallel && count > 1) {
        std::vector<std::future<ScenarioSolution>> jobs;
        jobs.reserve(count);
        for (std::size_t k = 0; k < count; ++k)
            jobs.push_back(std::async(std::launch::async, solve_one, k));
        for (auto& job : jobs)
            out.push_back(job.get());
    } else {
        for (std::size_t k = 0; k < count; ++k)
            out.push_back(solve_one(k));
    }
    return out;
}

/// Fills the adjoint parts. For the two supported costs the adjoint system
/// coincides with the state system up to the sign of the right-hand side,
/// so p = u (compliance) or p = -u (energy) without a second solve.
inline void solve_adjoint(std::vector<ScenarioSolution>& sols, ObjectiveKind kind)
{
    const double sign = kind == ObjectiveKind::compliance ? 1.0 : -1.0;
    for (auto& s : sols) {
        s.p = s.u;
        s.grad_p = s.grad_u;
        if (sign < 0.0) {
            for (double& v : s.p.values)
                v = -v;
            for (auto& gvec : s.grad_p.values)
                gvec = {-gvec[0], -gvec[1]};
        }
        s.has_adjoint = true;
    }
}

/// State followed by adjoint.
inline std::vector<ScenarioSolution> solve(const DensityField& a, const ScenarioSet& set, ObjectiveKind kind,
                                           const SolverOptions& opts = {})
{
    auto sols = solve_state(a, set, opts);
    solve_adjoint(sols, kind);
    return sols;
}

} // namespace stochopt
