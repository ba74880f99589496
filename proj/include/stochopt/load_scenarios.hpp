#pragma once

// Random right-hand side f(x) + xi(x, omega) over a finite set of atoms.

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace stochopt {

struct Scenario {
    CellField xi;
    double weight = 1.0;
};

struct ScenarioSet {
    CellField f;
    std::vector<Scenario> scenarios;

    [[nodiscard]] const GridSpec& grid() const noexcept { return f.grid; }

    /// f + xi_k, cell-wise.
    [[nodiscard]] CellField load(std::size_t k) const
    {
        CellField out = f;
        const auto& xi = scenarios.at(k).xi.values;
        for (std::size_t c = 0; c < out.values.size(); ++c)
            out.values[c] += xi[c];
        return out;
    }

    /// sum_k w_k xi_k, cell-wise.
    [[nodiscard]] CellField mean_perturbation() const
    {
        CellField out(f.grid);
        for (const auto& s : scenarios)
            for (std::size_t c = 0; c < out.values.size(); ++c)
                out.values[c] += s.weight * s.xi.values[c];
        return out;
    }
};

inline constexpr double kBuiltinScenarioTol = 1e-12;
inline constexpr double kFileScenarioTol = 1e-9;

/// The unit-square regions of the reference experiments.
namespace regions {

inline bool in_d0(double x, double y) { return x >= 0.25 && x <= 0.75 && y >= 0.25 && y <= 0.75; }
inline bool in_d1(double x, double y) { return !in_d0(x, y); }

} // namespace regions

inline ScenarioSet make_deterministic(CellField f)
{
    CellField zero(f.grid, 0.0);
    ScenarioSet set{std::move(f), {}};
    set.scenarios.push_back({std::move(zero), 1.0});
    return set;
}

namespace detail {

inline ScenarioSet make_plus_minus(const GridSpec& grid, bool (*inside)(double, double))
{
    grid.validate();
    const CellField chi = CellField::sample(grid, [inside](double x, double y) { return inside(x, y) ? 1.0 : 0.0; });
    CellField neg = chi;
    for (double& v : neg.values)
        v = -v;
    ScenarioSet set{CellField(grid, 1.0), {}};
    set.scenarios.push_back({chi, 0.5});
    set.scenarios.push_back({std::move(neg), 0.5});
    return set;
}

} // namespace detail

/// f = 1, xi = +-chi_{D0} with probability 1/2 each, D0 = [1/4,3/4]^2.
inline ScenarioSet make_case1(const GridSpec& grid) { return detail::make_plus_minus(grid, regions::in_d0); }

/// f = 1, xi = +-chi_{D1} with probability 1/2 each, D1 = D \ D0.
inline ScenarioSet make_case2(const GridSpec& grid) { return detail::make_plus_minus(grid, regions::in_d1); }

/// Returns the list of invariant violations; empty when the set is valid.
inline std::vector<std::string> validate(const ScenarioSet& set, double tol = kBuiltinScenarioTol)
{
    std::vector<std::string> out;
    if (set.scenarios.empty()) {
        out.emplace_back("scenario set is empty");
        return out;
    }
    double wsum = 0.0;
    bool grids_match = true;
    for (std::size_t k = 0; k < set.scenarios.size(); ++k) {
        const auto& s = set.scenarios[k];
        if (!(s.weight > 0.0 && s.weight <= 1.0))
            out.push_back("scenario " + std::to_string(k) + ": weight outside (0, 1]");
        if (!(s.xi.grid == set.f.grid) || s.xi.values.size() != set.f.values.size()) {
            grids_match = false;
            out.push_back("scenario " + std::to_string(k) + ": perturbation grid differs from load grid");
        }
        wsum += s.weight;
    }
    if (!(std::abs(wsum - 1.0) <= tol))
        out.push_back("weights sum to " + std::to_string(wsum) + ", expected 1");
    if (!grids_match)
        return out;

    const CellField mean = set.mean_perturbation();
    double worst = 0.0;
    for (double v : mean.values)
        worst = std::max(worst, std::abs(v));
    if (!(worst <= tol))
        out.push_back("perturbation mean is not zero (max cell |sum w xi| = " + std::to_string(worst) + ")");
    return out;
}

inline double max_mean_perturbation(const ScenarioSet& set)
{
    double worst = 0.0;
    for (double v : set.mean_perturbation().values)
        worst = std::max(worst, std::abs(v));
    return worst;
}

} // namespace stochopt
