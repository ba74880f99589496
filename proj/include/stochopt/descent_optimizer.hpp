#pragma once

// Projected gradient descent on the coefficient a with a multiplicative
// barrier step eta = eps (a - alpha)(beta - a) and a mass multiplier gamma.

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/load_scenarios.hpp"
#include "stochopt/objective_gradient.hpp"
#include "stochopt/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stochopt {

enum class MassMode { constrained, penalized };

struct OptimizerConfig {
    double alpha = 1.0;
    double beta = 2.0;
    /// Mass target int a dx (constrained mode).
    double m = 1.5;
    /// Fixed multiplier lambda (penalized mode).
    double penalty = 0.0;
    MassMode mode = MassMode::constrained;
    /// Initial step scale of the barrier factor.
    double eps = 100.0;
    /// Relative stopping tolerance on the change of the penalized cost.
    double eps1 = 1e-6;
    std::size_t max_iters = 500;
    std::size_t max_halvings = 30;
    SolverOptions solver{};

    void validate(const GridSpec& grid) const
    {
        if (!(alpha > 0.0) || !(alpha <= beta))
            throw InvalidInput("OptimizerConfig: need 0 < alpha <= beta");
        if (!(eps > 0.0))
            throw InvalidInput("OptimizerConfig: eps must be positive");
        if (!(eps1 >= 0.0))
            throw InvalidInput("OptimizerConfig: eps1 must be non-negative");
        if (mode == MassMode::constrained) {
            const double area = grid.area();
            if (!(m > alpha * area && m < beta * area))
                throw InvalidInput("OptimizerConfig: mass target must lie strictly inside (alpha|D|, beta|D|)");
        } else if (!(penalty >= 0.0)) {
            throw InvalidInput("OptimizerConfig: penalty must be non-negative");
        }
    }
};

struct ConvergenceRecord {
    std::size_t iter = 0;
    double cost = 0.0;
    double penalized_cost = 0.0;
    double mass = 0.0;
    double gamma = 0.0;
    double step_eps = 0.0;
};

enum class RunStatus { converged, stagnated, max_iters };

inline const char* to_string(RunStatus s)
{
    switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::stagnated: return "stagnated";
    case RunStatus::max_iters: return "max_iters";
    }
    return "unknown";
}

inline constexpr double kDegenerateEtaIntegral = 1e-14;

/// eta_c = eps (a_c - alpha)(beta - a_c).
inline CellField barrier_eta(const DensityField& a, double eps, double alpha, double beta)
{
    CellField eta(a.grid);
    for (std::size_t c = 0; c < a.values.size(); ++c)
        eta.values[c] = std::max(0.0, eps * (a.values[c] - alpha) * (beta - a.values[c]));
    return eta;
}

inline CellField barrier_eta(const DensityField& a, const OptimizerConfig& cfg, double eps)
{
    return barrier_eta(a, eps, cfg.alpha, cfg.beta);
}

/// gamma = [(int a - m) + int eta g] / int eta, which makes
/// int (a + eta (g - gamma)) = m.
inline double multiplier_gamma(const DensityField& a, const GradientDensity& g, const CellField& eta, double m)
{
    const GridSpec& grid = a.grid;
    const double eta_int = integrate_cells(eta);
    if (!(eta_int > kDegenerateEtaIntegral))
        throw DegenerateDesign("multiplier_gamma: every cell is pinned at a phase bound");
    double eta_g = 0.0;
    for (std::size_t c = 0; c < eta.values.size(); ++c)
        eta_g += eta.values[c] * g.values[c];
    eta_g *= grid.cell_area();
    return ((integrate_cells(a) - m) + eta_g) / eta_int;
}

/// d = g - gamma.
inline CellField descent_direction(const GradientDensity& g, double gamma)
{
    CellField d = g;
    for (double& v : d.values)
        v -= gamma;
    return d;
}

/// int eta (g - gamma)^2 dx; the first-order decrease of the penalized cost
/// along eta * (g - gamma).
inline double stationarity_measure(const CellField& eta, const GradientDensity& g, double gamma)
{
    double s = 0.0;
    for (std::size_t c = 0; c < eta.values.size(); ++c) {
        const double d = g.values[c] - gamma;
        s += eta.values[c] * d * d;
    }
    return s * eta.grid.cell_area();
}

struct StepProposal {
    DensityField density;
    double gamma = 0.0;
};

namespace detail {

inline double clamped_mass(const DensityField& a, const CellField& eta, const GradientDensity& g, double gamma,
                           double alpha, double beta)
{
    double s = 0.0;
    for (std::size_t c = 0; c < a.values.size(); ++c)
        s += std::clamp(a.values[c] + eta.values[c] * (g.values[c] - gamma), alpha, beta);
    return s * a.grid.cell_area();
}

inline void apply_step(DensityField& out, const DensityField& a, const CellField& eta, const GradientDensity& g,
                       double gamma, double alpha, double beta)
{
    for (std::size_t c = 0; c < a.values.size(); ++c)
        out.values[c] = std::clamp(a.values[c] + eta.values[c] * (g.values[c] - gamma), alpha, beta);
}

} // namespace detail

/// One trial update a' = clamp(a + eta (g - gamma), alpha, beta) for a fixed
/// step scale. In constrained mode, when clamping breaks the mass identity
/// the multiplier is re-solved by bisection on int clamp(...) = m, which is
/// monotone in gamma.
inline StepProposal propose_step(const DensityField& a, const GradientDensity& g, const OptimizerConfig& cfg,
                                 double eps)
{
    const CellField eta = barrier_eta(a, cfg, eps);
    StepProposal out{a, cfg.penalty};
    if (cfg.mode == MassMode::penalized) {
        detail::apply_step(out.density, a, eta, g, out.gamma, cfg.alpha, cfg.beta);
        return out;
    }

    out.gamma = multiplier_gamma(a, g, eta, cfg.m);
    const double tol = 1e-13 * cfg.m;
    double mass = detail::clamped_mass(a, eta, g, out.gamma, cfg.alpha, cfg.beta);
    if (std::abs(mass - cfg.m) > tol) {
        // Bracket gamma: mass decreases as gamma grows.
        double span = 1.0 + std::abs(out.gamma);
        double lo = out.gamma, hi = out.gamma;
        if (mass > cfg.m) {
            do {
                hi += span;
                span *= 2.0;
            } while (detail::clamped_mass(a, eta, g, hi, cfg.alpha, cfg.beta) > cfg.m && span < 1e300);
        } else {
            do {
                lo -= span;
                span *= 2.0;
            } while (detail::clamped_mass(a, eta, g, lo, cfg.alpha, cfg.beta) < cfg.m && span < 1e300);
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi)
                break;
            mass = detail::clamped_mass(a, eta, g, mid, cfg.alpha, cfg.beta);
            if (std::abs(mass - cfg.m) <= tol) {
                lo = hi = mid;
                break;
            }
            (mass > cfg.m ? lo : hi) = mid;
        }
        const double mass_lo = detail::clamped_mass(a, eta, g, lo, cfg.alpha, cfg.beta);
        const double mass_hi = detail::clamped_mass(a, eta, g, hi, cfg.alpha, cfg.beta);
        out.gamma = std::abs(mass_lo - cfg.m) <= std::abs(mass_hi - cfg.m) ? lo : hi;
    }
    detail::apply_step(out.density, a, eta, g, out.gamma, cfg.alpha, cfg.beta);
    return out;
}

struct UpdateResult {
    DensityField density;
    double gamma = 0.0;
    double accepted_eps = 0.0;
    double merit = 0.0;
    bool stagnated = false;
};

/// Backtracking update: halves eps (up to cfg.max_halvings times) until
/// merit(a') < current_merit. `merit` maps a trial density to its penalized
/// cost and may cache whatever it computed for the accepted trial.
template <class Merit>
UpdateResult update(const DensityField& a, const GradientDensity& g, const OptimizerConfig& cfg, double eps,
                    double current_merit, Merit&& merit)
{
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h, eps *= 0.5) {
        StepProposal step = propose_step(a, g, cfg, eps);
        const double value = merit(step.density);
        if (value < current_merit)
            return {std::move(step.density), step.gamma, eps, value, false};
    }
    return {a, 0.0, 0.0, current_merit, true};
}

struct RunResult {
    DensityField density;
    std::vector<ConvergenceRecord> history;
    RunStatus status = RunStatus::max_iters;
    /// int eta (g - gamma)^2 at the initial and final iterate, eta taken with cfg.eps.
    double stationarity_first = 0.0;
    double stationarity_final = 0.0;
    double final_gamma = 0.0;
    std::vector<ScenarioSolution> solutions;
    GradientDensity gradient;
};

using RecordObserver = std::function<void(const ConvergenceRecord&)>;

/// Runs the descent loop from a0 until
///   |P(a_{k+1}) - P(a_k)| <= eps1 |P(a_0)|,
/// stagnation of the line search, or max_iters. P is the cost in
/// constrained mode (the mass term vanishes on the feasible set) and
/// cost + penalty * int a in penalized mode.
inline RunResult run(const OptimizerConfig& cfg, const ScenarioSet& set, ObjectiveKind kind, DensityField a0,
                     const RecordObserver& observer = {})
{
    cfg.validate(a0.grid);
    for (double v : a0.values)
        if (!(v >= cfg.alpha && v <= cfg.beta))
            throw InvalidInput("run: initial density outside [alpha, beta]");

    const double penalty = cfg.mode == MassMode::penalized ? cfg.penalty : 0.0;
    auto merit_of = [&](const DensityField& a, const std::vector<ScenarioSolution>& sols) {
        return cost(a, sols, kind) + penalty * integrate_cells(a);
    };

    RunResult res;
    res.density = std::move(a0);
    res.solutions = solve(res.density, set, kind, cfg.solver);
    double merit = merit_of(res.density, res.solutions);
    const double merit0 = merit;

    auto emit = [&](const ConvergenceRecord& r) {
        res.history.push_back(r);
        if (observer)
            observer(r);
    };
    emit({0, cost(res.solutions, kind), merit, integrate_cells(res.density), 0.0, 0.0});

    auto multiplier_at = [&](const DensityField& a, const GradientDensity& g, const CellField& eta) {
        return cfg.mode == MassMode::constrained ? multiplier_gamma(a, g, eta, cfg.m) : cfg.penalty;
    };

    double eps = cfg.eps;
    bool first = true;
    res.status = RunStatus::max_iters;
    for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
        res.gradient = gradient_density(res.solutions);
        const CellField eta = barrier_eta(res.density, cfg, cfg.eps);
        if (!(integrate_cells(eta) > kDegenerateEtaIntegral)) {
            res.status = RunStatus::converged;
            break;
        }
        const double gamma = multiplier_at(res.density, res.gradient, eta);
        const double stat = stationarity_measure(eta, res.gradient, gamma);
        if (first) {
            res.stationarity_first = stat;
            first = false;
        }
        if (stat == 0.0) {
            res.status = RunStatus::converged;
            break;
        }

        std::vector<ScenarioSolution> trial_sols;
        UpdateResult up = update(res.density, res.gradient, cfg, eps, merit, [&](const DensityField& trial) {
            trial_sols = solve(trial, set, kind, cfg.solver);
            return merit_of(trial, trial_sols);
        });
        if (up.stagnated) {
            res.status = RunStatus::stagnated;
            break;
        }

        const double change = std::abs(up.merit - merit);
        res.density = std::move(up.density);
        res.solutions = std::move(trial_sols);
        merit = up.merit;
        emit({k, cost(res.solutions, kind), merit, integrate_cells(res.density), up.gamma, up.accepted_eps});

        // Let the step grow back after successful trials, capped by cfg.eps.
        eps = std::min(cfg.eps, 2.0 * up.accepted_eps);
        if (change <= cfg.eps1 * std::abs(merit0)) {
            res.status = RunStatus::converged;
            break;
        }
    }

    res.gradient = gradient_density(res.solutions);
    const CellField eta = barrier_eta(res.density, cfg, cfg.eps);
    if (integrate_cells(eta) > kDegenerateEtaIntegral) {
        res.final_gamma = multiplier_at(res.density, res.gradient, eta);
        res.stationarity_final = stationarity_measure(eta, res.gradient, res.final_gamma);
    }
    if (first)
        res.stationarity_first = res.stationarity_final;
    return res;
}

/// Constant initial design a0 = m / |D|.
inline DensityField uniform_initial_density(const GridSpec& grid, const OptimizerConfig& cfg)
{
    const double value = cfg.mode == MassMode::constrained ? cfg.m / grid.area() : 0.5 * (cfg.alpha + cfg.beta);
    return DensityField(grid, value);
}

} // namespace stochopt
