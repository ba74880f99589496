#include "stochopt/descent_optimizer.hpp"
#include "stochopt/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace stochopt;

namespace {

OptimizerConfig paper_config()
{
    OptimizerConfig cfg;
    cfg.alpha = 1.0;
    cfg.beta = 2.0;
    cfg.m = 1.5;
    return cfg;
}

DensityField random_interior(const GridSpec& g, std::mt19937& rng)
{
    std::uniform_real_distribution<double> d(1.05, 1.95);
    DensityField a(g);
    for (double& v : a.values)
        v = d(rng);
    return a;
}

GradientDensity compliance_gradient(const DensityField& a, const ScenarioSet& set)
{
    return gradient_density(solve(a, set, ObjectiveKind::compliance));
}

} // namespace

TEST(BarrierEta, VanishesAtBoundsAndPeaksInMiddle)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    for (double v : barrier_eta(DensityField(g, 1.0), 0.1, 1.0, 2.0).values) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : barrier_eta(DensityField(g, 2.0), 0.1, 1.0, 2.0).values) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : barrier_eta(DensityField(g, 1.5), 0.1, 1.0, 2.0).values) {
        EXPECT_NEAR(v, 0.025, 1e-16);
    }
}

TEST(MultiplierGamma, ClosedFormCases)
{
    const GridSpec g = GridSpec::unit_square(8, 8);
    std::mt19937 rng(1);
    DensityField a = random_interior(g, rng);
    // Shift a so that int a = 1.5 exactly up to rounding.
    const double shift = 1.5 - integrate_cells(a);
    for (double& v : a.values)
        v += shift;
    const CellField eta = barrier_eta(a, 0.3, 1.0, 2.0);
    EXPECT_NEAR(multiplier_gamma(a, GradientDensity(g, 0.0), eta, integrate_cells(a)), 0.0, 1e-14);
    EXPECT_NEAR(multiplier_gamma(a, GradientDensity(g, 1.0), eta, integrate_cells(a)), 1.0, 1e-14);
}

TEST(MultiplierGamma, DegenerateDesignThrows)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    DensityField a(g, 1.0);
    for (std::size_t c = 0; c < a.size(); c += 2)
        a.values[c] = 2.0;
    EXPECT_THROW(multiplier_gamma(a, GradientDensity(g, 1.0), barrier_eta(a, 1.0, 1.0, 2.0), 1.5), DegenerateDesign);
}

TEST(MultiplierGamma, PreClampMassIdentity)
{
    std::mt19937 rng(2);
    const GridSpec g = GridSpec::unit_square(16, 16);
    const ScenarioSet set = make_case1(g);
    for (int t = 0; t < 5; ++t) {
        const DensityField a = random_interior(g, rng);
        const GradientDensity grad = compliance_gradient(a, set);
        const CellField eta = barrier_eta(a, 3.0, 1.0, 2.0);
        const double gamma = multiplier_gamma(a, grad, eta, 1.5);
        const CellField d = descent_direction(grad, gamma);
        DensityField next = a;
        for (std::size_t c = 0; c < a.size(); ++c)
            next.values[c] += eta.values[c] * d.values[c];
        EXPECT_NEAR(integrate_cells(next), 1.5, 1e-14);
    }
}

TEST(DescentDirection, Basics)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    for (double v : descent_direction(GradientDensity(g, 0.7), 0.7).values) {
        EXPECT_EQ(v, 0.0);
    }
    GradientDensity grad(g);
    for (std::size_t c = 0; c < grad.size(); ++c)
        grad.values[c] = 0.1 * static_cast<double>(c);
    EXPECT_EQ(descent_direction(grad, 0.0).values, grad.values);
}

TEST(DescentDirection, PenalizedDerivativeIsMinusWeightedSquare)
{
    // d/dt I_gamma(a + t eta (g - gamma)) at t = 0 equals -int eta (g - gamma)^2.
    const GridSpec g = GridSpec::unit_square(8, 8);
    std::mt19937 rng(4);
    const DensityField a = random_interior(g, rng);
    const ScenarioSet set = make_case2(g);
    SolverOptions tight;
    tight.tol = 1e-13;
    const GradientDensity grad = gradient_density(solve(a, set, ObjectiveKind::compliance, tight));
    const CellField eta = barrier_eta(a, 1.0, 1.0, 2.0);
    const double gamma = multiplier_gamma(a, grad, eta, 1.5);
    const CellField d = descent_direction(grad, gamma);

    auto penalized = [&](double t) {
        DensityField b = a;
        for (std::size_t c = 0; c < b.size(); ++c)
            b.values[c] += t * eta.values[c] * d.values[c];
        return cost(b, solve(b, set, ObjectiveKind::compliance, tight), ObjectiveKind::compliance) +
               gamma * integrate_cells(b);
    };
    const double delta = 1e-5;
    const double fd = (penalized(delta) - penalized(-delta)) / (2.0 * delta);
    const double predicted = -stationarity_measure(eta, grad, gamma);
    EXPECT_LE(predicted, 0.0);
    EXPECT_NEAR(fd, predicted, 1e-4 * std::abs(predicted));
}

TEST(ProposeStep, ConstantGradientIsFixedPoint)
{
    const GridSpec g = GridSpec::unit_square(8, 8);
    std::mt19937 rng(5);
    DensityField a = random_interior(g, rng);
    OptimizerConfig cfg = paper_config();
    cfg.m = integrate_cells(a);
    const StepProposal step = propose_step(a, GradientDensity(g, 0.42), cfg, 1.0);
    for (std::size_t c = 0; c < a.size(); ++c) {
        EXPECT_NEAR(step.density.values[c], a.values[c], 1e-15);
    }
}

TEST(ProposeStep, OnlyUnpinnedCellMoves)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    DensityField a(g, 1.0);
    for (std::size_t c = 8; c < a.size(); ++c)
        a.values[c] = 2.0;
    a.values[5] = 1.5;
    GradientDensity grad(g);
    for (std::size_t c = 0; c < grad.size(); ++c)
        grad.values[c] = static_cast<double>(c % 5);
    OptimizerConfig cfg = paper_config();
    cfg.mode = MassMode::penalized;
    cfg.penalty = 0.5;
    const StepProposal step = propose_step(a, grad, cfg, 0.1);
    for (std::size_t c = 0; c < a.size(); ++c) {
        if (c == 5) {
            EXPECT_NE(step.density.values[c], a.values[c]);
        }
        else
            EXPECT_EQ(step.density.values[c], a.values[c]);
    }
}

TEST(ProposeStep, ClampedStepKeepsBoxAndMass)
{
    std::mt19937 rng(6);
    const GridSpec g = GridSpec::unit_square(16, 16);
    const ScenarioSet set = make_case1(g);
    const OptimizerConfig cfg = paper_config();
    for (double eps : {1e2, 1e3, 1e5}) {
        DensityField a = random_interior(g, rng);
        const double shift = 1.5 - integrate_cells(a);
        for (double& v : a.values)
            v += shift;
        const StepProposal step = propose_step(a, compliance_gradient(a, set), cfg, eps);
        std::size_t saturated = 0;
        for (double v : step.density.values) {
            EXPECT_GE(v, 1.0);
            EXPECT_LE(v, 2.0);
            saturated += (v == 1.0 || v == 2.0);
        }
        EXPECT_GT(saturated, 0u) << "eps " << eps << " should force clamping";
        EXPECT_NEAR(integrate_cells(step.density), 1.5, 1e-10 * 1.5);
    }
}

TEST(Update, StagnationWhenNothingDecreases)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    DensityField a(g, 1.5);
    GradientDensity grad(g);
    for (std::size_t c = 0; c < grad.size(); ++c)
        grad.values[c] = static_cast<double>(c);
    int calls = 0;
    const auto res = update(a, grad, paper_config(), 1.0, 0.0, [&](const DensityField&) {
        ++calls;
        return 1.0;
    });
    EXPECT_TRUE(res.stagnated);
    EXPECT_EQ(calls, 31);
    EXPECT_EQ(res.density.values, a.values);
}

TEST(Update, HalvesUntilDecrease)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    DensityField a(g, 1.5);
    GradientDensity grad(g);
    for (std::size_t c = 0; c < grad.size(); ++c)
        grad.values[c] = static_cast<double>(c);
    int calls = 0;
    const auto res = update(a, grad, paper_config(), 8.0, 0.0, [&](const DensityField&) { return ++calls < 4 ? 1.0 : -1.0; });
    EXPECT_FALSE(res.stagnated);
    EXPECT_DOUBLE_EQ(res.accepted_eps, 1.0);
    EXPECT_EQ(res.merit, -1.0);
}

TEST(OptimizerConfig, Validation)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    OptimizerConfig cfg = paper_config();
    EXPECT_NO_THROW(cfg.validate(g));
    cfg.m = 1.0;
    EXPECT_THROW(cfg.validate(g), InvalidInput);
    cfg.m = 2.0;
    EXPECT_THROW(cfg.validate(g), InvalidInput);
    cfg = paper_config();
    cfg.alpha = 3.0;
    EXPECT_THROW(cfg.validate(g), InvalidInput);
    cfg = paper_config();
    cfg.eps = 0.0;
    EXPECT_THROW(cfg.validate(g), InvalidInput);
}

TEST(Run, ZeroLoadReturnsInitialDesign)
{
    const GridSpec g = GridSpec::unit_square(8, 8);
    const OptimizerConfig cfg = paper_config();
    const DensityField a0 = uniform_initial_density(g, cfg);
    const RunResult res = run(cfg, make_deterministic(CellField(g, 0.0)), ObjectiveKind::compliance, a0);
    EXPECT_EQ(res.status, RunStatus::converged);
    ASSERT_EQ(res.history.size(), 1u);
    EXPECT_EQ(res.density.values, a0.values);
}

TEST(Run, RejectsInadmissibleStart)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    EXPECT_THROW(run(paper_config(), make_case1(g), ObjectiveKind::compliance, DensityField(g, 2.5)), InvalidInput);
}

TEST(Run, InvariantsOnSmallGrid)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    const OptimizerConfig cfg = paper_config();
    for (auto kind : {ObjectiveKind::compliance, ObjectiveKind::energy})
        for (const auto& set : {make_deterministic(CellField(g, 1.0)), make_case1(g), make_case2(g)}) {
            std::vector<ConvergenceRecord> streamed;
            const RunResult res = run(cfg, set, kind, uniform_initial_density(g, cfg),
                                      [&](const ConvergenceRecord& r) { streamed.push_back(r); });
            EXPECT_EQ(res.status, RunStatus::converged);
            ASSERT_EQ(streamed.size(), res.history.size());
            for (std::size_t k = 0; k < res.history.size(); ++k) {
                EXPECT_NEAR(res.history[k].mass, 1.5, 1e-10 * 1.5);
                if (k > 0) {
                    EXPECT_LE(res.history[k].penalized_cost, res.history[k - 1].penalized_cost);
                }
            }
            for (double v : res.density.values) {
                EXPECT_GE(v, cfg.alpha);
                EXPECT_LE(v, cfg.beta);
            }
            EXPECT_LT(res.stationarity_final, res.stationarity_first);
        }
}

TEST(Run, RotationEquivariantIterates)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    for (std::size_t iters : {1u, 4u, 15u}) {
        OptimizerConfig cfg = paper_config();
        cfg.max_iters = iters;
        cfg.eps1 = 0.0;
        const RunResult res =
            run(cfg, make_case2(g), ObjectiveKind::compliance, uniform_initial_density(g, cfg));
        EXPECT_LE(l1_distance(res.density, rotate90(res.density)), 1e-9) << iters << " iterations";
    }
}

TEST(Run, PenalizedModeDescends)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    OptimizerConfig cfg = paper_config();
    cfg.mode = MassMode::penalized;
    cfg.penalty = 0.02;
    const RunResult res =
        run(cfg, make_deterministic(CellField(g, 1.0)), ObjectiveKind::compliance, uniform_initial_density(g, cfg));
    ASSERT_GT(res.history.size(), 2u);
    for (std::size_t k = 1; k < res.history.size(); ++k) {
        EXPECT_LE(res.history[k].penalized_cost, res.history[k - 1].penalized_cost);
        EXPECT_EQ(res.history[k].gamma, 0.02);
        EXPECT_NEAR(res.history[k].penalized_cost, res.history[k].cost + 0.02 * res.history[k].mass, 1e-14);
    }
}

TEST(Run, PenaltyTradesMassForCompliance)
{
    const GridSpec g = GridSpec::unit_square(12, 12);
    const ScenarioSet set = make_deterministic(CellField(g, 1.0));
    double previous_mass = std::numeric_limits<double>::infinity();
    for (double penalty : {0.005, 0.02, 0.08}) {
        OptimizerConfig cfg = paper_config();
        cfg.mode = MassMode::penalized;
        cfg.penalty = penalty;
        const RunResult res = run(cfg, set, ObjectiveKind::compliance, uniform_initial_density(g, cfg));
        const double mass = integrate_cells(res.density);
        EXPECT_LE(mass, previous_mass);
        previous_mass = mass;
    }
}

TEST(Run, Case1MovesMassIntoCenter)
{
    const GridSpec g = GridSpec::unit_square(32, 32);
    const OptimizerConfig cfg = paper_config();
    const DensityField a0 = uniform_initial_density(g, cfg);
    const RunResult det = run(cfg, make_deterministic(CellField(g, 1.0)), ObjectiveKind::compliance, a0);
    const RunResult c1 = run(cfg, make_case1(g), ObjectiveKind::compliance, a0);
    EXPECT_GT(mass_in_region(c1.density, regions::in_d0), mass_in_region(det.density, regions::in_d0));
}
