#include "stochopt/pde_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace stochopt;
using std::numbers::pi;

namespace {

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// Poisson -lap u = 1 on the unit square at the center, from the
// single-sine series u = x(1-x)/2 - sum_k odd 4/(pi^3 k^3) sin(k pi x)
// cosh(k pi (y - 1/2)) / cosh(k pi / 2). Evaluates to 0.0736713532815138.
double poisson_center_series()
{
    double s = 0.125;
    for (int k = 1; k < 200; k += 2)
        s -= 4.0 / (std::pow(pi, 3) * k * k * k) * std::sin(k * pi / 2.0) / std::cosh(k * pi / 2.0);
    return s;
}

} // namespace

TEST(SolveState, ManufacturedCenterValue)
{
    const GridSpec g = GridSpec::unit_square(64, 64);
    const CellField f =
        CellField::sample(g, [](double x, double y) { return 2.0 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
    const auto sols = solve_state(DensityField(g, 1.0), make_deterministic(f));
    ASSERT_EQ(sols.size(), 1u);
    EXPECT_NEAR(sols[0].u(32, 32), 1.0, 1e-3);
}

TEST(SolveState, UnitLoadCenterValueMatchesSeries)
{
    EXPECT_NEAR(poisson_center_series(), 0.0736713532815138, 1e-15);
    const GridSpec g = GridSpec::unit_square(128, 128);
    const auto sols = solve_state(DensityField(g, 1.0), make_deterministic(CellField(g, 1.0)));
    EXPECT_NEAR(sols[0].u(64, 64), 0.0736713532815138, 5e-4);
}

TEST(SolveState, ZeroLoadGivesZero)
{
    const GridSpec g = GridSpec::unit_square(8, 8);
    const auto sols = solve_state(DensityField(g, 1.5), make_deterministic(CellField(g, 0.0)));
    for (double v : sols[0].u.values)
        EXPECT_EQ(v, 0.0);
}

TEST(SolveState, BoundaryIsExactlyZero)
{
    const GridSpec g = GridSpec::unit_square(10, 7);
    const auto sols = solve(DensityField(g, 1.3), make_case1(g), ObjectiveKind::energy);
    for (const auto& s : sols)
        for (std::size_t j = 0; j <= g.ny; ++j)
            for (std::size_t i = 0; i <= g.nx; ++i)
                if (g.is_boundary_node(i, j)) {
                    EXPECT_EQ(s.u(i, j), 0.0);
                    EXPECT_EQ(s.p(i, j), 0.0);
                }
}

TEST(SolveState, RejectsInvalidScenarioSetAndGridMismatch)
{
    const GridSpec g = GridSpec::unit_square(4, 4);
    ScenarioSet biased{CellField(g, 1.0), {}};
    biased.scenarios.push_back({CellField(g, 0.5), 1.0});
    EXPECT_THROW(solve_state(DensityField(g, 1.0), biased), InvalidInput);
    EXPECT_THROW(solve_state(DensityField(GridSpec::unit_square(5, 5), 1.0), make_case1(g)), InvalidInput);
}

TEST(SolveState, NonConvergenceNamesScenario)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    SolverOptions opts;
    opts.max_iter = 2;
    try {
        solve_state(DensityField(g, 1.0), make_case1(g), opts);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("scenario 0"), std::string::npos);
    }
}

TEST(SolveAdjoint, SignReuse)
{
    const GridSpec g = GridSpec::unit_square(12, 12);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(1.0, 2.0);
    DensityField a(g);
    for (double& v : a.values)
        v = d(rng);
    for (auto kind : {ObjectiveKind::compliance, ObjectiveKind::energy}) {
        const auto sols = solve(a, make_case2(g), kind);
        const double sign = kind == ObjectiveKind::compliance ? 1.0 : -1.0;
        for (const auto& s : sols) {
            ASSERT_TRUE(s.has_adjoint);
            for (std::size_t n = 0; n < s.u.values.size(); ++n)
                EXPECT_EQ(s.p.values[n], sign * s.u.values[n]);
        }
    }
}

TEST(SolveAdjoint, ComplianceGradientProductNonNegative)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    const auto sols = solve(DensityField(g, 1.0), make_deterministic(CellField(g, 1.0)), ObjectiveKind::compliance);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        const auto& gu = sols[0].grad_u.values[c];
        const auto& gp = sols[0].grad_p.values[c];
        EXPECT_GE(gu[0] * gp[0] + gu[1] * gp[1], 0.0);
    }
}

TEST(SolveState, LinearInLoad)
{
    const GridSpec g = GridSpec::unit_square(20, 20);
    const DensityField a(g, 1.7);
    const ScenarioSet c1 = make_case1(g);
    const auto full = solve_state(a, c1);
    const auto mean = solve_state(a, make_deterministic(c1.f));
    const auto pert = solve_state(a, make_deterministic(c1.scenarios[0].xi));
    const double scale = max_abs(full[0].u.values);
    for (std::size_t n = 0; n < full[0].u.values.size(); ++n)
        EXPECT_NEAR(full[0].u.values[n], mean[0].u.values[n] + pert[0].u.values[n], 1e-9 * scale);
}

TEST(SolveState, SignSymmetryIsExact)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    const ScenarioSet c1 = make_case1(g);
    ScenarioSet only_xi{CellField(g, 0.0), c1.scenarios};
    const auto sols = solve_state(DensityField(g, 1.5), only_xi);
    for (std::size_t n = 0; n < sols[0].u.values.size(); ++n)
        EXPECT_EQ(sols[1].u.values[n], -sols[0].u.values[n]);
}

TEST(SolveState, CoefficientScaling)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    const ScenarioSet set = make_case2(g);
    const auto s1 = solve_state(DensityField(g, 1.0), set);
    const auto s3 = solve_state(DensityField(g, 3.0), set);
    for (std::size_t k = 0; k < s1.size(); ++k) {
        const double scale = max_abs(s1[k].u.values);
        for (std::size_t n = 0; n < s1[k].u.values.size(); ++n)
            EXPECT_NEAR(s3[k].u.values[n], s1[k].u.values[n] / 3.0, 1e-9 * scale);
    }
}

TEST(SolveState, ParallelAndSequentialAgreeBitwise)
{
    const GridSpec g = GridSpec::unit_square(16, 16);
    SolverOptions seq;
    seq.parallel = false;
    const auto a = solve_state(DensityField(g, 1.2), make_case1(g));
    const auto b = solve_state(DensityField(g, 1.2), make_case1(g), seq);
    for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_EQ(a[k].u.values, b[k].u.values);
}
