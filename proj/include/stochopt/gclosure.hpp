#pragma once

// G-closure of the isotropic phases alpha*I and beta*I in two dimensions,
// rank-one laminates, and the pointwise optimality residual of a design.

#include "stochopt/errors.hpp"
#include "stochopt/grid_fem.hpp"
#include "stochopt/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace stochopt {

struct PhasePair {
    double alpha = 1.0;
    double beta = 2.0;

    PhasePair() = default;
    PhasePair(double a, double b) : alpha(a), beta(b)
    {
        if (!(a > 0.0) || !(a <= b))
            throw InvalidInput("PhasePair: need 0 < alpha <= beta");
    }
};

/// 2x2 symmetric matrix [[a11, a12], [a12, a22]].
struct SymmetricTensor2 {
    double a11 = 0.0;
    double a22 = 0.0;
    double a12 = 0.0;

    static SymmetricTensor2 diag(double d1, double d2) { return {d1, d2, 0.0}; }
    static SymmetricTensor2 scalar(double s) { return {s, s, 0.0}; }

    [[nodiscard]] double trace() const noexcept { return a11 + a22; }
    [[nodiscard]] double det() const noexcept { return a11 * a22 - a12 * a12; }

    /// Ascending eigenvalues from the trace/determinant formula.
    [[nodiscard]] std::pair<double, double> eigenvalues() const noexcept
    {
        const double mean = 0.5 * (a11 + a22);
        const double half_diff = 0.5 * (a11 - a22);
        const double r = std::hypot(half_diff, a12);
        return {mean - r, mean + r};
    }

    /// Unit eigenvector of the largest eigenvalue.
    [[nodiscard]] Vec2 principal_vector() const noexcept
    {
        const double half_diff = 0.5 * (a11 - a22);
        const double r = std::hypot(half_diff, a12);
        if (r == 0.0)
            return {1.0, 0.0};
        // Angle of the principal axis: tan(2 phi) = 2 a12 / (a11 - a22).
        const double phi = 0.5 * std::atan2(a12, half_diff);
        return {std::cos(phi), std::sin(phi)};
    }

    [[nodiscard]] Vec2 apply(const Vec2& v) const noexcept
    {
        return {a11 * v[0] + a12 * v[1], a12 * v[0] + a22 * v[1]};
    }
};

namespace detail {

inline void check_theta(double theta)
{
    if (!(theta >= 0.0 && theta <= 1.0))
        throw InvalidInput("volume fraction theta must lie in [0, 1]");
}

inline double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }

} // namespace detail

/// Harmonic mean (theta/alpha + (1-theta)/beta)^-1.
inline double lambda_minus(double theta, const PhasePair& ph)
{
    detail::check_theta(theta);
    return 1.0 / (theta / ph.alpha + (1.0 - theta) / ph.beta);
}

/// Arithmetic mean theta*alpha + (1-theta)*beta.
inline double lambda_plus(double theta, const PhasePair& ph)
{
    detail::check_theta(theta);
    return theta * ph.alpha + (1.0 - theta) * ph.beta;
}

/// Slack of each G-closure condition; a condition holds when its slack is
/// >= -tol (relative for the trace sums).
struct GThetaReport {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double lower_trace_lhs = 0.0; ///< sum 1/(lambda_i - alpha)
    double lower_trace_rhs = 0.0;
    double upper_trace_lhs = 0.0; ///< sum 1/(beta - lambda_i)
    double upper_trace_rhs = 0.0;
    bool eigen_bounds = false;
    bool lower_trace = false;
    bool upper_trace = false;

    [[nodiscard]] bool member() const noexcept { return eigen_bounds && lower_trace && upper_trace; }
};

namespace detail {

inline bool trace_ok(double lhs, double rhs, double tol)
{
    if (std::isinf(lhs))
        return std::isinf(rhs);
    return lhs <= rhs + tol * std::max(1.0, std::abs(rhs));
}

/// sum_i 1/(lambda_i - shift) with 1/0 read as +inf.
inline double reciprocal_sum(double l1, double l2, double shift, double sign, double tol)
{
    double s = 0.0;
    for (double l : {l1, l2}) {
        const double d = sign * (l - shift);
        if (d <= tol * std::max(1.0, std::abs(shift)))
            return std::numeric_limits<double>::infinity();
        s += 1.0 / d;
    }
    return s;
}

} // namespace detail

inline GThetaReport g_theta_report(const SymmetricTensor2& M, double theta, const PhasePair& ph, double tol)
{
    detail::check_theta(theta);
    GThetaReport rep;
    const auto [l1, l2] = M.eigenvalues();
    rep.lambda_min = l1;
    rep.lambda_max = l2;
    const double lm = lambda_minus(theta, ph);
    const double lp = lambda_plus(theta, ph);
    const double scale = std::max(1.0, ph.beta);

    rep.eigen_bounds = l1 >= lm - tol * scale && l2 <= lp + tol * scale;

    // Single isotropic tensor when theta is 0 or 1 or the phases coincide.
    if (theta == 0.0 || theta == 1.0 || ph.alpha == ph.beta) {
        const double iso = theta == 1.0 ? ph.alpha : ph.beta;
        const double target = ph.alpha == ph.beta ? ph.alpha : iso;
        const bool equal = std::abs(l1 - target) <= tol * scale && std::abs(l2 - target) <= tol * scale;
        rep.eigen_bounds = rep.lower_trace = rep.upper_trace = equal;
        return rep;
    }

    constexpr double d = 2.0;
    rep.lower_trace_lhs = detail::reciprocal_sum(l1, l2, ph.alpha, 1.0, tol);
    rep.lower_trace_rhs = 1.0 / (lm - ph.alpha) + (d - 1.0) / (lp - ph.alpha);
    rep.upper_trace_lhs = detail::reciprocal_sum(l1, l2, ph.beta, -1.0, tol);
    rep.upper_trace_rhs = 1.0 / (ph.beta - lm) + (d - 1.0) / (ph.beta - lp);
    rep.lower_trace = detail::trace_ok(rep.lower_trace_lhs, rep.lower_trace_rhs, tol);
    rep.upper_trace = detail::trace_ok(rep.upper_trace_lhs, rep.upper_trace_rhs, tol);
    return rep;
}

/// Membership in G_theta: eigenvalues within [lambda-, lambda+] and both
/// reciprocal trace bounds.
inline bool in_g_theta(const SymmetricTensor2& M, double theta, const PhasePair& ph, double tol = 1e-10)
{
    return g_theta_report(M, theta, ph, tol).member();
}

/// lambda- n(x)n + lambda+ (I - n(x)n).
inline SymmetricTensor2 make_laminate(double theta, const PhasePair& ph, const Vec2& n)
{
    const double len = detail::norm(n);
    if (len == 0.0)
        throw InvalidInput("make_laminate: lamination normal must be nonzero");
    if (std::abs(len - 1.0) > 1e-12)
        throw InvalidInput("make_laminate: lamination normal must be a unit vector");
    const double lm = lambda_minus(theta, ph);
    const double lp = lambda_plus(theta, ph);
    const double dl = lm - lp;
    return {lp + dl * n[0] * n[0], lp + dl * n[1] * n[1], dl * n[0] * n[1]};
}

/// Volume fraction of phase alpha for which a equals lambda+ (compliance)
/// or lambda- (energy).
inline double theta_from_a(double a, ObjectiveKind kind, const PhasePair& ph)
{
    if (!(a >= ph.alpha && a <= ph.beta))
        throw InvalidInput("theta_from_a: coefficient outside [alpha, beta]");
    if (ph.alpha == ph.beta)
        return 0.0;
    const double t = (ph.beta - a) / (ph.beta - ph.alpha);
    return kind == ObjectiveKind::compliance ? t : (ph.alpha / a) * t;
}

inline double lambda_theta(double theta, ObjectiveKind kind, const PhasePair& ph)
{
    return kind == ObjectiveKind::compliance ? lambda_plus(theta, ph) : lambda_minus(theta, ph);
}

inline constexpr double kResidualFloor = 1e-14;

/// Per-cell relative residual of M* grad u_k = lambda_theta grad u_k, with
/// M* the rank-one laminate whose normal is orthogonal (compliance) or
/// parallel (energy) to the principal direction of sum_k w_k grad u_k (x) grad u_k.
inline std::vector<double> optimality_residual(const DensityField& a, const std::vector<ScenarioSolution>& sols,
                                               ObjectiveKind kind, const PhasePair& ph)
{
    const GridSpec& g = a.grid;
    std::vector<double> out(g.cell_count(), 0.0);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        const double ac = std::clamp(a.values[c], ph.alpha, ph.beta);
        const double theta = theta_from_a(ac, kind, ph);
        const double lam = lambda_theta(theta, kind, ph);

        SymmetricTensor2 S;
        for (const auto& s : sols) {
            const Vec2& gu = s.grad_u.values[c];
            S.a11 += s.weight * gu[0] * gu[0];
            S.a22 += s.weight * gu[1] * gu[1];
            S.a12 += s.weight * gu[0] * gu[1];
        }
        const Vec2 v = S.principal_vector();
        const Vec2 n = kind == ObjectiveKind::compliance ? Vec2{-v[1], v[0]} : v;
        const SymmetricTensor2 M = make_laminate(theta, ph, n);

        double num = 0.0, den = 0.0;
        for (const auto& s : sols) {
            const Vec2& gu = s.grad_u.values[c];
            const Vec2 Mg = M.apply(gu);
            num += s.weight * std::hypot(Mg[0] - lam * gu[0], Mg[1] - lam * gu[1]);
            den += s.weight * detail::norm(gu);
        }
        out[c] = num / (den + kResidualFloor);
    }
    return out;
}

} // namespace stochopt
