#pragma once

#include "stochopt/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace stochopt {

/// Symmetric positive-definite matrix in compressed row storage.
///
/// Column indices within a row are strictly increasing and the sparsity
/// pattern is structurally symmetric. The matrix does not check positive
/// definiteness; that is the assembler's responsibility.
class SparseSpdMatrix {
public:
    SparseSpdMatrix() = default;

    SparseSpdMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                    std::vector<std::size_t> columns, std::vector<double> values)
        : n_(n), row_offsets_(std::move(row_offsets)), columns_(std::move(columns)),
          values_(std::move(values))
    {
        if (row_offsets_.size() != n_ + 1 || columns_.size() != values_.size() ||
            row_offsets_.back() != values_.size())
            throw InvalidInput("SparseSpdMatrix: inconsistent CSR arrays");
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
                if (columns_[k] >= n_)
                    throw InvalidInput("SparseSpdMatrix: column index out of range");
                if (k > row_offsets_[r] && columns_[k] <= columns_[k - 1])
                    throw InvalidInput("SparseSpdMatrix: row columns not strictly increasing");
            }
    }

    static SparseSpdMatrix identity(std::size_t n) { return diagonal(std::vector<double>(n, 1.0)); }

    static SparseSpdMatrix diagonal(std::span<const double> d)
    {
        const std::size_t n = d.size();
        std::vector<std::size_t> offsets(n + 1), cols(n);
        for (std::size_t i = 0; i < n; ++i) {
            offsets[i + 1] = i + 1;
            cols[i] = i;
        }
        return {n, std::move(offsets), std::move(cols), std::vector<double>(d.begin(), d.end())};
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return n_; }
    [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    [[nodiscard]] std::span<const std::size_t> columns() const noexcept { return columns_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Entry (r, c), or 0 when outside the pattern.
    [[nodiscard]] double at(std::size_t r, std::size_t c) const
    {
        for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
            if (columns_[k] == c)
                return values_[k];
        return 0.0;
    }

    [[nodiscard]] std::vector<double> diagonal_entries() const
    {
        std::vector<double> d(n_, 0.0);
        for (std::size_t r = 0; r < n_; ++r)
            d[r] = at(r, r);
        return d;
    }

    /// y = A x, row-sequential so results are bit-reproducible.
    void multiply(std::span<const double> x, std::span<double> y) const
    {
        for (std::size_t r = 0; r < n_; ++r) {
            double s = 0.0;
            for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
                s += values_[k] * x[columns_[k]];
            y[r] = s;
        }
    }

    [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const
    {
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> columns_;
    std::vector<double> values_;
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

struct CgOptions {
    double tol = 1e-10;
    /// 0 selects 20 * dimension.
    std::size_t max_iter = 0;
    /// When set, receives sqrt(r^T M^-1 r) after every iteration. Not monotone in
    /// general; the energy norm of the error is.
    std::vector<double>* preconditioned_residuals = nullptr;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

} // namespace detail

/// Jacobi-preconditioned conjugate gradients for K x = b.
///
/// Stops once the true residual satisfies ||K x - b|| <= tol ||b||. A
/// report with converged == false is returned (not thrown) when the
/// iteration budget runs out.
inline std::pair<std::vector<double>, SolveReport>
cg_solve(const SparseSpdMatrix& K, std::span<const double> b, const CgOptions& opts)
{
    const double tol = opts.tol;
    std::size_t max_iter = opts.max_iter;
    const std::size_t n = K.dimension();
    if (b.size() != n)
        throw InvalidInput("cg_solve: right-hand side size mismatch");
    if (!(tol > 0.0))
        throw InvalidInput("cg_solve: tolerance must be positive");
    if (max_iter == 0)
        max_iter = 20 * n;

    std::vector<double> x(n, 0.0);
    SolveReport report;
    const double bnorm = detail::norm2(b);
    if (bnorm == 0.0) {
        report.converged = true;
        return {std::move(x), report};
    }

    std::vector<double> inv_diag = K.diagonal_entries();
    for (double& d : inv_diag) {
        if (!(d > 0.0))
            throw InvalidInput("cg_solve: matrix diagonal must be positive");
        d = 1.0 / d;
    }

    std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
    const double target = tol * bnorm;

    // The recurrence residual can drift from the true one; restart from the
    // current iterate when that happens.
    bool breakdown = false;
    while (true) {
        K.multiply(x, q);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = b[i] - q[i];
        double rnorm = detail::norm2(r);
        if (rnorm <= target || report.iterations >= max_iter || breakdown) {
            report.relative_residual = rnorm / bnorm;
            report.converged = rnorm <= target;
            return {std::move(x), report};
        }

        for (std::size_t i = 0; i < n; ++i)
            z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = detail::dot(r, z);

        while (rnorm > target && report.iterations < max_iter) {
            K.multiply(p, q);
            const double pq = detail::dot(p, q);
            if (!(pq > 0.0)) {
                breakdown = true;
                break;
            }
            const double step = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += step * p[i];
                r[i] -= step * q[i];
            }
            ++report.iterations;
            rnorm = detail::norm2(r);
            for (std::size_t i = 0; i < n; ++i)
                z[i] = inv_diag[i] * r[i];
            const double rz_next = detail::dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            if (opts.preconditioned_residuals)
                opts.preconditioned_residuals->push_back(std::sqrt(rz));
            for (std::size_t i = 0; i < n; ++i)
                p[i] = z[i] + beta * p[i];
        }
    }
}

inline std::pair<std::vector<double>, SolveReport>
cg_solve(const SparseSpdMatrix& K, std::span<const double> b, double tol = 1e-10,
         std::size_t max_iter = 0)
{
    return cg_solve(K, b, CgOptions{tol, max_iter});
}

} // namespace stochopt
