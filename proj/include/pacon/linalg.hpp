#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace pacon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

/// Linear solve hit a pivot (or a whole system) that is numerically singular.
struct SingularError : std::runtime_error {
    explicit SingularError(const std::string& what) : std::runtime_error(what) {}
};

/// A residual or state evaluation produced NaN/Inf (or violated a domain guard).
struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

/// An N x N core bordered by one extra column, row and corner scalar:
///
///     [ core          right_border ]
///     [ bottom_border^T    corner  ]
///
/// This is the Newton matrix of pseudo-arclength continuation: core = F_u,
/// right_border = F_lambda, bottom row = the tangent constraint.
struct BorderedSystem {
    Matrix core;
    Vector right_border;
    Vector bottom_border;
    double corner = 0.0;

    Eigen::Index core_dim() const { return core.rows(); }
    /// The assembled (N+1) x (N+1) dense matrix.
    Matrix assembled() const;
};

/// Relative pivot threshold below which LU factorizations are declared singular.
inline constexpr double kPivotRelTol = 1e-14;

/// Solve A x = b by LU with partial pivoting. Throws SingularError when a
/// pivot magnitude falls below kPivotRelTol times the largest entry of A.
Vector lu_solve(const MatrixRef& A, const VectorRef& b);

/// Solve the full (N+1) system by block elimination with an LU of the core
/// (the bordering algorithm); falls back to one-shot LU of the assembled
/// matrix when the core itself is singular but the bordered matrix is not.
Vector bordered_solve(const BorderedSystem& sys, const VectorRef& rhs);

/// Smallest singular value of a square A and its right singular vector
/// (unit 2-norm). Inverse iteration on A^T A with shift 0; falls back to a
/// full SVD if the factorization fails or the iteration stagnates past 100
/// sweeps. sigma_min = 0 is reported through the value, never an error.
std::pair<double, Vector> smallest_singular_pair(const MatrixRef& A);

/// Largest singular value estimated by power iteration on A^T A.
double largest_singular_value(const MatrixRef& A);

/// Number of singular values sigma_i <= rel_tol * sigma_max, with sigma_max
/// from power iteration. A zero matrix (sigma_max = 0) counts every
/// direction as null.
int null_space_dimension(const MatrixRef& A, double rel_tol = 1e-6);

/// Number of singular values of A at or below an absolute threshold.
/// Classification helper: the caller supplies the scale.
int count_singular_values_below(const MatrixRef& A, double threshold);

/// Sign (+1/0/-1) and log of |det A|, overflow-free.
std::pair<int, double> signed_log_det(const MatrixRef& A);

}  // namespace pacon
