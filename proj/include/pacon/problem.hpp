#pragma once

#include "pacon/linalg.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>

namespace pacon {

/// The contract a parameterized nonlinear system F(u, lambda) = 0 implements
/// so the continuation engine can drive it. residual and branch_measure are
/// required; missing Jacobians are replaced by central finite differences.
/// Implementations must be pure (identical inputs give identical outputs).
struct ProblemDefinition {
    Eigen::Index state_dim = 0;
    std::string name;
    std::function<Vector(const Vector&, double)> residual;
    std::function<Matrix(const Vector&, double)> jacobian_u;         // optional
    std::function<Vector(const Vector&, double)> jacobian_lambda;    // optional
    std::function<double(const Vector&, double)> branch_measure;
    std::function<double(const Vector&, double)> secondary_measure;  // optional
    std::array<double, 2> lambda_range{0.0, 1.0};

    bool has_jacobian_u() const { return static_cast<bool>(jacobian_u); }
    bool has_jacobian_lambda() const { return static_cast<bool>(jacobian_lambda); }
    double measure2(const Vector& u, double lambda) const {
        return secondary_measure ? secondary_measure(u, lambda) : branch_measure(u, lambda);
    }
};

/// A converged state/parameter pair with its diagnostics. residual_norm is
/// the inf-norm of residual(u, lambda), recomputed at construction.
struct SolutionPoint {
    Vector u;
    double lambda = 0.0;
    double residual_norm = 0.0;
    double measure = 0.0;
};

/// Unit direction (du, dlambda) along a branch: |du|^2 + dlambda^2 = 1.
struct TangentVector {
    Vector du;
    double dlambda = 0.0;

    double norm() const { return std::sqrt(du.squaredNorm() + dlambda * dlambda); }
    double dot(const TangentVector& other) const {
        return du.dot(other.du) + dlambda * other.dlambda;
    }
    TangentVector normalized() const {
        const double n = norm();
        return {du / n, dlambda / n};
    }
    TangentVector operator-() const { return {-du, -dlambda}; }
};

/// Evaluate residual and measure at (u, lambda) and package a SolutionPoint.
SolutionPoint evaluate_point(const ProblemDefinition& p, const Vector& u, double lambda);

/// Central-difference Jacobian d residual / d u, step 1e-6 * (1 + |u_j|) per
/// column. Throws NonFiniteError if any residual evaluation is non-finite.
Matrix fd_jacobian_u(const ProblemDefinition& p, const Vector& u, double lambda);

/// Central-difference parameter derivative, step 1e-6 * (1 + |lambda|).
Vector fd_jacobian_lambda(const ProblemDefinition& p, const Vector& u, double lambda);

/// Analytic Jacobian when supplied, finite differences otherwise.
Matrix jacobian_u_or_fd(const ProblemDefinition& p, const Vector& u, double lambda);
Vector jacobian_lambda_or_fd(const ProblemDefinition& p, const Vector& u, double lambda);

/// Outcome of a Newton correction. On failure the last iterate and its
/// residual norm are preserved for step-control decisions upstream.
struct NewtonResult {
    bool converged = false;
    SolutionPoint point;       // valid only when converged
    Vector last_iterate;
    double last_residual_norm = 0.0;
    int iterations = 0;
};

/// Full-step Newton at fixed lambda (natural-parameter corrector):
/// success iff |residual|_inf <= tol within max_iter iterations.
NewtonResult newton_correct(const ProblemDefinition& p, const Vector& u0, double lambda,
                            double tol, int max_iter);

/// Compare supplied analytic Jacobians with central differences at
/// deterministic pseudo-random probes (u entries in [0.5, 3], lambda in the
/// problem's declared range). Probes where the residual leaves the problem's
/// admissible domain are skipped. Returns the worst relative mismatch.
double validate_jacobians(const ProblemDefinition& p, int probes = 20, unsigned seed = 20240801);

}  // namespace pacon
