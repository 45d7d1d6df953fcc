#pragma once

#include "pacon/problem.hpp"

#include <array>
#include <vector>

namespace pacon {

/// Uniform mesh on [0, 1] with nodes r_j = j/M; r_0 = 0 and r_M = 1 exactly.
struct RadialMesh {
    int segments = 0;

    explicit RadialMesh(int m) : segments(m) {}
    int node_count() const { return segments + 1; }
    double spacing() const { return 1.0 / segments; }
    double node(int j) const { return static_cast<double>(j) / segments; }
};

/// Parameters of the reduced Hamiltonian constraint
///     laplacian(psi) + 2 pi rho psi^a = 0  on the unit ball,
///     psi'(0) = 0,  psi(1) = 1,
/// with rho playing the engine's continuation parameter lambda.
struct HamiltonianConfig {
    double exponent = 5.0;                     // nonlinearity power a >= 1
    int mesh_m = 200;                          // FD segments, >= 16
    int rk_steps = 1024;                       // shooting integrator steps, >= 64
    std::array<double, 2> rho_range{0.0, 1.4};

    void validate() const;  // throws std::invalid_argument
};

/// Joint state of the shooting IVP at one radius: the conformal factor and
/// the two variational sensitivities, each with its radial derivative.
/// Initial condition at r = 0 is (p, 0, 1, 0, 0, 0).
struct ShootingState {
    double psi = 0.0;
    double dpsi = 0.0;
    double psi_p = 0.0;
    double dpsi_p = 0.0;
    double psi_rho = 0.0;
    double dpsi_rho = 0.0;
};

/// Output of one shooting integration from r = 0 to r = 1.
struct ShootResult {
    double boundary_mismatch = 0.0;  // F(p, rho) = psi(1) - 1
    double d_p = 0.0;                // dF/dp = psi_p(1)
    double d_rho = 0.0;              // dF/drho = psi_rho(1)
    double psi_l2 = 0.0;             // trapezoidal sqrt(integral of psi^2)
};

/// Classical fixed-step RK4 on the joint 6-dimensional system. The 2/r
/// singularity is removed by the regularized first step: stages at r < h use
/// the limit form psi'' = -(2 pi rho psi^a)/3 (laplacian at the center equals
/// 3 psi''(0)), and likewise for the variational components.
/// Throws NonFiniteError if psi leaves (0, 1e6] during integration.
ShootResult shoot(double p, double rho, const HamiltonianConfig& cfg);

/// Same integration, recording (r, psi) at every RK node.
std::vector<std::array<double, 2>> shoot_profile(double p, double rho,
                                                 const HamiltonianConfig& cfg);

/// Finite-difference residual on the uniform mesh. Interior rows use the
/// second-order radial stencil; row 0 is the regularized center
/// 6 (psi_1 - psi_0)/h^2 + 2 pi rho psi_0^a; row M is the Dirichlet row
/// psi_M - 1.
Vector hamiltonian_fd_residual(const Vector& psi, double rho, const HamiltonianConfig& cfg);

/// Analytic Jacobians of the FD residual.
Matrix hamiltonian_fd_jacobian_u(const Vector& psi, double rho, const HamiltonianConfig& cfg);
Vector hamiltonian_fd_jacobian_rho(const Vector& psi, double rho, const HamiltonianConfig& cfg);

/// One-dimensional realization: residual F(p, rho) = psi(1, p, rho) - 1 with
/// analytic derivatives from the variational equations. Measure is p = psi(0).
ProblemDefinition shooting_problem(const HamiltonianConfig& cfg);

/// (M+1)-dimensional realization wrapping the FD residual and its analytic
/// Jacobians. Measure is the center value psi_0; the h-weighted discrete
/// L2 norm is the secondary measure.
ProblemDefinition fd_problem(const HamiltonianConfig& cfg);

}  // namespace pacon
