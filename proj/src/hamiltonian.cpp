#include "pacon/hamiltonian.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace pacon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPsiOverflowGuard = 1e6;

// psi^a via exp(a ln psi); the conformal factor must stay positive, and
// anything past the overflow guard aborts the evaluation so the caller can
// retry with a smaller continuation step.
double guarded_pow(double psi, double a) {
    if (!(psi > 0.0)) throw NonFiniteError("hamiltonian: psi must stay positive");
    if (psi > kPsiOverflowGuard) throw NonFiniteError("hamiltonian: psi overflow guard");
    return std::pow(psi, a);
}

std::string exponent_tag(double a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", a);
    return buf;
}

using State6 = Eigen::Matrix<double, 6, 1>;

// y = (psi, psi', psi_p, psi_p', psi_rho, psi_rho')
State6 shoot_rhs(double r, const State6& y, double rho, double a, double h) {
    const double psi = y(0);
    const double pa = guarded_pow(psi, a);
    const double pam1 = std::pow(psi, a - 1.0);
    const double g = kTwoPi * rho * pa;        // nonlinear term
    const double gp = kTwoPi * rho * a * pam1; // its psi-derivative
    const double src = kTwoPi * pa;            // rho-derivative source
    State6 d;
    d(0) = y(1);
    d(2) = y(3);
    d(4) = y(5);
    if (r < h) {
        // Regularized first step: laplacian at the center is 3 psi''(0).
        d(1) = -g / 3.0;
        d(3) = -(gp * y(2)) / 3.0;
        d(5) = -(src + gp * y(4)) / 3.0;
    } else {
        const double two_over_r = 2.0 / r;
        d(1) = -two_over_r * y(1) - g;
        d(3) = -two_over_r * y(3) - gp * y(2);
        d(5) = -two_over_r * y(5) - src - gp * y(4);
    }
    return d;
}

template <typename NodeHook>
ShootResult integrate(double p, double rho, const HamiltonianConfig& cfg, NodeHook&& hook) {
    cfg.validate();
    const int n = cfg.rk_steps;
    const double h = 1.0 / n;
    const double a = cfg.exponent;
    State6 y;
    y << p, 0.0, 1.0, 0.0, 0.0, 0.0;
    hook(0.0, y(0));
    double l2_accum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = static_cast<double>(i) / n;
        const double psi_left = y(0);
        const State6 k1 = shoot_rhs(r, y, rho, a, h);
        const State6 k2 = shoot_rhs(r + 0.5 * h, y + 0.5 * h * k1, rho, a, h);
        const State6 k3 = shoot_rhs(r + 0.5 * h, y + 0.5 * h * k2, rho, a, h);
        const double r_next = static_cast<double>(i + 1) / n;
        const State6 k4 = shoot_rhs(r_next, y + h * k3, rho, a, h);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw NonFiniteError("shoot: integration produced NaN/Inf");
        l2_accum += 0.5 * h * (psi_left * psi_left + y(0) * y(0));
        hook(r_next, y(0));
    }
    ShootResult out;
    out.boundary_mismatch = y(0) - 1.0;
    out.d_p = y(2);
    out.d_rho = y(4);
    out.psi_l2 = std::sqrt(l2_accum);
    return out;
}

}  // namespace

void HamiltonianConfig::validate() const {
    if (!(exponent >= 1.0)) throw std::invalid_argument("HamiltonianConfig: exponent must be >= 1");
    if (mesh_m < 16) throw std::invalid_argument("HamiltonianConfig: mesh_m must be >= 16");
    if (rk_steps < 64) throw std::invalid_argument("HamiltonianConfig: rk_steps must be >= 64");
}

ShootResult shoot(double p, double rho, const HamiltonianConfig& cfg) {
    return integrate(p, rho, cfg, [](double, double) {});
}

std::vector<std::array<double, 2>> shoot_profile(double p, double rho,
                                                 const HamiltonianConfig& cfg) {
    std::vector<std::array<double, 2>> profile;
    profile.reserve(cfg.rk_steps + 1);
    integrate(p, rho, cfg, [&](double r, double psi) { profile.push_back({r, psi}); });
    return profile;
}

Vector hamiltonian_fd_residual(const Vector& psi, double rho, const HamiltonianConfig& cfg) {
    cfg.validate();
    const int m = cfg.mesh_m;
    if (psi.size() != m + 1) throw std::invalid_argument("fd_residual: state size != M+1");
    const double a = cfg.exponent;
    const double m2 = static_cast<double>(m) * m;  // 1/h^2
    Vector res(m + 1);
    res(0) = 6.0 * (psi(1) - psi(0)) * m2 + kTwoPi * rho * guarded_pow(psi(0), a);
    for (int j = 1; j < m; ++j) {
        const double diff2 = (psi(j + 1) - 2.0 * psi(j) + psi(j - 1)) * m2;
        const double conv = (psi(j + 1) - psi(j - 1)) * m2 / j;  // (2/r_j) * central difference
        res(j) = diff2 + conv + kTwoPi * rho * guarded_pow(psi(j), a);
    }
    res(m) = psi(m) - 1.0;
    return res;
}

Matrix hamiltonian_fd_jacobian_u(const Vector& psi, double rho, const HamiltonianConfig& cfg) {
    cfg.validate();
    const int m = cfg.mesh_m;
    if (psi.size() != m + 1) throw std::invalid_argument("fd_jacobian_u: state size != M+1");
    const double a = cfg.exponent;
    const double m2 = static_cast<double>(m) * m;
    Matrix jac = Matrix::Zero(m + 1, m + 1);
    jac(0, 0) = -6.0 * m2 + kTwoPi * rho * a * guarded_pow(psi(0), a - 1.0);
    jac(0, 1) = 6.0 * m2;
    for (int j = 1; j < m; ++j) {
        jac(j, j - 1) = m2 - m2 / j;
        jac(j, j) = -2.0 * m2 + kTwoPi * rho * a * guarded_pow(psi(j), a - 1.0);
        jac(j, j + 1) = m2 + m2 / j;
    }
    jac(m, m) = 1.0;
    return jac;
}

Vector hamiltonian_fd_jacobian_rho(const Vector& psi, double rho, const HamiltonianConfig& cfg) {
    cfg.validate();
    (void)rho;
    const int m = cfg.mesh_m;
    if (psi.size() != m + 1) throw std::invalid_argument("fd_jacobian_rho: state size != M+1");
    Vector d(m + 1);
    for (int j = 0; j < m; ++j) d(j) = kTwoPi * guarded_pow(psi(j), cfg.exponent);
    d(m) = 0.0;
    return d;
}

ProblemDefinition shooting_problem(const HamiltonianConfig& cfg) {
    cfg.validate();
    ProblemDefinition p;
    p.state_dim = 1;
    p.name = "hamiltonian-shooting-a" + exponent_tag(cfg.exponent);
    p.lambda_range = cfg.rho_range;
    p.residual = [cfg](const Vector& u, double rho) {
        Vector r(1);
        r(0) = shoot(u(0), rho, cfg).boundary_mismatch;
        return r;
    };
    p.jacobian_u = [cfg](const Vector& u, double rho) {
        Matrix j(1, 1);
        j(0, 0) = shoot(u(0), rho, cfg).d_p;
        return j;
    };
    p.jacobian_lambda = [cfg](const Vector& u, double rho) {
        Vector j(1);
        j(0) = shoot(u(0), rho, cfg).d_rho;
        return j;
    };
    p.branch_measure = [](const Vector& u, double) { return u(0); };
    p.secondary_measure = [cfg](const Vector& u, double rho) {
        return shoot(u(0), rho, cfg).psi_l2;
    };
    return p;
}

ProblemDefinition fd_problem(const HamiltonianConfig& cfg) {
    cfg.validate();
    ProblemDefinition p;
    p.state_dim = cfg.mesh_m + 1;
    p.name = "hamiltonian-fd-a" + exponent_tag(cfg.exponent);
    p.lambda_range = cfg.rho_range;
    p.residual = [cfg](const Vector& u, double rho) {
        return hamiltonian_fd_residual(u, rho, cfg);
    };
    p.jacobian_u = [cfg](const Vector& u, double rho) {
        return hamiltonian_fd_jacobian_u(u, rho, cfg);
    };
    p.jacobian_lambda = [cfg](const Vector& u, double rho) {
        return hamiltonian_fd_jacobian_rho(u, rho, cfg);
    };
    p.branch_measure = [](const Vector& u, double) { return u(0); };
    p.secondary_measure = [cfg](const Vector& u, double) {
        const double h = 1.0 / cfg.mesh_m;
        double acc = 0.5 * (u(0) * u(0) + u(cfg.mesh_m) * u(cfg.mesh_m));
        for (int j = 1; j < cfg.mesh_m; ++j) acc += u(j) * u(j);
        return std::sqrt(h * acc);
    };
    return p;
}

}  // namespace pacon
