#include "pacon/problem.hpp"

#include <cmath>
#include <random>

namespace pacon {

namespace {

Vector checked_residual(const ProblemDefinition& p, const Vector& u, double lambda,
                        const char* who) {
    Vector r = p.residual(u, lambda);
    if (!r.allFinite()) throw NonFiniteError(std::string(who) + ": residual is non-finite");
    return r;
}

}  // namespace

SolutionPoint evaluate_point(const ProblemDefinition& p, const Vector& u, double lambda) {
    SolutionPoint pt;
    pt.u = u;
    pt.lambda = lambda;
    pt.residual_norm = checked_residual(p, u, lambda, "evaluate_point").lpNorm<Eigen::Infinity>();
    pt.measure = p.branch_measure(u, lambda);
    return pt;
}

Matrix fd_jacobian_u(const ProblemDefinition& p, const Vector& u, double lambda) {
    const Eigen::Index n = p.state_dim;
    Matrix jac(n, n);
    Vector probe = u;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(u(j)));
        probe(j) = u(j) + h;
        const Vector plus = checked_residual(p, probe, lambda, "fd_jacobian_u");
        probe(j) = u(j) - h;
        const Vector minus = checked_residual(p, probe, lambda, "fd_jacobian_u");
        probe(j) = u(j);
        jac.col(j) = (plus - minus) / (2.0 * h);
    }
    return jac;
}

Vector fd_jacobian_lambda(const ProblemDefinition& p, const Vector& u, double lambda) {
    const double h = 1e-6 * (1.0 + std::abs(lambda));
    const Vector plus = checked_residual(p, u, lambda + h, "fd_jacobian_lambda");
    const Vector minus = checked_residual(p, u, lambda - h, "fd_jacobian_lambda");
    return (plus - minus) / (2.0 * h);
}

Matrix jacobian_u_or_fd(const ProblemDefinition& p, const Vector& u, double lambda) {
    return p.has_jacobian_u() ? p.jacobian_u(u, lambda) : fd_jacobian_u(p, u, lambda);
}

Vector jacobian_lambda_or_fd(const ProblemDefinition& p, const Vector& u, double lambda) {
    return p.has_jacobian_lambda() ? p.jacobian_lambda(u, lambda) : fd_jacobian_lambda(p, u, lambda);
}

NewtonResult newton_correct(const ProblemDefinition& p, const Vector& u0, double lambda,
                            double tol, int max_iter) {
    NewtonResult out;
    Vector u = u0;
    Vector res = checked_residual(p, u, lambda, "newton_correct");
    double norm = res.lpNorm<Eigen::Infinity>();
    for (int it = 0; it <= max_iter; ++it) {
        if (norm <= tol) {
            out.converged = true;
            out.iterations = it;
            out.point.u = u;
            out.point.lambda = lambda;
            out.point.residual_norm = norm;
            out.point.measure = p.branch_measure(u, lambda);
            out.last_iterate = u;
            out.last_residual_norm = norm;
            return out;
        }
        if (it == max_iter) break;
        const Matrix jac = jacobian_u_or_fd(p, u, lambda);
        u += lu_solve(jac, -res);
        res = checked_residual(p, u, lambda, "newton_correct");
        norm = res.lpNorm<Eigen::Infinity>();
    }
    out.converged = false;
    out.iterations = max_iter;
    out.last_iterate = u;
    out.last_residual_norm = norm;
    return out;
}

double validate_jacobians(const ProblemDefinition& p, int probes, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u_dist(0.5, 3.0);
    std::uniform_real_distribution<double> l_dist(p.lambda_range[0], p.lambda_range[1]);
    double worst = 0.0;
    int used = 0;
    for (int k = 0; k < probes; ++k) {
        Vector u(p.state_dim);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = u_dist(rng);
        const double lambda = l_dist(rng);
        try {
            if (p.has_jacobian_u()) {
                const Matrix a = p.jacobian_u(u, lambda);
                const Matrix d = fd_jacobian_u(p, u, lambda);
                worst = std::max(worst, (a - d).cwiseAbs().maxCoeff() /
                                            std::max(1.0, a.cwiseAbs().maxCoeff()));
            }
            if (p.has_jacobian_lambda()) {
                const Vector a = p.jacobian_lambda(u, lambda);
                const Vector d = fd_jacobian_lambda(p, u, lambda);
                worst = std::max(worst, (a - d).cwiseAbs().maxCoeff() /
                                            std::max(1.0, a.cwiseAbs().maxCoeff()));
            }
            ++used;
        } catch (const NonFiniteError&) {
            // Probe outside the problem's admissible domain: skip.
        }
    }
    if (used == 0) throw std::invalid_argument("validate_jacobians: no admissible probes");
    return worst;
}

}  // namespace pacon
