#include "pacon/continuation.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace pacon {

namespace {

constexpr double kRangeTestThreshold = 1e-4;  // relative range-test residual above which
                                              // F_lambda counts as outside range(F_u)
constexpr double kNullTestRelTol = 1e-6;

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

double chord_length(const SolutionPoint& a, const SolutionPoint& b) {
    const double dl = b.lambda - a.lambda;
    return std::sqrt((b.u - a.u).squaredNorm() + dl * dl);
}

TangentVector chord_direction(const SolutionPoint& a, const SolutionPoint& b) {
    TangentVector t{b.u - a.u, b.lambda - a.lambda};
    return t.normalized();
}

Matrix extended_jacobian(const ProblemDefinition& p, const SolutionPoint& at) {
    Matrix ext(p.state_dim, p.state_dim + 1);
    ext.leftCols(p.state_dim) = jacobian_u_or_fd(p, at.u, at.lambda);
    ext.col(p.state_dim) = jacobian_lambda_or_fd(p, at.u, at.lambda);
    return ext;
}

/// Sign of det of the pseudo-arclength Newton matrix at a point, 0 when it
/// could not be evaluated.
int bordered_det_sign(const ProblemDefinition& p, const SolutionPoint& at,
                      const TangentVector& t) {
    try {
        BorderedSystem sys{jacobian_u_or_fd(p, at.u, at.lambda),
                           jacobian_lambda_or_fd(p, at.u, at.lambda), t.du, t.dlambda};
        return signed_log_det(sys.assembled()).first;
    } catch (const std::exception&) {
        return 0;
    }
}

struct QuadraticFit {
    double coeff = 0.0;
    double rel_residual = 0.0;
};

// One-parameter least squares of y ~ coeff * s^power with the origin pinned.
QuadraticFit fit_monomial(const std::vector<double>& s, const std::vector<double>& y,
                          int power) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < s.size(); ++i) {
        const double w = std::pow(s[i], power);
        num += w * y[i];
        den += w * w;
    }
    QuadraticFit fit;
    if (den == 0.0) return fit;
    fit.coeff = num / den;
    double res2 = 0.0, ref2 = 0.0;
    for (size_t i = 0; i < s.size(); ++i) {
        const double w = std::pow(s[i], power);
        res2 += (y[i] - fit.coeff * w) * (y[i] - fit.coeff * w);
        ref2 += y[i] * y[i];
    }
    fit.rel_residual = ref2 > 0.0 ? std::sqrt(res2 / ref2) : 0.0;
    return fit;
}

}  // namespace

void ContinuationSettings::validate() const {
    if (!(ds_min > 0.0) || !(ds_min <= ds0) || !(ds0 <= ds_max)) {
        throw std::invalid_argument("ContinuationSettings: need 0 < ds_min <= ds0 <= ds_max");
    }
    if (!(newton_tol > 0.0)) throw std::invalid_argument("ContinuationSettings: newton_tol must be > 0");
    if (newton_max_iter < 1) throw std::invalid_argument("ContinuationSettings: newton_max_iter must be >= 1");
    if (max_steps < 1) throw std::invalid_argument("ContinuationSettings: max_steps must be >= 1");
    if (!(lambda_min < lambda_max)) throw std::invalid_argument("ContinuationSettings: empty lambda window");
    if (!(fold_tol > 0.0)) throw std::invalid_argument("ContinuationSettings: fold_tol must be > 0");
}

TangentVector tangent(const ProblemDefinition& p, const SolutionPoint& at,
                      const std::optional<TangentVector>& prev) {
    const Eigen::Index n = p.state_dim;
    const Matrix jac_u = jacobian_u_or_fd(p, at.u, at.lambda);
    const Vector jac_l = jacobian_lambda_or_fd(p, at.u, at.lambda);
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;

    if (prev) {
        BorderedSystem sys{jac_u, jac_l, prev->du, prev->dlambda};
        TangentVector t{Vector(), 0.0};
        Vector x = bordered_solve(sys, rhs);
        t.du = x.head(n);
        t.dlambda = x(n);
        t = t.normalized();
        if (t.dot(*prev) < 0.0) t = -t;
        return t;
    }

    try {
        BorderedSystem sys{jac_u, jac_l, Vector::Zero(n), 1.0};
        Vector x = bordered_solve(sys, rhs);
        TangentVector t{x.head(n), x(n)};
        t = t.normalized();
        if (t.dlambda < 0.0) t = -t;  // prefer increasing lambda
        return t;
    } catch (const SingularError&) {
        // F_u singular: take the null direction of the extended Jacobian.
        Matrix ext(n, n + 1);
        ext.leftCols(n) = jac_u;
        ext.col(n) = jac_l;
        Eigen::BDCSVD<Matrix> svd(ext, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double sigma_max = sv(0);
        // With two near-null directions the branch direction is not unique.
        if (n >= 1 && sv(n - 1) <= kNullTestRelTol * sigma_max) {
            throw SingularError("tangent: null space of [F_u, F_lambda] has dimension >= 2");
        }
        TangentVector t{svd.matrixV().col(n).head(n), svd.matrixV().col(n)(n)};
        t = t.normalized();
        if (t.dlambda < 0.0) t = -t;
        return t;
    }
}

StepResult pseudo_arclength_step(const ProblemDefinition& p, const SolutionPoint& from,
                                 const TangentVector& t, double ds,
                                 const ContinuationSettings& settings) {
    const Eigen::Index n = p.state_dim;
    StepResult out;
    Vector u = from.u + ds * t.du;
    double lambda = from.lambda + ds * t.dlambda;

    try {
        for (int it = 0; it <= settings.newton_max_iter; ++it) {
            const Vector res = p.residual(u, lambda);
            if (!res.allFinite()) return out;
            const double arc = (u - from.u).dot(t.du) + (lambda - from.lambda) * t.dlambda - ds;
            const double ext_norm = std::max(res.lpNorm<Eigen::Infinity>(), std::abs(arc));
            if (ext_norm <= settings.newton_tol) {
                out.converged = true;
                out.iterations = it;
                out.extended_residual = ext_norm;
                out.point.u = u;
                out.point.lambda = lambda;
                out.point.residual_norm = res.lpNorm<Eigen::Infinity>();
                out.point.measure = p.branch_measure(u, lambda);
                return out;
            }
            if (it == settings.newton_max_iter) {
                out.extended_residual = ext_norm;
                return out;
            }
            BorderedSystem sys{jacobian_u_or_fd(p, u, lambda),
                               jacobian_lambda_or_fd(p, u, lambda), t.du, t.dlambda};
            Vector rhs(n + 1);
            rhs.head(n) = -res;
            rhs(n) = -arc;
            const Vector delta = bordered_solve(sys, rhs);
            u += delta.head(n);
            lambda += delta(n);
        }
    } catch (const SingularError&) {
        return out;
    } catch (const NonFiniteError&) {
        return out;
    }
    return out;
}

SolutionPoint refine_fold(const ProblemDefinition& p,
                          const std::pair<SolutionPoint, SolutionPoint>& bracket,
                          const ContinuationSettings& settings) {
    const SolutionPoint& p0 = bracket.first;
    const SolutionPoint& p1 = bracket.second;
    const TangentVector dir = chord_direction(p0, p1);
    const TangentVector t0 = tangent(p, p0, dir);
    const TangentVector t1 = tangent(p, p1, t0);
    const int s0 = sign_of(t0.dlambda);
    if (s0 == 0) return p0;  // already at the fold
    if (sign_of(t1.dlambda) == s0) {
        throw std::invalid_argument("refine_fold: lambda_dot does not change sign across bracket");
    }

    // Bisection over the arclength offset from the fixed earlier point.
    double lo = 0.0;
    double hi = (p1.u - p0.u).dot(t0.du) + (p1.lambda - p0.lambda) * t0.dlambda;
    if (!(hi > 0.0)) throw std::invalid_argument("refine_fold: degenerate bracket");
    const double collapse = 1e-15 * std::max(1.0, hi);
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        const StepResult step = pseudo_arclength_step(p, p0, t0, mid, settings);
        if (!step.converged) {
            hi = mid;
        } else {
            const TangentVector tm = tangent(p, step.point, t0);
            if (std::abs(tm.dlambda) <= settings.fold_tol) return step.point;
            if (sign_of(tm.dlambda) == s0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (hi - lo <= collapse) break;
    }
    throw NoConvergenceError("refine_fold: bracket collapsed before |lambda_dot| met fold_tol");
}

namespace {

/// Refine a branch-point candidate: bisection on the sign of det of the
/// bordered tangent matrix. Returns the best localized point.
SolutionPoint refine_branch_point(const ProblemDefinition& p, const SolutionPoint& p0,
                                  const SolutionPoint& p1, const ContinuationSettings& settings) {
    const TangentVector dir = chord_direction(p0, p1);
    const TangentVector t0 = tangent(p, p0, dir);
    const int d0 = bordered_det_sign(p, p0, t0);
    double lo = 0.0;
    double hi = (p1.u - p0.u).dot(t0.du) + (p1.lambda - p0.lambda) * t0.dlambda;
    if (!(hi > 0.0) || d0 == 0) return p0;
    SolutionPoint best = p0;
    for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const StepResult step = pseudo_arclength_step(p, p0, t0, mid, settings);
        if (!step.converged) {
            hi = mid;
            continue;
        }
        best = step.point;
        int dm = 0;
        try {
            const TangentVector tm = tangent(p, step.point, t0);
            dm = bordered_det_sign(p, step.point, tm);
        } catch (const std::exception&) {
            return best;  // singular right at the candidate: close enough
        }
        if (dm == d0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return best;
}

struct ProbeData {
    std::vector<double> s;                // signed arclength offsets
    std::vector<double> dlambda;          // lambda - lambda_c
    std::vector<Vector> du_perp;          // null-orthogonal state offsets
};

/// Sample the branch around `at` by mini pseudo-arclength steps along the
/// given direction and its reverse, 5 points each side.
ProbeData probe_around(const ProblemDefinition& p, const SolutionPoint& at,
                       const TangentVector& along, const Vector& null_vec,
                       const ContinuationSettings& settings) {
    ProbeData data;
    const double delta = settings.classify_probe_step;
    for (int side = 0; side < 2; ++side) {
        const TangentVector t = side == 0 ? along : -along;
        const double sgn = side == 0 ? 1.0 : -1.0;
        for (int i = 1; i <= 5; ++i) {
            const StepResult step = pseudo_arclength_step(p, at, t, i * delta, settings);
            if (!step.converged) break;
            data.s.push_back(sgn * i * delta);
            data.dlambda.push_back(step.point.lambda - at.lambda);
            const Vector du = step.point.u - at.u;
            data.du_perp.push_back(du - null_vec * null_vec.dot(du));
        }
    }
    return data;
}

}  // namespace

CriticalPointReport classify_critical_point(const ProblemDefinition& p, const SolutionPoint& at,
                                            const ContinuationSettings& settings,
                                            double jacobian_scale_hint) {
    CriticalPointReport report;
    const Matrix jac_u = jacobian_u_or_fd(p, at.u, at.lambda);
    const Vector jac_l = jacobian_lambda_or_fd(p, at.u, at.lambda);
    const Eigen::Index n = p.state_dim;

    // Null count of F_u, thresholded against the scale of the extended
    // Jacobian [F_u, F_lambda] (the parameter column supplies the scale when
    // F_u itself is scalar or wholly degenerate).
    Matrix ext(n, n + 1);
    ext.leftCols(n) = jac_u;
    ext.col(n) = jac_l;
    const double scale = std::max(largest_singular_value(ext), jacobian_scale_hint);
    if (scale == 0.0) {
        report.null_dim = static_cast<int>(n);
    } else {
        report.null_dim = count_singular_values_below(jac_u, kNullTestRelTol * scale);
    }

    auto [sigma_min, null_vec] = smallest_singular_pair(jac_u);
    report.null_vector = null_vec;

    // Range test: regularized normal equations for min |F_u x - F_lambda|.
    const double jl_norm = jac_l.norm();
    if (jl_norm == 0.0) {
        report.range_test_residual = 0.0;  // the zero vector is trivially in range
    } else {
        const double sigma_max_u = largest_singular_value(jac_u);
        const double reg = 1e-12 * std::max(1.0, sigma_max_u * sigma_max_u);
        const Matrix normal = jac_u.transpose() * jac_u + reg * Matrix::Identity(n, n);
        const Vector x = lu_solve(normal, jac_u.transpose() * jac_l);
        report.range_test_residual = (jac_u * x - jac_l).norm() / jl_norm;
    }

    const bool lambda_in_range = report.range_test_residual <= kRangeTestThreshold;

    if (report.null_dim == 0) {
        report.classification = Classification::Regular;
        return report;
    }
    if (report.null_dim >= 2) {
        report.classification = (report.null_dim == 2 && !lambda_in_range)
                                    ? Classification::SimpleBranchPoint
                                    : Classification::HigherSingularity;
        return report;
    }

    // null_dim == 1.
    if (lambda_in_range) {
        report.classification = Classification::SimpleBranchPoint;
        return report;
    }

    // Fold-type point: the branch tangent is the null direction. Probe both
    // sides and fit lambda(s) = lambda_c + C2 s^2 and the null-orthogonal
    // u-component against s^2.
    const TangentVector along = TangentVector{null_vec, 0.0}.normalized();
    const ProbeData data = probe_around(p, at, along, null_vec, settings);
    const double c2_threshold = 1e-6 * std::max(1.0, std::abs(at.lambda));
    if (data.s.size() < 6) {
        // Could not sample the branch: degenerate beyond diagnosis.
        report.classification = Classification::HigherSingularity;
        return report;
    }

    const QuadraticFit fit = fit_monomial(data.s, data.dlambda, 2);
    // Reported in the frame entering the fold with increasing lambda, so a
    // quadratic fold always carries a negative coefficient.
    report.c2_estimate = -std::abs(fit.coeff);
    report.c2_fit_residual = fit.rel_residual;
    report.c2_sign = std::abs(fit.coeff) > c2_threshold
                         ? SignClass::Negative
                         : SignClass::Zero;

    if (n > 1) {
        std::vector<double> comp(data.s.size());
        Vector c1 = Vector::Zero(n);
        double den = 0.0;
        for (size_t i = 0; i < data.s.size(); ++i) {
            const double w = data.s[i] * data.s[i];
            c1 += w * data.du_perp[i];
            den += w * w;
        }
        if (den > 0.0) report.c1_proxy = (c1 / den).norm();
    }

    if (report.c2_sign != SignClass::Zero) {
        report.fold_order = 2;
        report.classification = Classification::QuadraticFold;
        return report;
    }
    const QuadraticFit cubic = fit_monomial(data.s, data.dlambda, 3);
    if (std::abs(cubic.coeff) > c2_threshold) {
        report.fold_order = 3;
        report.classification = Classification::HigherOrderFold;
    } else {
        report.fold_order = 0;
        report.classification = Classification::HigherSingularity;
    }
    return report;
}

Branch trace_branch(const ProblemDefinition& p, const SolutionPoint& start,
                    const ContinuationSettings& settings) {
    settings.validate();
    if (start.residual_norm > settings.newton_tol) {
        throw std::invalid_argument("trace_branch: start point is not converged");
    }

    Branch branch;
    branch.points.push_back(start);
    branch.tangents.push_back(tangent(p, start, settings.initial_direction));
    int prev_det_sign = bordered_det_sign(p, start, branch.tangents.back());

    double ds = std::clamp(settings.ds0, settings.ds_min, settings.ds_max);
    int accepted = 0;
    while (accepted < settings.max_steps) {
        const SolutionPoint& from = branch.points.back();
        const TangentVector& t = branch.tangents.back();

        const StepResult step = pseudo_arclength_step(p, from, t, ds, settings);
        TangentVector t_new;
        bool ok = step.converged;
        if (ok) {
            try {
                t_new = tangent(p, step.point, t);
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) {
            if (ds <= settings.ds_min * (1.0 + 1e-12)) {
                branch.events.push_back({EventKind::StepFailure, from, std::nullopt,
                                         static_cast<int>(branch.points.size()) - 1});
                branch.stop = StopReason::StepFailure;
                return branch;
            }
            ds = std::max(0.5 * ds, settings.ds_min);
            continue;
        }
        ++accepted;
        const int from_index = static_cast<int>(branch.points.size()) - 1;
        const int det_sign = bordered_det_sign(p, step.point, t_new);

        const bool fold_between = t.dlambda * t_new.dlambda < 0.0 || t_new.dlambda == 0.0;
        if (fold_between) {
            try {
                SolutionPoint fold_pt =
                    t_new.dlambda == 0.0 ? step.point
                                         : refine_fold(p, {from, step.point}, settings);
                double hint = 0.0;
                try {
                    hint = std::max(largest_singular_value(extended_jacobian(p, from)),
                                    largest_singular_value(extended_jacobian(p, step.point)));
                } catch (const std::exception&) {
                }
                CriticalPointReport report = classify_critical_point(p, fold_pt, settings, hint);
                branch.events.push_back({EventKind::Fold, fold_pt, report, from_index});
            } catch (const std::exception&) {
                branch.events.push_back({EventKind::StepFailure, step.point, std::nullopt,
                                         from_index});
            }
        } else if (prev_det_sign != 0 && det_sign != 0 && det_sign != prev_det_sign) {
            // det flip without a lambda_dot flip: branch-point candidate.
            try {
                SolutionPoint bp = refine_branch_point(p, from, step.point, settings);
                double hint = 0.0;
                try {
                    hint = std::max(largest_singular_value(extended_jacobian(p, from)),
                                    largest_singular_value(extended_jacobian(p, step.point)));
                } catch (const std::exception&) {
                }
                CriticalPointReport report = classify_critical_point(p, bp, settings, hint);
                branch.events.push_back({EventKind::BranchPoint, bp, report, from_index});
            } catch (const std::exception&) {
                branch.events.push_back({EventKind::StepFailure, step.point, std::nullopt,
                                         from_index});
            }
        }
        prev_det_sign = det_sign;

        branch.points.push_back(step.point);
        branch.tangents.push_back(t_new);
        branch.steps.push_back({ds, step.iterations, step.extended_residual});

        if (step.point.lambda < settings.lambda_min || step.point.lambda > settings.lambda_max) {
            branch.events.push_back({EventKind::ParameterExit, step.point, std::nullopt,
                                     static_cast<int>(branch.points.size()) - 1});
            branch.stop = StopReason::ParameterExit;
            return branch;
        }
        if (std::abs(step.point.measure) > settings.measure_cap) {
            branch.stop = StopReason::MeasureCap;
            return branch;
        }
        if (step.iterations <= settings.fast_iterations) {
            ds = std::min(2.0 * ds, settings.ds_max);
        }
    }
    branch.stop = StopReason::MaxSteps;
    return branch;
}

FoldCoefficients estimate_fold_coefficients(const Branch& branch, int fold_event_index) {
    if (fold_event_index < 0 || fold_event_index >= static_cast<int>(branch.events.size())) {
        throw std::invalid_argument("estimate_fold_coefficients: event index out of range");
    }
    const Event& event = branch.events[fold_event_index];
    if (event.kind != EventKind::Fold || !event.report) {
        throw std::invalid_argument("estimate_fold_coefficients: event is not a refined fold");
    }
    const int i = event.at_point_index;
    const int last = static_cast<int>(branch.points.size()) - 1;
    if (i < 4 || i + 5 > last) {
        throw InsufficientDataError(
            "estimate_fold_coefficients: need 5 accepted points on each side of the fold");
    }

    // Arclength coordinates by cumulative chord length; the fold sits between
    // points i and i+1.
    std::vector<double> s(branch.points.size(), 0.0);
    for (size_t k = 1; k < branch.points.size(); ++k) {
        s[k] = s[k - 1] + chord_length(branch.points[k - 1], branch.points[k]);
    }
    const double s_c = s[i] + chord_length(branch.points[i], event.location);
    const double lambda_c = event.location.lambda;
    const Vector& null_vec = event.report->null_vector;

    std::vector<double> ds, dlambda;
    std::vector<Vector> du_perp;
    for (int k = i - 4; k <= i + 5; ++k) {
        ds.push_back(s[k] - s_c);
        dlambda.push_back(branch.points[k].lambda - lambda_c);
        const Vector du = branch.points[k].u - event.location.u;
        du_perp.push_back(du - null_vec * null_vec.dot(du));
    }

    FoldCoefficients out;
    const QuadraticFit fit = fit_monomial(ds, dlambda, 2);
    const double incoming = branch.tangents[i].dlambda;
    out.c2 = fit.coeff * (incoming >= 0.0 ? 1.0 : -1.0);

    if (event.location.u.size() > 1) {
        Vector c1 = Vector::Zero(event.location.u.size());
        double den = 0.0;
        for (size_t k = 0; k < ds.size(); ++k) {
            const double w = ds[k] * ds[k];
            c1 += w * du_perp[k];
            den += w * w;
        }
        if (den > 0.0) out.c1_proxy = (c1 / den).norm();
    }
    return out;
}

std::vector<SolutionPoint> solutions_at_lambda(const ProblemDefinition& p, const Branch& branch,
                                               double lambda_target,
                                               const ContinuationSettings& settings) {
    std::vector<SolutionPoint> found;
    for (size_t k = 0; k + 1 < branch.points.size(); ++k) {
        const double a = branch.points[k].lambda - lambda_target;
        const double b = branch.points[k + 1].lambda - lambda_target;
        if (a * b > 0.0) continue;
        const double span = branch.points[k + 1].lambda - branch.points[k].lambda;
        const double w = span != 0.0 ? -a / span : 0.0;
        const Vector u0 = (1.0 - w) * branch.points[k].u + w * branch.points[k + 1].u;
        try {
            const NewtonResult res =
                newton_correct(p, u0, lambda_target, settings.newton_tol, settings.newton_max_iter);
            if (res.converged) found.push_back(res.point);
        } catch (const std::exception&) {
            // A bracketing pair that fails to correct is dropped.
        }
    }
    std::sort(found.begin(), found.end(),
              [](const SolutionPoint& a, const SolutionPoint& b) { return a.measure < b.measure; });
    std::vector<SolutionPoint> unique;
    for (auto& pt : found) {
        if (unique.empty() ||
            std::abs(pt.measure - unique.back().measure) > 1e-6 * (1.0 + std::abs(pt.measure))) {
            unique.push_back(std::move(pt));
        }
    }
    return unique;
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Fold: return "fold";
        case EventKind::BranchPoint: return "branch_point";
        case EventKind::StepFailure: return "step_failure";
        case EventKind::ParameterExit: return "parameter_exit";
    }
    return "unknown";
}

const char* to_string(Classification c) {
    switch (c) {
        case Classification::Regular: return "regular";
        case Classification::QuadraticFold: return "quadratic_fold";
        case Classification::HigherOrderFold: return "higher_order_fold";
        case Classification::SimpleBranchPoint: return "simple_branch_point";
        case Classification::HigherSingularity: return "higher_singularity";
    }
    return "unknown";
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::MaxSteps: return "max_steps";
        case StopReason::ParameterExit: return "parameter_exit";
        case StopReason::StepFailure: return "step_failure";
        case StopReason::MeasureCap: return "measure_cap";
    }
    return "unknown";
}

}  // namespace pacon
