#pragma once

#include "pacon/problem.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pacon {

/// A quadratic fit (or refinement bracket) had too few usable points.
struct InsufficientDataError : std::runtime_error {
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative refinement exhausted its bracket without meeting tolerance.
struct NoConvergenceError : std::runtime_error {
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct ContinuationSettings {
    double ds0 = 0.01;      // initial arclength step
    double ds_min = 1e-6;
    double ds_max = 0.05;
    double newton_tol = 1e-10;      // inf-norm of the (extended) residual
    int newton_max_iter = 20;
    int max_steps = 600;
    double lambda_min = -1e300;     // trace stops when lambda leaves the window
    double lambda_max = 1e300;
    double fold_tol = 1e-8;         // |lambda_dot| at an accepted refined fold
    double measure_cap = 1e300;     // blow-up guard on |branch_measure|
    int fast_iterations = 4;        // step doubles when Newton needed <= this many
    double classify_probe_step = 1e-2;  // local probe spacing for fold coefficients
    /// Orientation prior for the first tangent; without it the trace prefers
    /// increasing lambda.
    std::optional<TangentVector> initial_direction;

    void validate() const;  // throws std::invalid_argument
};

enum class EventKind { Fold, BranchPoint, StepFailure, ParameterExit };

enum class Classification {
    Regular,            // F_u nonsingular: not a critical point at all
    QuadraticFold,
    HigherOrderFold,
    SimpleBranchPoint,
    HigherSingularity,  // ambiguous or genuinely degenerate: see diagnostics
};

enum class SignClass { Negative, Zero, Positive };

/// Diagnosis of a singular point. C2 is the quadratic coefficient of the
/// lambda(arclength) fit, reported in the orientation where the branch enters
/// the fold with increasing lambda: a genuine quadratic fold therefore has
/// C2 < 0. c1_proxy is the magnitude of the quadratic coefficient of the
/// component of u(s) orthogonal to the null vector (zero for 1-D states).
struct CriticalPointReport {
    int null_dim = 0;
    double range_test_residual = 0.0;  // distance of F_lambda from range(F_u), relative
    Vector null_vector;
    SignClass c2_sign = SignClass::Zero;
    double c2_estimate = 0.0;
    double c2_fit_residual = 0.0;      // relative residual of the quadratic fit
    double c1_proxy = 0.0;
    int fold_order = 0;                // 2 for a quadratic fold, 0 = not a fold
    Classification classification = Classification::Regular;
};

struct Event {
    EventKind kind;
    SolutionPoint location;
    std::optional<CriticalPointReport> report;  // present for Fold/BranchPoint
    int at_point_index = 0;  // last accepted point index before detection
};

enum class StopReason { MaxSteps, ParameterExit, StepFailure, MeasureCap };

/// Per accepted step: the arclength used and what the corrector achieved,
/// so branch invariants stay assertable from stored data.
struct StepDiagnostics {
    double ds = 0.0;
    int iterations = 0;
    double extended_residual = 0.0;
};

struct Branch {
    std::vector<SolutionPoint> points;
    std::vector<TangentVector> tangents;  // one per point, consistently oriented
    std::vector<StepDiagnostics> steps;   // one per accepted step (points.size() - 1)
    std::vector<Event> events;
    StopReason stop = StopReason::MaxSteps;
};

/// Branch direction at a converged point: solves the bordered system with the
/// previous tangent as the constraint row and orients along it. Without a
/// previous tangent the constraint row is e_{N+1} (prefer increasing lambda),
/// falling back to the smallest right singular vector of [F_u, F_lambda] when
/// that bordering is singular. Throws SingularError if no usable direction
/// exists (null-space dimension >= 2).
TangentVector tangent(const ProblemDefinition& p, const SolutionPoint& at,
                      const std::optional<TangentVector>& prev = std::nullopt);

struct StepResult {
    bool converged = false;
    SolutionPoint point;            // valid only when converged
    int iterations = 0;
    double extended_residual = 0.0; // last inf-norm of (F, arclength constraint)
};

/// One predictor/corrector step of pseudo-arclength continuation:
/// predictor from + ds * t, then Newton on the extended system
/// [F(u, lambda); (u - u0).du0 + (lambda - lambda0) dlambda0 - ds] via the
/// bordered solve. Linear-algebra and domain failures during correction are
/// reported as non-convergence so the caller can halve ds.
StepResult pseudo_arclength_step(const ProblemDefinition& p, const SolutionPoint& from,
                                 const TangentVector& t, double ds,
                                 const ContinuationSettings& settings);

/// Trace a branch from a converged start point: tangent, step, adapt.
/// Folds are detected by a sign change of lambda_dot between consecutive
/// tangents, refined and classified; branch-point candidates by a sign change
/// of det of the bordered tangent matrix with lambda_dot not changing sign.
/// Failures become events, never exceptions.
Branch trace_branch(const ProblemDefinition& p, const SolutionPoint& start,
                    const ContinuationSettings& settings);

/// Bisection on arclength between two bracketing points whose tangents have
/// opposite lambda_dot sign, until |lambda_dot| <= settings.fold_tol.
SolutionPoint refine_fold(const ProblemDefinition& p,
                          const std::pair<SolutionPoint, SolutionPoint>& bracket,
                          const ContinuationSettings& settings);

/// Classify a refined critical point: null-space count and vector, range test
/// of F_lambda against range(F_u), and local fold coefficients from a probe
/// of 5 pseudo-arclength mini-steps on each side along the null direction.
/// jacobian_scale_hint supplies an external magnitude scale for the null test
/// (e.g. from the bracketing points) when the Jacobian at the point itself is
/// degenerate.
CriticalPointReport classify_critical_point(const ProblemDefinition& p, const SolutionPoint& at,
                                            const ContinuationSettings& settings,
                                            double jacobian_scale_hint = 0.0);

struct FoldCoefficients {
    double c1_proxy = 0.0;
    double c2 = 0.0;
};

/// Retrospective fit of lambda(s) and the null-orthogonal component of u(s)
/// over the 5 accepted branch points on each side of a Fold event. Throws
/// InsufficientDataError when fewer points are stored.
FoldCoefficients estimate_fold_coefficients(const Branch& branch, int fold_event_index);

/// All solutions on the branch at a fixed parameter value: every bracketing
/// pair of accepted points is interpolated and Newton-corrected at
/// lambda_target, then deduplicated by measure and sorted by it.
std::vector<SolutionPoint> solutions_at_lambda(const ProblemDefinition& p, const Branch& branch,
                                               double lambda_target,
                                               const ContinuationSettings& settings);

const char* to_string(EventKind kind);
const char* to_string(Classification c);
const char* to_string(StopReason r);

}  // namespace pacon
