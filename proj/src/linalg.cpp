#include "pacon/linalg.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace pacon {

namespace {

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& a, const char* who) {
    if (!a.allFinite()) {
        throw NonFiniteError(std::string(who) + ": NaN/Inf entries");
    }
}

// Partial-pivoting LU with the relative pivot test applied to the U diagonal.
// Under partial pivoting |U_kk| is exactly the pivot chosen at step k, so the
// post-factorization check is equivalent to testing during elimination.
class CheckedLU {
  public:
    explicit CheckedLU(const MatrixRef& A)
        : lu_(A), scale_(A.size() > 0 ? A.cwiseAbs().maxCoeff() : 0.0) {
        const Eigen::Index n = A.rows();
        const double threshold = kPivotRelTol * scale_;
        singular_ = (scale_ == 0.0);
        for (Eigen::Index k = 0; k < n && !singular_; ++k) {
            if (std::abs(lu_.matrixLU()(k, k)) <= threshold) singular_ = true;
        }
    }

    bool singular() const { return singular_; }

    Vector solve(const VectorRef& b) const { return lu_.solve(b); }

    std::pair<int, double> signed_log_det() const {
        if (singular_ && scale_ == 0.0) return {0, -std::numeric_limits<double>::infinity()};
        int sign = lu_.permutationP().determinant() > 0 ? 1 : -1;
        double logmag = 0.0;
        for (Eigen::Index k = 0; k < lu_.matrixLU().rows(); ++k) {
            const double d = lu_.matrixLU()(k, k);
            if (d == 0.0) return {0, -std::numeric_limits<double>::infinity()};
            if (d < 0.0) sign = -sign;
            logmag += std::log(std::abs(d));
        }
        return {sign, logmag};
    }

  private:
    Eigen::PartialPivLU<Matrix> lu_;
    double scale_;
    bool singular_ = false;
};

Vector singular_values_of(const MatrixRef& A) {
    return Eigen::BDCSVD<Matrix>(A).singularValues();
}

// Deterministic start vector with an index-dependent tilt so it is not an
// exact eigenvector of structured matrices (ones is, for many of them).
Vector tilted_start(Eigen::Index n) {
    Vector v = Vector::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * static_cast<double>(i + 1);
    return v.normalized();
}

}  // namespace

Matrix BorderedSystem::assembled() const {
    const Eigen::Index n = core_dim();
    Matrix full(n + 1, n + 1);
    full.topLeftCorner(n, n) = core;
    full.topRightCorner(n, 1) = right_border;
    full.bottomLeftCorner(1, n) = bottom_border.transpose();
    full(n, n) = corner;
    return full;
}

Vector lu_solve(const MatrixRef& A, const VectorRef& b) {
    if (A.rows() != A.cols()) throw std::invalid_argument("lu_solve: matrix not square");
    if (A.rows() != b.size()) throw std::invalid_argument("lu_solve: size mismatch");
    require_finite(A, "lu_solve");
    require_finite(b, "lu_solve");

    CheckedLU lu(A);
    if (lu.singular()) throw SingularError("lu_solve: pivot below relative threshold");
    return lu.solve(b);
}

Vector bordered_solve(const BorderedSystem& sys, const VectorRef& rhs) {
    const Eigen::Index n = sys.core_dim();
    if (sys.core.cols() != n || sys.right_border.size() != n ||
        sys.bottom_border.size() != n || rhs.size() != n + 1) {
        throw std::invalid_argument("bordered_solve: nonconforming dimensions");
    }
    require_finite(sys.core, "bordered_solve");

    CheckedLU core_lu(sys.core);
    if (!core_lu.singular()) {
        // Block elimination: with A v = c and A w = f,
        //   y = (g - d.w) / (corner - d.v),  x = w - y v.
        const Vector v = core_lu.solve(sys.right_border);
        const Vector w = core_lu.solve(rhs.head(n));
        const double schur = sys.corner - sys.bottom_border.dot(v);
        const double schur_scale =
            std::abs(sys.corner) + sys.bottom_border.cwiseAbs().maxCoeff() * (1.0 + v.cwiseAbs().maxCoeff());
        if (std::abs(schur) > kPivotRelTol * std::max(1.0, schur_scale)) {
            const double y = (rhs(n) - sys.bottom_border.dot(w)) / schur;
            Vector x(n + 1);
            x.head(n) = w - y * v;
            x(n) = y;
            if (!x.allFinite()) throw SingularError("bordered_solve: non-finite block solve");
            return x;
        }
        // Nearly-singular Schur complement: fall through to the assembled solve.
    }
    return lu_solve(sys.assembled(), rhs);
}

std::pair<double, Vector> smallest_singular_pair(const MatrixRef& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("smallest_singular_pair: matrix not square");
    require_finite(A, "smallest_singular_pair");
    const Eigen::Index n = A.rows();
    if (n == 0) throw std::invalid_argument("smallest_singular_pair: empty matrix");

    const auto fallback = [&]() -> std::pair<double, Vector> {
        Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
        return {svd.singularValues()(n - 1), svd.matrixV().col(n - 1)};
    };

    const Matrix gram = A.transpose() * A;
    CheckedLU lu(gram);
    if (lu.singular()) return fallback();  // exact-rank-deficient probe

    Vector v = tilted_start(n);
    double sigma = (A * v).norm();
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Vector w = lu.solve(v);
        const double wnorm = w.norm();
        if (!w.allFinite() || wnorm == 0.0) return fallback();
        v = w / wnorm;
        const double next = (A * v).norm();
        if (std::abs(next - sigma) <= 1e-8 * std::max(next, sigma)) {
            return {next, v};
        }
        sigma = next;
    }
    return fallback();  // stagnated
}

double largest_singular_value(const MatrixRef& A) {
    require_finite(A, "largest_singular_value");
    if (A.size() == 0) return 0.0;
    const Matrix gram = A.transpose() * A;
    Vector v = tilted_start(A.cols());
    double sigma2 = 0.0;
    for (int sweep = 0; sweep < 200; ++sweep) {
        Vector w = gram * v;
        const double wnorm = w.norm();
        if (wnorm == 0.0) return 0.0;
        v = w / wnorm;
        const double next = v.dot(gram * v);
        if (std::abs(next - sigma2) <= 1e-12 * std::max(next, sigma2)) {
            sigma2 = next;
            break;
        }
        sigma2 = next;
    }
    return std::sqrt(std::max(0.0, sigma2));
}

int null_space_dimension(const MatrixRef& A, double rel_tol) {
    if (A.rows() != A.cols()) throw std::invalid_argument("null_space_dimension: matrix not square");
    require_finite(A, "null_space_dimension");
    const double sigma_max = largest_singular_value(A);
    if (sigma_max == 0.0) return static_cast<int>(A.rows());  // zero matrix: all null
    return count_singular_values_below(A, rel_tol * sigma_max);
}

int count_singular_values_below(const MatrixRef& A, double threshold) {
    require_finite(A, "count_singular_values_below");
    const Vector sv = singular_values_of(A);
    int count = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= threshold) ++count;
    }
    return count;
}

std::pair<int, double> signed_log_det(const MatrixRef& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("signed_log_det: matrix not square");
    require_finite(A, "signed_log_det");
    return CheckedLU(A).signed_log_det();
}

}  // namespace pacon
