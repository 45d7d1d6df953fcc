#include "pacon/linalg.hpp"

#include <doctest.h>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace pacon;

namespace {

std::mt19937 rng_for(unsigned salt) { return std::mt19937(0x5eed0000u + salt); }

Matrix random_matrix(std::mt19937& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

Vector random_vector(std::mt19937& rng, int n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

/// Orthogonal * diag(sigma) * orthogonal: condition number under control.
Matrix conditioned_matrix(std::mt19937& rng, int n, double sigma_lo, double sigma_hi) {
    const Matrix q1 = Eigen::HouseholderQR<Matrix>(random_matrix(rng, n, n)).householderQ();
    const Matrix q2 = Eigen::HouseholderQR<Matrix>(random_matrix(rng, n, n)).householderQ();
    std::uniform_real_distribution<double> dist(sigma_lo, sigma_hi);
    Vector sigma(n);
    for (int i = 0; i < n; ++i) sigma(i) = dist(rng);
    return q1 * sigma.asDiagonal() * q2.transpose();
}

}  // namespace

TEST_CASE("lu_solve: identity and permutation") {
    Matrix eye = Matrix::Identity(2, 2);
    Vector b(2);
    b << 3, 4;
    CHECK((lu_solve(eye, b) - b).norm() == 0.0);

    Matrix perm(2, 2);
    perm << 0, 1, 1, 0;
    Vector c(2);
    c << 5, 7;
    const Vector x = lu_solve(perm, c);
    CHECK(x(0) == doctest::Approx(7.0));
    CHECK(x(1) == doctest::Approx(5.0));
}

TEST_CASE("lu_solve: rank-deficient matrix is reported singular") {
    Matrix a(2, 2);
    a << 1, 1, 1, 1;
    Vector b(2);
    b << 1, 2;
    CHECK_THROWS_AS(lu_solve(a, b), SingularError);
}

TEST_CASE("lu_solve: residual bound over random well-conditioned systems") {
    auto rng = rng_for(1);
    std::uniform_int_distribution<int> size_dist(1, 50);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = size_dist(rng);
        const Matrix a = conditioned_matrix(rng, n, 0.5, 20.0);
        const Vector b = random_vector(rng, n);
        const Vector x = lu_solve(a, b);
        const double resid = (a * x - b).lpNorm<Eigen::Infinity>();
        CHECK(resid <= 1e-9 * (1.0 + b.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("bordered_solve: block-diagonal identity") {
    BorderedSystem sys{Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2), 1.0};
    Vector rhs(3);
    rhs << 1, 2, 3;
    CHECK((bordered_solve(sys, rhs) - rhs).norm() == 0.0);
}

TEST_CASE("bordered_solve: singular 1x1 core falls back to the assembled solve") {
    BorderedSystem sys{Matrix::Zero(1, 1), Vector::Ones(1), Vector::Ones(1), 0.0};
    Vector rhs(2);
    rhs << 4.0, -2.5;
    const Vector x = bordered_solve(sys, rhs);
    CHECK(x(0) == doctest::Approx(-2.5));
    CHECK(x(1) == doctest::Approx(4.0));
}

TEST_CASE("bordered_solve: agrees with direct LU of the assembled matrix") {
    auto rng = rng_for(2);
    int singular_core_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 7;
        BorderedSystem sys;
        if (trial % 3 == 0) {
            // Deliberately rank-deficient core with a nonsingular border.
            const Matrix b = random_matrix(rng, n, n - 1);
            const Matrix c = random_matrix(rng, n - 1, n);
            sys.core = b * c;
            ++singular_core_cases;
        } else {
            sys.core = conditioned_matrix(rng, n, 0.5, 10.0);
        }
        sys.right_border = random_vector(rng, n);
        sys.bottom_border = random_vector(rng, n);
        sys.corner = 0.3;
        const Vector rhs = random_vector(rng, n + 1);

        Vector direct;
        try {
            direct = lu_solve(sys.assembled(), rhs);
        } catch (const SingularError&) {
            continue;  // assembled matrix happened to be singular: skip instance
        }
        const Vector x = bordered_solve(sys, rhs);
        CHECK((x - direct).norm() <= 1e-9 * (1.0 + direct.norm()));
    }
    CHECK(singular_core_cases >= 30);
}

TEST_CASE("bordered_solve: fully singular system throws") {
    BorderedSystem sys{Matrix::Zero(1, 1), Vector::Zero(1), Vector::Zero(1), 0.0};
    Vector rhs(2);
    rhs << 1, 1;
    CHECK_THROWS_AS(bordered_solve(sys, rhs), SingularError);
}

TEST_CASE("smallest_singular_pair: diagonal and explicit rank deficiency") {
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 3, 1, 2;
    auto [sigma, v] = smallest_singular_pair(d);
    CHECK(sigma == doctest::Approx(1.0));
    CHECK(std::abs(v(1)) == doctest::Approx(1.0));

    Matrix r(2, 2);
    r << 1, 0, 0, 0;
    auto [sigma0, v0] = smallest_singular_pair(r);
    CHECK(sigma0 == doctest::Approx(0.0));
    CHECK(std::abs(v0(1)) == doctest::Approx(1.0));
}

TEST_CASE("smallest_singular_pair: symmetric 2x2 by hand") {
    Matrix a(2, 2);
    a << 2, 1, 1, 2;  // eigenvalues 3 and 1, smallest vector (1,-1)/sqrt(2)
    auto [sigma, v] = smallest_singular_pair(a);
    CHECK(sigma == doctest::Approx(1.0).epsilon(1e-8));
    // The singular value carries the 1e-8 tolerance; the vector converges
    // like its square root, so allow a wider window on components.
    CHECK(std::abs(v(0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(v(0) * v(1) < 0.0);
}

TEST_CASE("smallest_singular_pair: matches a full SVD on random matrices") {
    auto rng = rng_for(3);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 9;
        const Matrix a = conditioned_matrix(rng, n, 0.3, 8.0);
        auto [sigma, v] = smallest_singular_pair(a);
        Eigen::BDCSVD<Matrix> svd(a);
        CHECK(sigma == doctest::Approx(svd.singularValues()(n - 1)).epsilon(1e-7));
        CHECK((a * v).norm() == doctest::Approx(sigma).epsilon(1e-7));
        CHECK(v.norm() == doctest::Approx(1.0));
    }
}

TEST_CASE("null_space_dimension: examples and the zero-matrix convention") {
    CHECK(null_space_dimension(Matrix::Identity(4, 4)) == 0);
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 1, 1, 0;
    CHECK(null_space_dimension(d) == 1);
    CHECK(null_space_dimension(Matrix::Zero(3, 3)) == 3);
}

TEST_CASE("null_space_dimension: complements the rank") {
    auto rng = rng_for(4);
    const double tol = 1e-6;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 8;
        Matrix a;
        if (trial % 2 == 0) {
            const int r = 1 + trial % n;
            a = random_matrix(rng, n, r) * random_matrix(rng, r, n);
        } else {
            a = conditioned_matrix(rng, n, 0.2, 5.0);
        }
        const int nullity = null_space_dimension(a, tol);
        Eigen::BDCSVD<Matrix> svd(a);
        int rank = 0;
        const double smax = svd.singularValues()(0);
        for (int i = 0; i < n; ++i) {
            if (svd.singularValues()(i) > tol * smax) ++rank;
        }
        CHECK(nullity + rank == n);
    }
}

TEST_CASE("signed_log_det: signs and magnitudes") {
    CHECK(signed_log_det(Matrix::Identity(3, 3)) == std::pair<int, double>{1, 0.0});
    Matrix perm(2, 2);
    perm << 0, 1, 1, 0;
    CHECK(signed_log_det(perm).first == -1);
    Matrix big = 100.0 * Matrix::Identity(4, 4);
    auto [sign, logmag] = signed_log_det(big);
    CHECK(sign == 1);
    CHECK(logmag == doctest::Approx(4.0 * std::log(100.0)));
    CHECK(signed_log_det(Matrix::Zero(2, 2)).first == 0);
}

TEST_CASE("non-finite inputs are rejected") {
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::nan("");
    Vector b = Vector::Ones(2);
    CHECK_THROWS_AS(lu_solve(bad, b), NonFiniteError);
}
