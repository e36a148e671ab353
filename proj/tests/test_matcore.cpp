#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "laplearn/matcore.hpp"
#include "testutil.hpp"

using namespace laplearn;
using Catch::Approx;

TEST_CASE("hermitian_sqrt handles analytic cases", "[matcore]") {
    auto id3 = HermitianMatrix::identity(3);
    CHECK(max_abs(ComplexMatrix(hermitian_sqrt(id3).matrix() - id3.matrix())) < 1e-14);

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 9.0;
    auto root = hermitian_sqrt(HermitianMatrix(d));
    CHECK(root.matrix()(0, 0).real() == Approx(2.0).margin(1e-12));
    CHECK(root.matrix()(1, 1).real() == Approx(3.0).margin(1e-12));
}

TEST_CASE("hermitian_sqrt round-trips a random PD matrix", "[matcore]") {
    std::mt19937_64 rng(1234);
    HermitianMatrix h(testutil::random_hermitian_pd(5, rng));
    HermitianMatrix d = hermitian_sqrt(h);
    const ComplexMatrix resid = d.matrix() * d.matrix() - h.matrix();
    CHECK(resid.norm() / h.matrix().norm() <= 1e-10);

    // Uniqueness of the PD root: sqrt(sqrt(H)^2) == sqrt(H).
    HermitianMatrix d2 = hermitian_sqrt(HermitianMatrix(d.matrix() * d.matrix(), 1e-9));
    CHECK(max_abs(ComplexMatrix(d2.matrix() - d.matrix())) < 1e-8);
}

TEST_CASE("hermitian_sqrt rejects indefinite and non-Hermitian inputs", "[matcore]") {
    ComplexMatrix neg = -ComplexMatrix::Identity(2, 2);
    CHECK_THROWS_AS(hermitian_sqrt(HermitianMatrix(neg)), NotPositiveDefinite);

    ComplexMatrix bad = ComplexMatrix::Identity(2, 2);
    bad(0, 1) = Complex(1.0, 0.5);
    bad(1, 0) = Complex(1.0, 0.5);  // conjugate symmetry violated
    CHECK_THROWS_AS(HermitianMatrix(bad), NotHermitian);
}

TEST_CASE("logdet_spd analytic values and eigenvalue oracle", "[matcore]") {
    CHECK(logdet_spd(SymmetricMatrix::identity(4)) == Approx(0.0).margin(1e-14));

    RealMatrix d = RealMatrix::Zero(2, 2);
    d(0, 0) = std::exp(1.0);
    d(1, 1) = std::exp(2.0);
    CHECK(logdet_spd(SymmetricMatrix(d)) == Approx(3.0).margin(1e-12));

    std::mt19937_64 rng(77);
    RealMatrix m = testutil::random_spd(6, rng);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(m);
    const double oracle = es.eigenvalues().array().log().sum();
    CHECK(logdet_spd(SymmetricMatrix(m)) == Approx(oracle).margin(1e-10));

    RealMatrix indef = RealMatrix::Identity(3, 3);
    indef(2, 2) = -1.0;
    CHECK_THROWS_AS(logdet_spd(SymmetricMatrix(indef)), NotPositiveDefinite);
}

TEST_CASE("logdet additivity over block diagonals", "[matcore]") {
    std::mt19937_64 rng(5150);
    RealMatrix a = testutil::random_spd(4, rng);
    RealMatrix b = testutil::random_spd(3, rng);
    RealMatrix block = RealMatrix::Zero(7, 7);
    block.topLeftCorner(4, 4) = a;
    block.bottomRightCorner(3, 3) = b;
    CHECK(logdet_spd(SymmetricMatrix(block)) ==
          Approx(logdet_spd(SymmetricMatrix(a)) + logdet_spd(SymmetricMatrix(b))).margin(1e-10));
}

TEST_CASE("kron identities", "[matcore]") {
    const RealMatrix i2 = RealMatrix::Identity(2, 2);
    CHECK(max_abs(RealMatrix(kron(i2, i2) - RealMatrix::Identity(4, 4))) == 0.0);

    RealMatrix scalar(1, 1);
    scalar(0, 0) = 2.0;
    std::mt19937_64 rng(99);
    RealMatrix b = testutil::random_matrix(3, 3, rng);
    CHECK(max_abs(RealMatrix(kron(scalar, b) - 2.0 * b)) < 1e-15);

    CHECK_THROWS_AS(kron(RealMatrix::Identity(80, 80), RealMatrix::Identity(80, 80)),
                    DimensionOverflow);
}

TEST_CASE("kron vec identity: kron(A,B) vec(C) == vec(B C A^T)", "[matcore]") {
    std::mt19937_64 rng(424242);
    for (int rep = 0; rep < 5; ++rep) {
        RealMatrix a = testutil::random_matrix(3, 3, rng);
        RealMatrix b = testutil::random_matrix(3, 3, rng);
        RealMatrix c = testutil::random_matrix(3, 3, rng);
        Eigen::VectorXd vec_c = Eigen::Map<Eigen::VectorXd>(c.data(), 9);  // column-major
        Eigen::VectorXd lhs = kron(a, b) * vec_c;
        RealMatrix rhs_m = b * c * a.transpose();
        Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(rhs_m.data(), 9);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("kron associativity on random triples", "[matcore]") {
    std::mt19937_64 rng(31337);
    RealMatrix a = testutil::random_matrix(2, 2, rng);
    RealMatrix b = testutil::random_matrix(3, 3, rng);
    RealMatrix c = testutil::random_matrix(2, 2, rng);
    RealMatrix left = kron(kron(a, b), c);
    RealMatrix right = kron(a, kron(b, c));
    CHECK(max_abs(RealMatrix(left - right)) < 1e-12);
}

TEST_CASE("norms of analytic matrices", "[matcore]") {
    const MatrixNorms id = norms(RealMatrix(RealMatrix::Identity(3, 3)));
    CHECK(id.max_abs == 1.0);
    CHECK(id.row_sum == 1.0);
    CHECK(id.frobenius == Approx(std::sqrt(3.0)));
    CHECK(id.operator2 == Approx(1.0));
    CHECK(id.l1_offdiag == 0.0);

    RealMatrix m(2, 2);
    m << 1, -2, 3, 4;
    const MatrixNorms nm = norms(m);
    CHECK(nm.max_abs == 4.0);
    CHECK(nm.row_sum == 7.0);
    CHECK(nm.frobenius == Approx(std::sqrt(30.0)));
    // sigma_max of a 2x2 from the closed-form eigenvalues of M^T M.
    const double sigma = std::sqrt((30.0 + std::sqrt(500.0)) / 2.0);
    CHECK(nm.operator2 == Approx(sigma).margin(1e-12));
    CHECK(nm.l1_offdiag == 5.0);
}

TEST_CASE("norm inequalities over 200 seeded matrices", "[matcore]") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
        const Index p = 2 + static_cast<Index>(rng() % 6);
        // operator2 <= row_sum is the induced-norm bound for symmetric
        // matrices, which is how it is applied to estimation errors.
        RealMatrix s = testutil::random_symmetric(p, rng);
        const MatrixNorms ns = norms(s);
        CHECK(ns.row_sum >= ns.operator2 - 1e-10);

        RealMatrix m = testutil::random_matrix(p, p, rng);
        const MatrixNorms nm = norms(m);
        CHECK(nm.operator2 >= nm.max_abs - 1e-10);
        CHECK(nm.frobenius <= std::sqrt(static_cast<double>(p)) * nm.operator2 + 1e-10);
    }
}

TEST_CASE("golden-file CSV round-trips real and complex matrices", "[matcore]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "laplearn_matcore_test";
    fs::create_directories(dir);
    std::mt19937_64 rng(808);

    RealMatrix m = testutil::random_matrix(4, 3, rng);
    write_matrix_csv(dir / "real.csv", m);
    const LoadedMatrix lr = read_matrix_csv(dir / "real.csv");
    REQUIRE_FALSE(lr.is_complex);
    CHECK(max_abs(RealMatrix(lr.real() - m)) == 0.0);

    ComplexMatrix c = testutil::random_complex_matrix(3, 5, rng);
    c(0, 0) = Complex(1.5e-7, -2.25);
    c(1, 2) = Complex(0.0, 3.0);
    write_matrix_csv(dir / "cplx.csv", c);
    const LoadedMatrix lc = read_matrix_csv(dir / "cplx.csv");
    REQUIRE(lc.is_complex);
    CHECK(max_abs(ComplexMatrix(lc.values - c)) == 0.0);

    CHECK_THROWS_AS(read_matrix_csv(dir / "missing.csv"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("hermitian inverse matches Eigen solve", "[matcore]") {
    std::mt19937_64 rng(9);
    HermitianMatrix h(testutil::random_hermitian_pd(6, rng));
    const ComplexMatrix prod = hermitian_inverse(h).matrix() * h.matrix();
    CHECK(max_abs(ComplexMatrix(prod - ComplexMatrix::Identity(6, 6))) < 1e-10);
}
