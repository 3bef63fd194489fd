#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridcpd/tensor.hpp"
#include "oracles.hpp"

#include <random>

using namespace gridcpd;

TEST_CASE("rank_one matches the outer-product definition") {
    Vector a(2), b(2), c(1);
    a << 1, 0;
    b << 1, 1;
    c << 1;
    const Tensor3 t = rank_one(a, b, c);
    CHECK(t(0, 0, 0) == 1.0);
    CHECK(t(0, 1, 0) == 1.0);
    CHECK(t(1, 0, 0) == 0.0);
    CHECK(t(1, 1, 0) == 0.0);
}

TEST_CASE("rank_one scalar case") {
    Vector a(1), b(1), c(1);
    a << 2;
    b << 3;
    c << 4;
    CHECK(rank_one(a, b, c)(0, 0, 0) == 24.0);
}

TEST_CASE("rank_one equals the triple-loop oracle on random vectors") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector a(3), b(3), c(3);
    for (int t = 0; t < 3; ++t) {
        a(t) = gauss(rng);
        b(t) = gauss(rng);
        c(t) = gauss(rng);
    }
    CHECK(oracles::max_abs_diff(rank_one(a, b, c), oracles::rank_one_loop(a, b, c)) == 0.0);
}

TEST_CASE("mode-1 unfolding of a 2x2x2 tensor, enumerated by hand") {
    // Entries 1..8 in (i, j, k) lexicographic order with k fastest:
    // X(0,0,0)=1 X(0,0,1)=2 X(0,1,0)=3 X(0,1,1)=4
    // X(1,0,0)=5 X(1,0,1)=6 X(1,1,0)=7 X(1,1,1)=8
    Tensor3 x(2, 2, 2);
    double v = 1.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) x(i, j, k) = v++;
    const Matrix m = unfold(x, 1);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 4);
    // column j + 2k: columns are (j,k) = (0,0), (1,0), (0,1), (1,1)
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 3.0);
    CHECK(m(0, 2) == 2.0);
    CHECK(m(0, 3) == 4.0);
    CHECK(m(1, 0) == 5.0);
    CHECK(m(1, 1) == 7.0);
    CHECK(m(1, 2) == 6.0);
    CHECK(m(1, 3) == 8.0);
}

TEST_CASE("unfold satisfies the rank-one Khatri-Rao identities in all modes") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector a(3), b(4), c(5);
    for (int t = 0; t < 3; ++t) a(t) = gauss(rng);
    for (int t = 0; t < 4; ++t) b(t) = gauss(rng);
    for (int t = 0; t < 5; ++t) c(t) = gauss(rng);
    const Tensor3 x = rank_one(a, b, c);

    const Matrix m1 = a * khatri_rao(Matrix(c), Matrix(b)).transpose();
    const Matrix m2 = b * khatri_rao(Matrix(a), Matrix(c)).transpose();
    const Matrix m3 = c * khatri_rao(Matrix(b), Matrix(a)).transpose();
    CHECK((unfold(x, 1) - m1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((unfold(x, 2) - m2).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((unfold(x, 3) - m3).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("refold inverts unfold exactly in every mode") {
    std::mt19937_64 rng(7);
    const Tensor3 x = oracles::random_tensor(3, 4, 5, rng);
    for (int mode : {1, 2, 3}) {
        const Tensor3 back = refold(unfold(x, mode), mode, 3, 4, 5);
        CHECK(oracles::max_abs_diff(x, back) == 0.0);
    }
}

TEST_CASE("unfold rejects invalid modes") {
    const Tensor3 x(2, 2, 2);
    CHECK_THROWS_AS(unfold(x, 0), std::invalid_argument);
    CHECK_THROWS_AS(unfold(x, 4), std::invalid_argument);
}

TEST_CASE("khatri_rao hand cases") {
    Matrix p(1, 1), q(1, 1);
    p << 2;
    q << 2;
    CHECK(khatri_rao(p, q)(0, 0) == 4.0);

    Matrix p2(2, 1), q2(2, 1);
    p2 << 1, 2;
    q2 << 3, 5;
    const Matrix kr = khatri_rao(p2, q2);
    REQUIRE(kr.rows() == 4);
    CHECK(kr(0, 0) == 3.0);
    CHECK(kr(1, 0) == 5.0);
    CHECK(kr(2, 0) == 6.0);
    CHECK(kr(3, 0) == 10.0);
}

TEST_CASE("khatri_rao matches the per-column Kronecker oracle") {
    std::mt19937_64 rng(13);
    const Matrix p = oracles::random_matrix(3, 2, rng);
    const Matrix q = oracles::random_matrix(4, 2, rng);
    CHECK((khatri_rao(p, q) - oracles::khatri_rao_loop(p, q)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("khatri_rao rejects mismatched column counts") {
    CHECK_THROWS_AS(khatri_rao(Matrix::Ones(2, 2), Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("slab extraction") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector a(2), b(3), c(4);
    for (int t = 0; t < 2; ++t) a(t) = gauss(rng);
    for (int t = 0; t < 3; ++t) b(t) = gauss(rng);
    for (int t = 0; t < 4; ++t) c(t) = gauss(rng);
    const Tensor3 x = rank_one(a, b, c);

    SUBCASE("frontal slab of a rank-one tensor is c(k) * a b^T") {
        const Matrix s = extract_slab(x, SlabKind::Frontal, 0);
        const Matrix expect = c(0) * (a * b.transpose());
        CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("single nonzero entry lands in the right place") {
        Tensor3 t(3, 4, 5);
        t(1, 2, 3) = 42.0;
        const Matrix s = extract_slab(t, SlabKind::Horizontal, 1);
        CHECK(s(2, 3) == 42.0);
        CHECK(s.cwiseAbs().sum() == 42.0);
    }
    SUBCASE("out-of-range index rejected") {
        CHECK_THROWS_AS(extract_slab(x, SlabKind::Vertical, 3), std::out_of_range);
    }
}

TEST_CASE("slab and fiber extraction agree with direct indexing (random dims <= 8)") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int trial = 0; trial < 20; ++trial) {
        const int di = dim(rng), dj = dim(rng), dk = dim(rng);
        const Tensor3 x = oracles::random_tensor(di, dj, dk, rng);
        for (int i = 0; i < di; ++i) {
            const Matrix s = extract_slab(x, SlabKind::Horizontal, i);
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k) CHECK(s(j, k) == x(i, j, k));
        }
        for (int j = 0; j < dj; ++j) {
            const Matrix s = extract_slab(x, SlabKind::Vertical, j);
            for (int i = 0; i < di; ++i)
                for (int k = 0; k < dk; ++k) CHECK(s(i, k) == x(i, j, k));
        }
        for (int k = 0; k < dk; ++k) {
            const Matrix s = extract_slab(x, SlabKind::Frontal, k);
            for (int i = 0; i < di; ++i)
                for (int j = 0; j < dj; ++j) CHECK(s(i, j) == x(i, j, k));
        }
        for (int i = 0; i < di; ++i)
            for (int j = 0; j < dj; ++j) {
                const Vector f = extract_fiber(x, i, j);
                for (int k = 0; k < dk; ++k) CHECK(f(k) == x(i, j, k));
            }
    }
}

TEST_CASE("fiber of a rank-one tensor is a(i) b(j) c") {
    Vector a(2), b(2), c(3);
    a << 2, -1;
    b << 0.5, 4;
    c << 1, 2, 3;
    const Tensor3 x = rank_one(a, b, c);
    const Vector f = extract_fiber(x, 1, 1);
    for (int k = 0; k < 3; ++k) CHECK(f(k) == doctest::Approx(-4.0 * c(k)).epsilon(1e-15));

    const Tensor3 zeros(4, 4, 4);
    CHECK(extract_fiber(zeros, 2, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(extract_fiber(zeros, 4, 0), std::out_of_range);
}

TEST_CASE("relative_error identities") {
    std::mt19937_64 rng(29);
    const Tensor3 x = oracles::random_tensor(3, 3, 3, rng);
    CHECK(relative_error(x, x) == 0.0);

    const Tensor3 zeros(3, 3, 3);
    CHECK(relative_error(x, zeros) == doctest::Approx(1.0));

    Tensor3 twice = x;
    for (double& v : twice.raw()) v *= 2.0;
    CHECK(relative_error(x, twice) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(relative_error(zeros, x), std::invalid_argument);
    CHECK_THROWS_AS(relative_error(x, Tensor3(2, 2, 2)), std::invalid_argument);
}

TEST_CASE("Frobenius norm via any unfolding matches the triple-loop sum") {
    std::mt19937_64 rng(31);
    const Tensor3 x = oracles::random_tensor(4, 5, 6, rng);
    const double direct = oracles::frobenius_sq_loop(x);
    CHECK(frobenius_norm_squared(x) == doctest::Approx(direct).epsilon(1e-12));
    for (int mode : {1, 2, 3}) {
        CHECK(unfold(x, mode).squaredNorm() == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("mask basics") {
    MaskTensor m(2, 3, 4);
    CHECK(m.observed_count() == 0);
    m.set(1, 2, 3, true);
    CHECK(m.observed_count() == 1);
    CHECK(m(1, 2, 3));
    const MaskTensor ones = MaskTensor::ones(2, 3, 4);
    CHECK(ones.all());
    const MaskTensor u = m.unite(ones);
    CHECK(u.all());
    CHECK_THROWS_AS(m.unite(MaskTensor(1, 1, 1)), std::invalid_argument);
}
