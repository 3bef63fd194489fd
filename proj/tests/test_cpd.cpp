#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridcpd/cpd.hpp"
#include "gridcpd/sampling.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace gridcpd;

namespace {

// Relative squared error restricted to the unobserved entries.
double held_out_error(const Tensor3& x, const Tensor3& xhat, const MaskTensor& mask) {
    double num = 0.0, denom = 0.0;
    for (int i = 0; i < x.dim0(); ++i)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k) {
                if (mask(i, j, k)) continue;
                const double d = x(i, j, k) - xhat(i, j, k);
                num += d * d;
                denom += x(i, j, k) * x(i, j, k);
            }
    REQUIRE(denom > 0.0);
    return num / denom;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (long r = 0; r < a.rows(); ++r)
        for (long c = 0; c < a.cols(); ++c)
            if (a(r, c) != b(r, c)) return false;
    return true;
}

}  // namespace

TEST_CASE("reconstruct: rank-1 model equals the outer product") {
    std::mt19937_64 rng(3);
    CpdFactors f = oracles::random_factors(4, 3, 5, 1, rng);
    const Tensor3 direct = rank_one(f.a.col(0), f.b.col(0), f.c.col(0));
    CHECK(oracles::max_abs_diff(reconstruct(f), direct) < 1e-14);
}

TEST_CASE("reconstruct: an all-zero component contributes nothing") {
    std::mt19937_64 rng(5);
    CpdFactors two = oracles::random_factors(4, 3, 5, 2, rng);
    two.a.col(1).setZero();
    two.b.col(1).setZero();
    two.c.col(1).setZero();
    CpdFactors one{two.a.leftCols(1), two.b.leftCols(1), two.c.leftCols(1)};
    CHECK(oracles::max_abs_diff(reconstruct(two), reconstruct(one)) == 0.0);
}

TEST_CASE("reconstruct matches the brute-force sum oracle") {
    std::mt19937_64 rng(7);
    const CpdFactors f = oracles::random_factors(4, 3, 5, 3, rng);
    CHECK(oracles::max_abs_diff(reconstruct(f), oracles::reconstruct_loop(f)) < 1e-13);
}

TEST_CASE("reconstruct rejects inconsistent shapes") {
    std::mt19937_64 rng(9);
    CpdFactors f = oracles::random_factors(4, 3, 5, 2, rng);
    f.b = oracles::random_matrix(3, 3, rng);
    CHECK_THROWS_AS(reconstruct(f), std::invalid_argument);
}

TEST_CASE("als_fit recovers a rank-one tensor exactly") {
    std::mt19937_64 rng(11);
    const CpdFactors truth = oracles::random_factors(6, 5, 4, 1, rng);
    const Tensor3 x = reconstruct(truth);
    FitOptions opts;
    opts.seed = 1;
    const FitResult fit = als_fit(x, 1, opts);
    CHECK(relative_error(x, reconstruct(fit.factors)) <= 1e-10);
}

TEST_CASE("als_fit generate-and-recover at the true rank, worse below it") {
    std::mt19937_64 rng(13);
    const CpdFactors truth = oracles::random_factors(10, 8, 9, 3, rng);
    const Tensor3 x = reconstruct(truth);
    FitOptions opts;
    opts.seed = 2;
    const FitResult at_rank = als_fit(x, 3, opts);
    const double err3 = relative_error(x, reconstruct(at_rank.factors));
    CHECK(err3 <= 1e-8);

    const FitResult below = als_fit(x, 2, opts);
    const double err2 = relative_error(x, reconstruct(below.factors));
    CHECK(err2 > 0.0);
    CHECK(err2 >= err3);
}

TEST_CASE("als_fit rejects non-finite input and bad options") {
    Tensor3 x(2, 2, 2);
    x(0, 0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(als_fit(x, 1), std::invalid_argument);

    FitOptions bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(als_fit(Tensor3::constant(2, 2, 2, 1.0), 1, bad), std::invalid_argument);
    CHECK_THROWS_AS(als_fit(Tensor3::constant(2, 2, 2, 1.0), 0), std::invalid_argument);
}

TEST_CASE("masked_als_fit with an all-ones mask reproduces als_fit exactly") {
    std::mt19937_64 rng(17);
    const Tensor3 x = oracles::random_tensor(6, 4, 5, rng);
    FitOptions opts;
    opts.seed = 5;
    opts.max_sweeps = 40;
    const FitResult full = als_fit(x, 2, opts);
    const FitResult masked = masked_als_fit(x, MaskTensor::ones(6, 4, 5), 2, opts);
    REQUIRE(full.objective_trace.size() == masked.objective_trace.size());
    for (size_t t = 0; t < full.objective_trace.size(); ++t) {
        CHECK(full.objective_trace[t] == masked.objective_trace[t]);
    }
    CHECK(bitwise_equal(full.factors.a, masked.factors.a));
    CHECK(bitwise_equal(full.factors.c, masked.factors.c));
}

TEST_CASE("masked_als_fit imputes a certified slab sample of a rank-2 tensor") {
    std::mt19937_64 rng(19);
    const CpdFactors truth = oracles::random_factors(10, 5, 12, 2, rng);
    const Tensor3 x = reconstruct(truth);

    const SlabMinima minima = min_slab_requirements(10, 5, 12, 2);
    REQUIRE(minima.feasible);
    const auto [n_h, n_f] = minima.minimal_pairs.front();
    std::vector<int> horizontal(n_h), frontal(n_f);
    for (int t = 0; t < n_h; ++t) horizontal[t] = t;
    for (int t = 0; t < n_f; ++t) frontal[t] = 2 * t + 3;
    const SlabScheme scheme(horizontal, frontal, 10, 5, 12);
    REQUIRE(check_slab_conditions(scheme, 2).satisfied);
    const MaskTensor mask = build_slab_mask(scheme);

    FitOptions opts;
    opts.seed = 3;
    const FitResult fit = masked_als_fit(x, mask, 2, opts);
    CHECK(held_out_error(x, reconstruct(fit.factors), mask) <= 1e-6);
}

TEST_CASE("masked_als_fit on a single frontal slab: zero objective, no extrapolation") {
    std::mt19937_64 rng(23);
    const CpdFactors truth = oracles::random_factors(10, 5, 12, 2, rng);
    const Tensor3 x = reconstruct(truth);
    const SlabScheme scheme({}, {4}, 10, 5, 12);
    const MaskTensor mask = build_slab_mask(scheme);
    CHECK_FALSE(check_slab_conditions(scheme, 2).satisfied);

    FitOptions opts;
    opts.seed = 4;
    const FitResult fit = masked_als_fit(x, mask, 2, opts);
    CHECK(fit.final_objective() < 1e-10);
    CHECK(held_out_error(x, reconstruct(fit.factors), mask) > 0.1);
    CHECK(fit.undetermined_rows[2].size() == 11);  // every unsampled time step
}

TEST_CASE("masked_als_fit rejects an empty mask and mismatched dims") {
    const Tensor3 x = Tensor3::constant(3, 3, 3, 1.0);
    CHECK_THROWS_AS(masked_als_fit(x, MaskTensor(3, 3, 3), 1), std::invalid_argument);
    CHECK_THROWS_AS(masked_als_fit(x, MaskTensor::ones(2, 3, 3), 1), std::invalid_argument);
}

TEST_CASE("masked objective trace is non-increasing on random instances") {
    std::mt19937_64 rng(29);
    std::uniform_int_distribution<int> dim(2, 8);
    std::uniform_int_distribution<int> rank_pick(1, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int di = dim(rng), dj = dim(rng), dk = dim(rng);
        const Tensor3 x = oracles::random_tensor(di, dj, dk, rng);
        MaskTensor mask(di, dj, dk);
        for (int i = 0; i < di; ++i)
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k) mask.set(i, j, k, unit(rng) < 0.6);
        if (!mask.any()) mask.set(0, 0, 0, true);

        FitOptions opts;
        opts.seed = 1000 + trial;
        opts.restarts = 1;
        opts.max_sweeps = 30;
        const FitResult fit = masked_als_fit(x, mask, rank_pick(rng), opts);
        for (size_t t = 1; t < fit.objective_trace.size(); ++t) {
            const double prev = fit.objective_trace[t - 1];
            const double cur = fit.objective_trace[t];
            CHECK(cur <= prev * (1.0 + 1e-12) + 1e-15);
        }
    }
}

TEST_CASE("mask locality: junk at unobserved entries changes nothing, bit for bit") {
    std::mt19937_64 rng(31);
    const Tensor3 x = oracles::random_tensor(7, 5, 6, rng);
    MaskTensor mask(7, 5, 6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 6; ++k) mask.set(i, j, k, unit(rng) < 0.5);
    mask.set(0, 0, 0, true);

    Tensor3 poisoned = x;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 6; ++k)
                if (!mask(i, j, k)) poisoned(i, j, k) = 1e6 + i - j * k;

    FitOptions opts;
    opts.seed = 77;
    opts.max_sweeps = 25;
    opts.restarts = 2;
    const FitResult clean_fit = masked_als_fit(x, mask, 2, opts);
    const FitResult poisoned_fit = masked_als_fit(poisoned, mask, 2, opts);
    CHECK(bitwise_equal(clean_fit.factors.a, poisoned_fit.factors.a));
    CHECK(bitwise_equal(clean_fit.factors.b, poisoned_fit.factors.b));
    CHECK(bitwise_equal(clean_fit.factors.c, poisoned_fit.factors.c));
    REQUIRE(clean_fit.objective_trace.size() == poisoned_fit.objective_trace.size());
    for (size_t t = 0; t < clean_fit.objective_trace.size(); ++t) {
        CHECK(clean_fit.objective_trace[t] == poisoned_fit.objective_trace[t]);
    }
}

TEST_CASE("reconstruct is invariant under permutation plus product-one scalings") {
    std::mt19937_64 rng(37);
    const CpdFactors f = oracles::random_factors(6, 5, 4, 4, rng);
    const Tensor3 base = reconstruct(f);

    std::uniform_real_distribution<double> unit(0.5, 2.0);
    const std::vector<int> perm{2, 0, 3, 1};
    CpdFactors g;
    g.a.resize(6, 4);
    g.b.resize(5, 4);
    g.c.resize(4, 4);
    for (int fcol = 0; fcol < 4; ++fcol) {
        const double l1 = unit(rng) * (fcol % 2 == 0 ? 1.0 : -1.0);
        const double l2 = unit(rng);
        const double l3 = 1.0 / (l1 * l2);
        g.a.col(fcol) = l1 * f.a.col(perm[fcol]);
        g.b.col(fcol) = l2 * f.b.col(perm[fcol]);
        g.c.col(fcol) = l3 * f.c.col(perm[fcol]);
    }
    const double rel = relative_error(base, reconstruct(g));
    CHECK(rel <= 1e-12);
}

TEST_CASE("normalize_factors: unit columns, positive leading entries, same tensor") {
    std::mt19937_64 rng(41);
    CpdFactors f = oracles::random_factors(5, 4, 3, 3, rng);
    const Tensor3 before = reconstruct(f);
    const auto degenerate = normalize_factors(f);
    CHECK(degenerate.empty());
    for (int col = 0; col < 3; ++col) {
        CHECK(f.a.col(col).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.b.col(col).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f.a(0, col) > 0.0);  // random dense columns: first entry is the leading nonzero
    }
    CHECK(relative_error(before, reconstruct(f)) <= 1e-12);

    CpdFactors with_zero = oracles::random_factors(5, 4, 3, 2, rng);
    with_zero.a.col(1).setZero();
    CHECK(normalize_factors(with_zero) == std::vector<int>{1});
}

TEST_CASE("align_factors identifies a constructed swap-and-scale ambiguity") {
    std::mt19937_64 rng(43);
    const CpdFactors truth = oracles::random_factors(8, 5, 4, 2, rng);
    CpdFactors est;
    est.a.resize(8, 2);
    est.b.resize(5, 2);
    est.c.resize(4, 2);
    // columns swapped, modes scaled by (2, 1/2, 1): product is one
    for (int f = 0; f < 2; ++f) {
        est.a.col(f) = 2.0 * truth.a.col(1 - f);
        est.b.col(f) = 0.5 * truth.b.col(1 - f);
        est.c.col(f) = truth.c.col(1 - f);
    }
    const FactorAlignment align = align_factors(est, truth);
    CHECK(align.match_error <= 1e-12);
    CHECK(align.permutation == std::vector<int>{1, 0});
    for (int f = 0; f < 2; ++f) {
        CHECK(align.scale_a(f) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(align.scale_b(f) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(align.scale_c(f) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // applying the alignment must not change the reconstruction
    const CpdFactors aligned = apply_alignment(est, align);
    CHECK(relative_error(reconstruct(est), reconstruct(aligned)) <= 1e-12);
}

TEST_CASE("align_factors on identical factors returns the identity") {
    std::mt19937_64 rng(47);
    const CpdFactors truth = oracles::random_factors(6, 5, 4, 3, rng);
    const FactorAlignment align = align_factors(truth, truth);
    CHECK(align.match_error <= 1e-12);
    CHECK(align.permutation == std::vector<int>{0, 1, 2});
    for (int f = 0; f < 3; ++f) {
        CHECK(align.scale_a(f) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("align_factors rejects rank mismatches") {
    std::mt19937_64 rng(53);
    const CpdFactors a = oracles::random_factors(4, 4, 4, 2, rng);
    const CpdFactors b = oracles::random_factors(4, 4, 4, 3, rng);
    CHECK_THROWS_AS(align_factors(a, b), std::invalid_argument);
}

TEST_CASE("end-to-end: masked fit under certified sampling recovers the factors") {
    std::mt19937_64 rng(59);
    const CpdFactors truth = oracles::random_factors(20, 5, 24, 3, rng);
    const Tensor3 x = reconstruct(truth);

    const SlabMinima minima = min_slab_requirements(20, 5, 24, 3);
    REQUIRE(minima.feasible);
    const auto [n_h, n_f] = minima.minimal_pairs.front();
    std::vector<int> horizontal(n_h), frontal(n_f);
    for (int t = 0; t < n_h; ++t) horizontal[t] = 3 * t;
    for (int t = 0; t < n_f; ++t) frontal[t] = 5 * t + 2;
    const MaskTensor mask = build_slab_mask(SlabScheme(horizontal, frontal, 20, 5, 24));

    FitOptions opts;
    opts.seed = 6;
    const FitResult fit = masked_als_fit(x, mask, 3, opts);
    const FactorAlignment align = align_factors(fit.factors, truth);
    CHECK(align.match_error <= 1e-5);
}

TEST_CASE("generate-and-recover: full observation, 100 seeded trials") {
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::mt19937_64 rng(9000 + trial);
        const CpdFactors truth = oracles::random_factors(8, 6, 5, 3, rng);
        const Tensor3 x = reconstruct(truth);
        FitOptions opts;
        opts.seed = 100 + trial;
        const FitResult fit = als_fit(x, 3, opts);
        if (align_factors(fit.factors, truth).match_error <= 1e-6) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("rank_sweep: constructed rank-5 data") {
    std::mt19937_64 rng(61);
    const CpdFactors truth = oracles::random_factors(12, 9, 7, 5, rng);
    const Tensor3 x = reconstruct(truth);
    FitOptions opts;
    opts.seed = 8;
    const auto points = rank_sweep(x, 6, opts);
    REQUIRE(points.size() == 6);
    for (const auto& p : points) CHECK(p.ok);
    for (int k = 0; k < 4; ++k) CHECK(points[k].relative_error > 1e-8);
    CHECK(points[4].relative_error <= 1e-8);
    for (size_t t = 1; t < points.size(); ++t) {
        CHECK(points[t].relative_error <= points[t - 1].relative_error + 1e-10);
    }
}

TEST_CASE("rank_sweep: k_max = 1 on a rank-one tensor") {
    std::mt19937_64 rng(67);
    const CpdFactors truth = oracles::random_factors(6, 5, 4, 1, rng);
    const auto points = rank_sweep(reconstruct(truth), 1);
    REQUIRE(points.size() == 1);
    CHECK(points[0].ok);
    CHECK(points[0].relative_error <= 1e-10);
}

TEST_CASE("restart selection returns a candidate no worse than the first stream") {
    std::mt19937_64 rng(71);
    const CpdFactors truth = oracles::random_factors(9, 7, 6, 3, rng);
    const Tensor3 x = reconstruct(truth);
    FitOptions opts;
    opts.seed = 12;
    opts.restarts = 4;
    const FitResult best = als_fit(x, 3, opts);
    CHECK(best.restart_index >= 0);
    CHECK(best.restart_index < 4);

    FitOptions single = opts;
    single.restarts = 1;
    const FitResult first = als_fit(x, 3, single);
    CHECK(best.final_objective() <= first.final_objective() * (1.0 + 1e-12) + 1e-300);
}

#include "gridcpd/scheme_init.hpp"

TEST_CASE("fully observed rows are detected from the mask") {
    MaskTensor mask(4, 3, 2);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 2; ++k) {
            mask.set(1, j, k, true);
            mask.set(3, j, k, true);
        }
    mask.set(0, 0, 0, true);  // partial row
    CHECK(fully_observed_rows(mask) == std::vector<int>{1, 3});
}

TEST_CASE("complete-rows warm start pins B and C from the dense subtensor") {
    std::mt19937_64 rng(73);
    const CpdFactors truth = oracles::random_factors(12, 5, 10, 2, rng);
    const Tensor3 x = reconstruct(truth);
    const SlabScheme scheme({0, 2, 5, 9}, {3}, 12, 5, 10);
    const MaskTensor mask = build_slab_mask(scheme);

    FitOptions opts;
    opts.seed = 21;
    const auto warm = complete_rows_warm_start(x, mask, 2, opts);
    REQUIRE(warm.has_value());
    // B and C come from an identifiable dense fit, so the warm model must
    // already reproduce the sampled horizontal slabs
    const Tensor3 recon = reconstruct(*warm);
    for (int i : scheme.horizontal)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 10; ++k)
                CHECK(recon(i, j, k) == doctest::Approx(x(i, j, k)).epsilon(1e-6));

    // anchors: rows not in the subtensor carry the mean loading
    CHECK(warm->a.row(1) == warm->a.row(3));

    // degenerate cases return nothing
    CHECK_FALSE(complete_rows_warm_start(x, MaskTensor(12, 5, 10), 2, opts).has_value());
    CHECK_FALSE(complete_rows_warm_start(x, MaskTensor::ones(12, 5, 10), 2, opts).has_value());
}

TEST_CASE("warm-started masked fit recovers from the structural start") {
    std::mt19937_64 rng(79);
    const CpdFactors truth = oracles::random_factors(16, 5, 12, 2, rng);
    const Tensor3 x = reconstruct(truth);
    const SlabScheme scheme({0, 4, 8, 12}, {5}, 16, 5, 12);
    REQUIRE(check_slab_conditions(scheme, 2).satisfied);
    const MaskTensor mask = build_slab_mask(scheme);

    FitOptions opts;
    opts.seed = 31;
    std::vector<CpdFactors> warm;
    if (auto w = complete_rows_warm_start(x, mask, 2, opts)) warm.push_back(*w);
    REQUIRE(warm.size() == 1);
    const FitResult fit = masked_als_fit(x, mask, 2, opts, warm);
    CHECK(align_factors(fit.factors, truth).match_error <= 1e-5);
}
