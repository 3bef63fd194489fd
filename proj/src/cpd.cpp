#include "gridcpd/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace gridcpd {

namespace {

constexpr double kDampingFactor = 1e-10;      // Tikhonov damping relative to mean gram diagonal
constexpr double kGreedyAmbiguityGap = 1e-6;  // cosine gap below which greedy matching defers

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Rows of one factor mode, grouped by identical observed column sets in the
// corresponding unfolding. Slab and fiber masks collapse to a handful of
// groups, so the per-sweep normal equations become a few dense products.
struct RowGroup {
    std::vector<int> rows;
    std::vector<int> cols;  // unfolding column indices, ascending
};

struct ModeIndex {
    std::vector<RowGroup> groups;
    std::vector<int> empty_rows;
};

std::array<ModeIndex, 3> build_mode_indexes(const MaskTensor& mask) {
    const int di = mask.dim0(), dj = mask.dim1(), dk = mask.dim2();
    std::array<ModeIndex, 3> out;

    auto group_rows = [](std::map<std::vector<int>, std::vector<int>>& by_cols,
                         ModeIndex& idx) {
        for (auto& [cols, rows] : by_cols) {
            idx.groups.push_back(RowGroup{std::move(rows), cols});
        }
    };

    {
        std::map<std::vector<int>, std::vector<int>> by_cols;
        for (int i = 0; i < di; ++i) {
            std::vector<int> cols;
            for (int k = 0; k < dk; ++k)
                for (int j = 0; j < dj; ++j)
                    if (mask(i, j, k)) cols.push_back(j + dj * k);
            if (cols.empty())
                out[0].empty_rows.push_back(i);
            else
                by_cols[std::move(cols)].push_back(i);
        }
        group_rows(by_cols, out[0]);
    }
    {
        std::map<std::vector<int>, std::vector<int>> by_cols;
        for (int j = 0; j < dj; ++j) {
            std::vector<int> cols;
            for (int i = 0; i < di; ++i)
                for (int k = 0; k < dk; ++k)
                    if (mask(i, j, k)) cols.push_back(k + dk * i);
            if (cols.empty())
                out[1].empty_rows.push_back(j);
            else
                by_cols[std::move(cols)].push_back(j);
        }
        group_rows(by_cols, out[1]);
    }
    {
        std::map<std::vector<int>, std::vector<int>> by_cols;
        for (int k = 0; k < dk; ++k) {
            std::vector<int> cols;
            for (int j = 0; j < dj; ++j)
                for (int i = 0; i < di; ++i)
                    if (mask(i, j, k)) cols.push_back(i + di * j);
            if (cols.empty())
                out[2].empty_rows.push_back(k);
            else
                by_cols[std::move(cols)].push_back(k);
        }
        group_rows(by_cols, out[2]);
    }
    return out;
}

// Khatri-Rao design rows for the observed columns of one group.
Matrix build_design(int mode, const CpdFactors& f, const std::vector<int>& cols,
                    int di, int dj, int dk) {
    const int rank = f.rank();
    Matrix design(static_cast<long>(cols.size()), rank);
    for (size_t t = 0; t < cols.size(); ++t) {
        const int c = cols[t];
        switch (mode) {
            case 0:
                design.row(t) = f.b.row(c % dj).cwiseProduct(f.c.row(c / dj));
                break;
            case 1:
                design.row(t) = f.c.row(c % dk).cwiseProduct(f.a.row(c / dk));
                break;
            default:
                design.row(t) = f.a.row(c % di).cwiseProduct(f.b.row(c / di));
                break;
        }
    }
    return design;
}

Matrix gather_values(int mode, const Tensor3& x, const RowGroup& g, int di, int dj,
                     int dk) {
    Matrix vals(static_cast<long>(g.cols.size()), static_cast<long>(g.rows.size()));
    for (size_t s = 0; s < g.rows.size(); ++s) {
        const int r = g.rows[s];
        for (size_t t = 0; t < g.cols.size(); ++t) {
            const int c = g.cols[t];
            switch (mode) {
                case 0: vals(t, s) = x(r, c % dj, c / dj); break;
                case 1: vals(t, s) = x(c / dk, r, c % dk); break;
                default: vals(t, s) = x(c % di, c / di, r); break;
            }
        }
    }
    return vals;
}

// Quadratic terms added to the masked SSE: a norm penalty and an optional
// pull toward the anchor (the candidate's initial factors). Both fixed, so
// the fitted objective is well defined and block updates decrease it.
struct Regularizer {
    double ridge = 0.0;     // absolute coefficient on |factors|^2
    double anchor_pull = 0.0;  // absolute coefficient on |factors - anchor|^2
    const CpdFactors* anchor = nullptr;

    bool active() const { return ridge > 0.0 || anchor_pull > 0.0; }

    double penalty(const CpdFactors& f) const {
        double p = 0.0;
        if (ridge > 0.0) {
            p += ridge * (f.a.squaredNorm() + f.b.squaredNorm() + f.c.squaredNorm());
        }
        if (anchor_pull > 0.0 && anchor != nullptr) {
            p += anchor_pull * ((f.a - anchor->a).squaredNorm() +
                                (f.b - anchor->b).squaredNorm() +
                                (f.c - anchor->c).squaredNorm());
        }
        return p;
    }
};

// One block-coordinate update of the given mode against the regularized
// objective. When want_sse is set (the last mode of a sweep) also returns the
// masked SSE at the updated factors.
double update_mode(int mode, CpdFactors& f, const ModeIndex& idx, const Tensor3& x,
                   const Regularizer& reg, bool want_sse) {
    const int di = x.dim0(), dj = x.dim1(), dk = x.dim2();
    const int rank = f.rank();
    Matrix& target = (mode == 0) ? f.a : (mode == 1) ? f.b : f.c;
    const Matrix* anchor_mode = nullptr;
    if (reg.anchor_pull > 0.0 && reg.anchor != nullptr) {
        anchor_mode = (mode == 0) ? &reg.anchor->a : (mode == 1) ? &reg.anchor->b
                                                                 : &reg.anchor->c;
    }
    double sse = 0.0;
    for (const RowGroup& g : idx.groups) {
        Matrix design = build_design(mode, f, g.cols, di, dj, dk);
        Matrix vals = gather_values(mode, x, g, di, dj, dk);
        Matrix gram = design.transpose() * design;
        const double trace = gram.trace();
        if (!(trace > 0.0) && !reg.active()) {
            for (int r : g.rows) target.row(r).setZero();
            if (want_sse) sse += vals.squaredNorm();
            continue;
        }
        gram.diagonal().array() +=
            kDampingFactor * trace / rank + reg.ridge + reg.anchor_pull;
        Matrix rhs = design.transpose() * vals;  // rank x n_rows
        if (anchor_mode != nullptr) {
            for (size_t s = 0; s < g.rows.size(); ++s) {
                rhs.col(s) += reg.anchor_pull * anchor_mode->row(g.rows[s]).transpose();
            }
        }
        Matrix sol = gram.ldlt().solve(rhs);
        for (size_t s = 0; s < g.rows.size(); ++s) {
            target.row(g.rows[s]) = sol.col(s).transpose();
        }
        if (want_sse) sse += (vals - design * sol).squaredNorm();
    }
    return sse;
}

double masked_objective(const CpdFactors& f, const ModeIndex& idx_c, const Tensor3& x,
                        const Regularizer& reg) {
    const int di = x.dim0(), dj = x.dim1(), dk = x.dim2();
    double sse = 0.0;
    for (const RowGroup& g : idx_c.groups) {
        Matrix design = build_design(2, f, g.cols, di, dj, dk);
        Matrix vals = gather_values(2, x, g, di, dj, dk);
        Matrix cur(f.rank(), static_cast<long>(g.rows.size()));
        for (size_t s = 0; s < g.rows.size(); ++s) cur.col(s) = f.c.row(g.rows[s]).transpose();
        sse += (vals - design * cur).squaredNorm();
    }
    return sse + reg.penalty(f);
}

CpdFactors random_init(int di, int dj, int dk, int rank, std::uint64_t seed,
                       std::uint64_t stream, double scale) {
    std::mt19937_64 rng(mix_seed(seed, stream));
    std::normal_distribution<double> gauss(0.0, 1.0);
    CpdFactors f;
    f.a.resize(di, rank);
    f.b.resize(dj, rank);
    f.c.resize(dk, rank);
    for (Matrix* m : {&f.a, &f.b, &f.c})
        for (long col = 0; col < m->cols(); ++col)
            for (long row = 0; row < m->rows(); ++row)
                (*m)(row, col) = scale * gauss(rng);
    return f;
}

struct SweepRun {
    CpdFactors factors;
    std::vector<double> trace;
    bool converged = false;
    int sweeps = 0;
};

// Equalize column norms across the three modes; leaves the modeled tensor
// unchanged and keeps the per-row grams well scaled over long runs.
void balance_columns(CpdFactors& f) {
    for (int col = 0; col < f.rank(); ++col) {
        const double na = f.a.col(col).norm();
        const double nb = f.b.col(col).norm();
        const double nc = f.c.col(col).norm();
        if (na == 0.0 || nb == 0.0 || nc == 0.0) continue;
        const double g = std::cbrt(na * nb * nc);
        f.a.col(col) *= g / na;
        f.b.col(col) *= g / nb;
        f.c.col(col) *= g / nc;
    }
}

// obj_scale is the squared norm of the observed data, the reference for the
// optional absolute stopping floor.
SweepRun run_single(const Tensor3& x, const std::array<ModeIndex, 3>& idxs,
                    CpdFactors factors, const FitOptions& opts, double obj_scale,
                    const Regularizer& reg) {
    SweepRun run;
    run.trace.push_back(masked_objective(factors, idxs[2], x, reg));
    CpdFactors before_sweep;
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        // Norm balancing lowers the ridge term without changing the model;
        // with an anchor the factors must stay in the anchor's gauge.
        if (reg.anchor_pull == 0.0) balance_columns(factors);
        before_sweep = factors;
        update_mode(0, factors, idxs[0], x, reg, false);
        update_mode(1, factors, idxs[1], x, reg, false);
        double cur = update_mode(2, factors, idxs[2], x, reg, true) + reg.penalty(factors);

        // Extrapolated line-search step along the sweep direction; accepted
        // only when it lowers the objective. Plain ALS creeps through swamp
        // regions, this jumps across them.
        if (sweep >= 2) {
            const double beta = std::cbrt(static_cast<double>(sweep));
            CpdFactors cand;
            cand.a = factors.a + beta * (factors.a - before_sweep.a);
            cand.b = factors.b + beta * (factors.b - before_sweep.b);
            cand.c = factors.c + beta * (factors.c - before_sweep.c);
            const double cand_obj = masked_objective(cand, idxs[2], x, reg);
            if (std::isfinite(cand_obj) && cand_obj < cur) {
                factors = std::move(cand);
                cur = cand_obj;
            }
        }

        run.trace.push_back(cur);
        run.sweeps = sweep;
        const double prev = run.trace[run.trace.size() - 2];
        const double delta = std::abs(prev - cur);
        if (prev <= 1e-300 || delta / prev < opts.rel_tol ||
            (opts.abs_tol > 0.0 && delta < opts.abs_tol * obj_scale)) {
            run.converged = true;
            break;
        }
    }
    run.factors = std::move(factors);
    return run;
}

struct ObservedStats {
    double sum_sq = 0.0;
    long count = 0;

    double rms() const { return count == 0 ? 0.0 : std::sqrt(sum_sq / count); }
};

// Observed-entry statistics feeding the default init scale and the stopping
// floor; also rejects non-finite observed values.
ObservedStats observed_stats(const Tensor3& x, const ModeIndex& idx_a) {
    ObservedStats stats;
    const int dj = x.dim1();
    for (const RowGroup& g : idx_a.groups) {
        for (int i : g.rows) {
            for (int c : g.cols) {
                const double v = x(i, c % dj, c / dj);
                if (!std::isfinite(v)) {
                    throw std::invalid_argument("tensor has non-finite observed entries");
                }
                stats.sum_sq += v * v;
                ++stats.count;
            }
        }
    }
    return stats;
}

FitResult masked_core(const Tensor3& x, const MaskTensor& mask, int rank,
                      const FitOptions& opts, const std::vector<CpdFactors>& warm_starts) {
    opts.validate();
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    if (!mask.matches(x)) throw std::invalid_argument("mask dims must equal tensor dims");
    if (!mask.any()) throw std::invalid_argument("mask has no observed entries");

    const auto idxs = build_mode_indexes(mask);
    const ObservedStats stats = observed_stats(x, idxs[0]);
    const double scale = opts.init_scale.value_or(0.1 * std::cbrt(stats.rms()));
    const double mean_sq = stats.count == 0 ? 0.0 : stats.sum_sq / stats.count;
    Regularizer reg;
    reg.ridge = opts.ridge * mean_sq;
    reg.anchor_pull = opts.proximal * mean_sq;

    for (const CpdFactors& w : warm_starts) {
        w.require_consistent();
        if (w.rank() != rank || w.a.rows() != x.dim0() || w.b.rows() != x.dim1() ||
            w.c.rows() != x.dim2()) {
            throw std::invalid_argument("warm start factors do not match tensor/rank");
        }
    }

    const int n_candidates = static_cast<int>(warm_starts.size()) + opts.restarts;
    SweepRun best;
    int best_index = -1;
    double best_objective = std::numeric_limits<double>::infinity();
    for (int cand = 0; cand < n_candidates; ++cand) {
        CpdFactors init =
            cand < static_cast<int>(warm_starts.size())
                ? warm_starts[cand]
                : random_init(x.dim0(), x.dim1(), x.dim2(), rank, opts.seed,
                              static_cast<std::uint64_t>(cand - warm_starts.size()), scale);
        balance_columns(init);  // candidates compete on equal norm footing
        const CpdFactors anchor = reg.anchor_pull > 0.0 ? init : CpdFactors{};
        Regularizer cand_reg = reg;
        if (reg.anchor_pull > 0.0) cand_reg.anchor = &anchor;
        SweepRun run = run_single(x, idxs, std::move(init), opts, stats.sum_sq, cand_reg);
        double fin = run.trace.back();
        if (!std::isfinite(fin)) fin = std::numeric_limits<double>::infinity();
        if (best_index < 0 || fin < best_objective) {
            best = std::move(run);
            best_index = cand;
            best_objective = fin;
        }
    }

    FitResult result;
    result.factors = std::move(best.factors);
    result.objective_trace = std::move(best.trace);
    result.converged = best.converged;
    result.sweeps_used = best.sweeps;
    result.restart_index = best_index;
    for (int m = 0; m < 3; ++m) {
        result.undetermined_rows[m] = idxs[m].empty_rows;
        Matrix& target = (m == 0) ? result.factors.a
                       : (m == 1) ? result.factors.b
                                  : result.factors.c;
        for (int r : idxs[m].empty_rows) target.row(r).setZero();
    }
    result.degenerate_columns = normalize_factors(result.factors);
    return result;
}

// Minimum-cost assignment (Hungarian algorithm with potentials), O(n^3).
// Returns assign[row] = column.
std::vector<int> solve_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) assign[p[j] - 1] = j - 1;
    return assign;
}

Matrix unit_columns(const Matrix& m) {
    Matrix out = m;
    for (long f = 0; f < out.cols(); ++f) {
        const double norm = out.col(f).norm();
        if (norm > 0.0) out.col(f) /= norm;
    }
    return out;
}

}  // namespace

void CpdFactors::require_consistent() const {
    if (a.cols() != b.cols() || a.cols() != c.cols()) {
        throw std::invalid_argument("factor matrices must share a column count");
    }
    if (a.cols() < 1) throw std::invalid_argument("factor rank must be >= 1");
}

void FitOptions::validate() const {
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (abs_tol < 0.0) throw std::invalid_argument("abs_tol must be >= 0");
    if (ridge < 0.0) throw std::invalid_argument("ridge must be >= 0");
    if (proximal < 0.0) throw std::invalid_argument("proximal must be >= 0");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (init_scale && !(*init_scale > 0.0)) {
        throw std::invalid_argument("init_scale must be positive");
    }
}

Tensor3 reconstruct(const CpdFactors& factors) {
    factors.require_consistent();
    const int di = static_cast<int>(factors.a.rows());
    const int dj = static_cast<int>(factors.b.rows());
    const int dk = static_cast<int>(factors.c.rows());
    // mode-1 identity: unfold(X, 1) = A * khatri_rao(C, B)^T
    Matrix m1 = factors.a * khatri_rao(factors.c, factors.b).transpose();
    return refold(m1, 1, di, dj, dk);
}

std::vector<int> normalize_factors(CpdFactors& factors) {
    factors.require_consistent();
    std::vector<int> degenerate;
    auto first_nonzero_sign = [](const Vector& col) {
        for (long i = 0; i < col.size(); ++i) {
            if (col(i) != 0.0) return col(i) > 0.0 ? 1.0 : -1.0;
        }
        return 1.0;
    };
    for (int f = 0; f < factors.rank(); ++f) {
        const double norm_a = factors.a.col(f).norm();
        const double norm_b = factors.b.col(f).norm();
        if (norm_a == 0.0 || norm_b == 0.0) {
            degenerate.push_back(f);
            continue;
        }
        const double sign_a = first_nonzero_sign(factors.a.col(f));
        const double sign_b = first_nonzero_sign(factors.b.col(f));
        factors.a.col(f) *= sign_a / norm_a;
        factors.b.col(f) *= sign_b / norm_b;
        factors.c.col(f) *= sign_a * sign_b * norm_a * norm_b;
    }
    return degenerate;
}

FitResult als_fit(const Tensor3& x, int rank, const FitOptions& opts) {
    return masked_core(x, MaskTensor::ones(x.dim0(), x.dim1(), x.dim2()), rank, opts, {});
}

FitResult masked_als_fit(const Tensor3& x, const MaskTensor& mask, int rank,
                         const FitOptions& opts) {
    return masked_core(x, mask, rank, opts, {});
}

FitResult masked_als_fit(const Tensor3& x, const MaskTensor& mask, int rank,
                         const FitOptions& opts, const std::vector<CpdFactors>& warm_starts) {
    return masked_core(x, mask, rank, opts, warm_starts);
}

FactorAlignment align_factors(const CpdFactors& estimate, const CpdFactors& reference) {
    estimate.require_consistent();
    reference.require_consistent();
    if (estimate.rank() != reference.rank()) {
        throw std::invalid_argument("align_factors requires equal ranks");
    }
    if (estimate.a.rows() != reference.a.rows() || estimate.b.rows() != reference.b.rows() ||
        estimate.c.rows() != reference.c.rows()) {
        throw std::invalid_argument("align_factors requires equal factor dims");
    }
    const int rank = reference.rank();

    // Match on the mode with the largest dimension.
    const std::array<long, 3> dims{reference.a.rows(), reference.b.rows(),
                                   reference.c.rows()};
    const int mode = static_cast<int>(
        std::max_element(dims.begin(), dims.end()) - dims.begin());
    const Matrix& est_m = (mode == 0) ? estimate.a : (mode == 1) ? estimate.b : estimate.c;
    const Matrix& ref_m = (mode == 0) ? reference.a : (mode == 1) ? reference.b : reference.c;
    Matrix similarity = (unit_columns(ref_m).transpose() * unit_columns(est_m)).cwiseAbs();

    std::vector<int> perm(rank, -1);
    std::vector<char> ref_used(rank, 0), est_used(rank, 0);
    bool ambiguous = false;
    for (int step = 0; step < rank && !ambiguous; ++step) {
        double best = -1.0, second = -1.0;
        int best_r = -1, best_e = -1;
        for (int r = 0; r < rank; ++r) {
            if (ref_used[r]) continue;
            for (int e = 0; e < rank; ++e) {
                if (est_used[e]) continue;
                const double s = similarity(r, e);
                if (s > best) {
                    second = best;
                    best = s;
                    best_r = r;
                    best_e = e;
                } else if (s > second) {
                    second = s;
                }
            }
        }
        if (second >= 0.0 && best - second < kGreedyAmbiguityGap) {
            ambiguous = true;
            break;
        }
        perm[best_r] = best_e;
        ref_used[best_r] = 1;
        est_used[best_e] = 1;
    }
    if (ambiguous) {
        perm = solve_assignment(-similarity);
    }

    FactorAlignment out;
    out.permutation = perm;
    out.scale_a.resize(rank);
    out.scale_b.resize(rank);
    out.scale_c.resize(rank);

    auto ls_scale = [](const Vector& est_col, const Vector& ref_col) {
        const double denom = est_col.squaredNorm();
        return denom > 0.0 ? est_col.dot(ref_col) / denom : 1.0;
    };
    for (int f = 0; f < rank; ++f) {
        const int e = perm[f];
        double sa = ls_scale(estimate.a.col(e), reference.a.col(f));
        double sb = ls_scale(estimate.b.col(e), reference.b.col(f));
        double sc = ls_scale(estimate.c.col(e), reference.c.col(f));
        const double prod = sa * sb * sc;
        if (prod == 0.0 || !std::isfinite(prod)) {
            sa = sb = sc = 1.0;
        } else {
            const double adjust = std::cbrt(1.0 / prod);
            sa *= adjust;
            sb *= adjust;
            sc *= adjust;
        }
        out.scale_a(f) = sa;
        out.scale_b(f) = sb;
        out.scale_c(f) = sc;
    }

    double err = 0.0;
    auto column_error = [&](const Matrix& est, const Matrix& ref, const Vector& scale) {
        for (int f = 0; f < rank; ++f) {
            const Vector diff = scale(f) * est.col(perm[f]) - ref.col(f);
            const double ref_norm = ref.col(f).norm();
            const double rel = ref_norm > 0.0 ? diff.norm() / ref_norm : diff.norm();
            err = std::max(err, rel);
        }
    };
    column_error(estimate.a, reference.a, out.scale_a);
    column_error(estimate.b, reference.b, out.scale_b);
    column_error(estimate.c, reference.c, out.scale_c);
    out.match_error = err;
    return out;
}

CpdFactors apply_alignment(const CpdFactors& estimate, const FactorAlignment& alignment) {
    estimate.require_consistent();
    const int rank = estimate.rank();
    if (static_cast<int>(alignment.permutation.size()) != rank) {
        throw std::invalid_argument("alignment rank does not match factors");
    }
    CpdFactors out;
    out.a.resize(estimate.a.rows(), rank);
    out.b.resize(estimate.b.rows(), rank);
    out.c.resize(estimate.c.rows(), rank);
    for (int f = 0; f < rank; ++f) {
        const int e = alignment.permutation[f];
        out.a.col(f) = alignment.scale_a(f) * estimate.a.col(e);
        out.b.col(f) = alignment.scale_b(f) * estimate.b.col(e);
        out.c.col(f) = alignment.scale_c(f) * estimate.c.col(e);
    }
    return out;
}

std::vector<RankSweepPoint> rank_sweep(const Tensor3& x, int k_max, const FitOptions& opts) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    const MaskTensor full = MaskTensor::ones(x.dim0(), x.dim1(), x.dim2());

    std::vector<RankSweepPoint> points;
    std::optional<CpdFactors> previous;
    double previous_error = std::numeric_limits<double>::infinity();

    for (int k = 1; k <= k_max; ++k) {
        RankSweepPoint point;
        point.rank = k;
        try {
            std::vector<CpdFactors> warm;
            if (previous) {
                // Previous best factors plus one small random column: the first
                // sweep from this start can only improve on the rank-(k-1)
                // objective, which keeps the error curve non-increasing.
                CpdFactors padded = *previous;
                std::mt19937_64 rng(mix_seed(opts.seed, 0x5EEDCULL + k));
                std::normal_distribution<double> gauss(0.0, 1.0);
                const double pad_scale =
                    0.01 * (1.0 + padded.c.norm() / std::sqrt(static_cast<double>(
                                      padded.c.size() > 0 ? padded.c.size() : 1)));
                auto grow = [&](Matrix& m) {
                    m.conservativeResize(Eigen::NoChange, k);
                    for (long r = 0; r < m.rows(); ++r) m(r, k - 1) = pad_scale * gauss(rng);
                };
                grow(padded.a);
                grow(padded.b);
                grow(padded.c);
                warm.push_back(std::move(padded));
            }
            FitResult fit = masked_core(x, full, k, opts, warm);
            double err = relative_error(x, reconstruct(fit.factors));
            if (err > previous_error + 1e-10) {
                FitOptions retry = opts;
                retry.restarts = opts.restarts * 3;
                retry.seed = mix_seed(opts.seed, 0xA17ULL + k);
                FitResult refit = masked_core(x, full, k, retry, warm);
                const double err2 = relative_error(x, reconstruct(refit.factors));
                if (err2 < err) {
                    err = err2;
                    fit = std::move(refit);
                }
            }
            point.relative_error = err;
            point.ok = true;
            previous = fit.factors;
            previous_error = err;
        } catch (const std::exception& e) {
            point.relative_error = std::numeric_limits<double>::quiet_NaN();
            point.ok = false;
            point.message = e.what();
        }
        points.push_back(std::move(point));
    }
    return points;
}

}  // namespace gridcpd
