#pragma once

#include "gridcpd/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridcpd {

/// Factor matrices of a polyadic model: A (dim0 x F), B (dim1 x F), C (dim2 x F).
/// The modeled tensor is sum_f A(:,f) ∘ B(:,f) ∘ C(:,f).
struct CpdFactors {
    Matrix a;
    Matrix b;
    Matrix c;

    int rank() const { return static_cast<int>(a.cols()); }
    void require_consistent() const;
};

struct FitOptions {
    int max_sweeps = 500;
    /// Stop when the objective change of a sweep drops below rel_tol relative
    /// to the previous objective.
    double rel_tol = 1e-9;
    /// Additional absolute stop: objective change below abs_tol times the
    /// squared norm of the observed data. Disabled at 0. Near-flat valleys
    /// never satisfy the relative test alone; experiment configs enable this.
    double abs_tol = 0.0;
    /// Factor ridge penalty, in units of the mean squared observed entry:
    /// the fitted objective becomes SSE + ridge*meansq*(|A|^2+|B|^2+|C|^2).
    /// Disabled at 0. Bounded factor norms keep imputation from inventing
    /// huge mutually-cancelling components when the data is only
    /// approximately low-rank.
    double ridge = 0.0;
    /// Anchored regularization, in units of the mean squared observed entry:
    /// adds proximal*meansq*|factors - init|^2 to the fitted objective, where
    /// init is each candidate's starting point. Directions the observed data
    /// does not excite then keep their initial values instead of being
    /// overwritten with noise, which is what structured warm starts rely on.
    /// Disabled at 0.
    double proximal = 0.0;
    int restarts = 5;
    std::uint64_t seed = 0;
    /// Standard deviation of the random factor initialization. When unset,
    /// defaults to 0.1 * (rms of observed entries)^(1/3).
    std::optional<double> init_scale;

    void validate() const;
};

struct FitResult {
    CpdFactors factors;
    /// Objective values: entry 0 is the objective at initialization, then one
    /// entry per completed sweep. Non-increasing for ALS.
    std::vector<double> objective_trace;
    bool converged = false;
    int sweeps_used = 0;
    int restart_index = 0;
    /// Rows with zero observed entries, per mode. Their factor values are
    /// unconstrained by the data; they are zeroed and must be excluded from
    /// error metrics.
    std::array<std::vector<int>, 3> undetermined_rows;
    /// Columns whose A or B norm vanished during normalization.
    std::vector<int> degenerate_columns;

    double final_objective() const {
        return objective_trace.empty() ? 0.0 : objective_trace.back();
    }
};

/// Dense reconstruction: result(i,j,k) = sum_f A(i,f) B(j,f) C(k,f).
Tensor3 reconstruct(const CpdFactors& factors);

/// Column normalization used for reproducible factor comparison: columns of A
/// and B are scaled to unit norm with their first nonzero entry positive, and
/// all magnitude/sign pushed into C. Returns the indices of columns whose A or
/// B norm was zero (left untouched, reported as degenerate).
std::vector<int> normalize_factors(CpdFactors& factors);

/// Alternating least squares fit of a rank-F model to a fully observed tensor.
/// Runs `opts.restarts` seeded initializations and returns the best final
/// objective. Objective: ||X - reconstruct(factors)||_F^2.
FitResult als_fit(const Tensor3& x, int rank, const FitOptions& opts = {});

/// ALS fit of the masked objective ||M * (X - reconstruct(factors))||_F^2.
/// Unobserved entries of X are never read. Rows with no observed entries are
/// reported in FitResult::undetermined_rows.
FitResult masked_als_fit(const Tensor3& x, const MaskTensor& mask, int rank,
                         const FitOptions& opts = {});

/// Same fit with caller-provided initial factor candidates tried before the
/// seeded random restarts (restart_index counts the warm starts first).
FitResult masked_als_fit(const Tensor3& x, const MaskTensor& mask, int rank,
                         const FitOptions& opts, const std::vector<CpdFactors>& warm_starts);

/// Column permutation plus per-mode scalings relating an estimate to a
/// reference factorization, up to the unavoidable scaling/permutation
/// ambiguity. The scalings satisfy scale_a(f)*scale_b(f)*scale_c(f) = 1 so
/// that applying the alignment leaves the reconstruction unchanged.
struct FactorAlignment {
    /// permutation[f] = estimate column matched to reference column f.
    std::vector<int> permutation;
    Vector scale_a;
    Vector scale_b;
    Vector scale_c;
    /// Max over modes and columns of the relative distance between the
    /// aligned estimate column and the reference column.
    double match_error = 0.0;
};

FactorAlignment align_factors(const CpdFactors& estimate, const CpdFactors& reference);

/// Permute and rescale estimate columns per the alignment. The reconstruction
/// of the result equals the reconstruction of the input.
CpdFactors apply_alignment(const CpdFactors& estimate, const FactorAlignment& alignment);

struct RankSweepPoint {
    int rank = 0;
    double relative_error = 0.0;
    bool ok = false;
    std::string message;  // set when ok is false
};

/// Relative error of the best-of-restarts rank-k fit for k = 1..k_max.
/// Each rank reuses the previous best factors as one warm-started candidate,
/// which keeps the curve non-increasing. Per-rank failures are recorded in the
/// returned points instead of aborting the sweep.
std::vector<RankSweepPoint> rank_sweep(const Tensor3& x, int k_max,
                                       const FitOptions& opts = {});

}  // namespace gridcpd
