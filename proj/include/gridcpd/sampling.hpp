#pragma once

#include "gridcpd/tensor.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace gridcpd {

/// Slab observation scheme: fully observed phases (horizontal slabs) plus
/// fully observed time snapshots (frontal slabs).
struct SlabScheme {
    std::vector<int> horizontal;  // phase indices, deduplicated ascending
    std::vector<int> frontal;     // time indices, deduplicated ascending
    int dim0 = 0, dim1 = 0, dim2 = 0;

    SlabScheme() = default;
    SlabScheme(std::vector<int> horizontal_set, std::vector<int> frontal_set,
               int i_dim, int j_dim, int k_dim);
};

/// One fiber pattern: all (phase, measurement) pairs in rows x cols observed
/// along the full time axis.
struct FiberPattern {
    std::vector<int> rows;  // phase indices
    std::vector<int> cols;  // measurement indices
};

/// Two-pattern fiber observation scheme.
struct FiberScheme {
    std::array<FiberPattern, 2> patterns;
    int dim0 = 0, dim1 = 0, dim2 = 0;

    FiberScheme() = default;
    FiberScheme(FiberPattern first, FiberPattern second, int i_dim, int j_dim, int k_dim);
};

/// One evaluated inequality or set condition of an identifiability check.
struct ConditionClause {
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct IdentifiabilityReport {
    bool satisfied = false;
    /// Label of the satisfied condition, or of the first violated one.
    std::string which_condition;
    std::vector<ConditionClause> clauses;

    std::string to_text() const;
    std::string to_key_values() const;
};

MaskTensor build_slab_mask(const SlabScheme& scheme);
MaskTensor build_fiber_mask(const FiberScheme& scheme);

/// Generic rank bound for recovering factors of a fully observed tensor drawn
/// from a continuous distribution: with dims sorted descending as d1 >= d2 >= d3,
/// requires F <= 2^(floor(log2 d2) + floor(log2 d3) - 2).
IdentifiabilityReport generic_identifiability(int i_dim, int j_dim, int k_dim, int rank);

/// Sufficient conditions on (|horizontal|, |frontal|) for almost-sure factor
/// recovery under slab sampling. Satisfied when either of the two symmetric
/// conditions holds; the floor operator is floor(log2(.)).
IdentifiabilityReport check_slab_conditions(const SlabScheme& scheme, int rank);

/// The five sufficient conditions for the two-pattern fiber scheme:
/// cardinality minimums, row/column cover, pattern intersection, and the
/// per-pattern log2 inequality.
IdentifiabilityReport check_fiber_conditions(const FiberScheme& scheme, int rank);

struct SlabMinima {
    bool feasible = false;
    /// Pareto-minimal (|horizontal|, |frontal|) pairs that satisfy the slab
    /// conditions; every componentwise-larger pair also passes.
    std::vector<std::pair<int, int>> minimal_pairs;
    std::string note;
};

/// Exhaustive inversion of the slab conditions for placement planning.
SlabMinima min_slab_requirements(int i_dim, int j_dim, int k_dim, int rank);

/// Percentage of entries observed by the mask, optionally OR-ed with a second
/// mask of extra known entries.
double sampling_fraction(const MaskTensor& mask, const MaskTensor* extra_known = nullptr);

}  // namespace gridcpd
