#pragma once

#include "gridcpd/cpd.hpp"
#include "gridcpd/sampling.hpp"

#include <optional>
#include <vector>

namespace gridcpd {

/// Phase rows whose entire (measurement, time) grid is observed.
std::vector<int> fully_observed_rows(const MaskTensor& mask);

/// Initial factors for a masked fit, built from the fully observed rows the
/// way the structured-sampling recovery arguments work: those rows form a
/// dense subtensor sharing the measurement and time factors with the full
/// tensor, so fit it directly and keep its A rows. Each remaining row of A
/// starts at the mean A row of the complete rows in its class (row_classes,
/// e.g. the phase letter; one class when omitted), a sensible anchor for
/// factor directions its own observations cannot pin down. Returns nothing
/// when no row is complete, or when all of them are (a dense fit of the
/// whole tensor is no shortcut).
///
/// Under slab sampling the complete rows are the sampled horizontal slabs;
/// under fiber sampling with zero-injection extras they are the slack and
/// zero-injection phases.
std::optional<CpdFactors> complete_rows_warm_start(const Tensor3& x, const MaskTensor& mask,
                                                   int rank, const FitOptions& opts,
                                                   const std::vector<int>* row_classes = nullptr);

}  // namespace gridcpd
