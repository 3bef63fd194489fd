#pragma once

#include "gridcpd/cpd.hpp"
#include "gridcpd/feeder.hpp"
#include "gridcpd/sampling.hpp"
#include "gridcpd/tensor.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridcpd::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Writes content to a temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Text tensor format: header line "tensor I J K", then one line per (i, j)
/// pair (i ascending, then j), holding the K values X(i,j,0..K-1). Finite
/// values round-trip bit-exactly.
void write_tensor_text(const std::filesystem::path& path, const Tensor3& x);
Tensor3 read_tensor_text(const std::filesystem::path& path);

/// Binary mirror: "GCT3" magic, u32 version, three u64 dims, then the values
/// as little-endian float64 in the same (i, j, k-fastest) order.
void write_tensor_binary(const std::filesystem::path& path, const Tensor3& x);
Tensor3 read_tensor_binary(const std::filesystem::path& path);

/// Mask format: header "mask I J K", then 0/1 entries in tensor text order.
void write_mask(const std::filesystem::path& path, const MaskTensor& m);
MaskTensor read_mask(const std::filesystem::path& path);

void write_fit_result(const std::filesystem::path& path, const FitResult& fit);
FitResult read_fit_result(const std::filesystem::path& path);

struct SchemeFile {
    std::string kind;  // "slab" | "fiber"
    std::optional<SlabScheme> slab;
    std::optional<FiberScheme> fiber;
};

void write_slab_scheme(const std::filesystem::path& path, const SlabScheme& s);
void write_fiber_scheme(const std::filesystem::path& path, const FiberScheme& s);
SchemeFile read_scheme(const std::filesystem::path& path);

void write_meta(const std::filesystem::path& path, const StateTensorMeta& meta);
StateTensorMeta read_meta(const std::filesystem::path& path);

/// CSV with header "timestamp_min,phase,re_v_pu,im_v_pu,vmag_pu,p_kw,q_kvar";
/// one row per (timestamp, phase). When a mask is given, unobserved cells are
/// written empty; empty cells read back as missing values.
void write_state_csv(const std::filesystem::path& path, const Tensor3& x,
                     const StateTensorMeta& meta, const MaskTensor* mask = nullptr);
std::vector<StateRecord> read_state_csv(const std::filesystem::path& path);

void write_feeder(const std::filesystem::path& path, const FeederModel& feeder);
FeederModel read_feeder(const std::filesystem::path& path);

}  // namespace gridcpd::io
