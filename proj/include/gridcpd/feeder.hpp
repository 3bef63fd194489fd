#pragma once

#include "gridcpd/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridcpd {

/// Fixed measurement axis of every state tensor (dim1 == 5).
namespace measurement {
constexpr int kReV = 0;   // real part of the voltage phasor, p.u.
constexpr int kImV = 1;   // imaginary part of the voltage phasor, p.u.
constexpr int kVmag = 2;  // voltage magnitude, p.u.
constexpr int kP = 3;     // active power, kW (demand positive)
constexpr int kQ = 4;     // reactive power, kVAr (demand positive)
constexpr int kCount = 5;
extern const std::array<const char*, kCount> kNames;
}  // namespace measurement

/// Axis semantics of a PHASE x MEASUREMENT x TIME state tensor.
struct StateTensorMeta {
    std::vector<std::string> phase_labels;        // length dim0, "<bus>.<a|b|c>"
    std::vector<double> timestamps_min;           // length dim2, minutes since midnight
    std::vector<std::uint8_t> zero_injection;     // per phase: p and q known to be 0

    int phase_count() const { return static_cast<int>(phase_labels.size()); }
    int step_count() const { return static_cast<int>(timestamps_min.size()); }
    int phase_index(const std::string& label) const;  // -1 when unknown
    void validate() const;
};

/// One bus of a radial feeder. Buses other than the slack reference their
/// parent through the tree edge (series impedance r + jx, per unit, applied
/// identically to every phase the bus carries).
struct FeederBus {
    std::string name;
    std::array<bool, 3> has_phase{false, false, false};  // a, b, c
    std::array<bool, 3> has_load{false, false, false};
    std::array<bool, 3> has_solar{false, false, false};
    int parent = -1;        // -1 only for the slack bus
    double line_r = 0.0;    // p.u., edge to parent
    double line_x = 0.0;
};

/// Radial feeder model. buses[0] is the slack bus with fixed voltage
/// 1 per unit at angles {0, -120, +120} degrees on phases {a, b, c}.
struct FeederModel {
    std::string name;
    double sbase_kva = 100.0;  // per-phase power base
    std::vector<FeederBus> buses;

    int phase_count() const;
    /// Flat phase order: buses in file order, phases a,b,c within a bus.
    std::vector<std::pair<int, int>> phase_list() const;  // (bus, phase letter 0..2)
    std::vector<std::string> phase_labels() const;
    /// Indices (in the flat phase order) of the slack bus phases.
    std::vector<int> slack_phase_indices() const;
    /// Tree structure, connectivity and per-phase consistency checks.
    void validate() const;
};

/// 8-phase, 5-bus feeder for fast tests.
FeederModel make_tiny_feeder();

/// Randomly grown radial feeder with mixed 1/2/3-phase laterals.
FeederModel generate_feeder(int bus_count, std::uint64_t seed);

/// Default experiment feeder: generate_feeder(50, 20240711).
FeederModel make_default_feeder();

enum class ProfileMode { Consecutive, Nonconsecutive };

ProfileMode profile_mode_from_string(const std::string& s);
std::string to_string(ProfileMode mode);

/// Per-phase load and solar time series driving the simulation.
///   Consecutive: 1-minute spacing starting 11:00, smooth daily-curve samples
///   with AR(1) noise (sigma 1% of the curve, step correlation 0.97).
///   Nonconsecutive: 20-minute spacing over a full day, independent samples
///   with 5x the noise amplitude.
struct ProfileSet {
    ProfileMode mode = ProfileMode::Consecutive;
    std::uint64_t seed = 0;
    std::vector<double> timestamps_min;  // length = steps
    Matrix load_p_kw;                    // phases x steps, zero for no-load phases
    Matrix load_q_kvar;
    Matrix solar_kw;                     // zero for phases without solar

    int step_count() const { return static_cast<int>(timestamps_min.size()); }
};

ProfileSet make_profiles(const FeederModel& feeder, ProfileMode mode, std::uint64_t seed,
                         int steps = 72);

struct SimulationResult {
    Tensor3 state;  // phases x 5 x steps
    StateTensorMeta meta;
};

/// Per-step backward/forward sweep power flow on each phase's radial
/// subnetwork (mutual coupling between phases is not modeled). Throws with
/// the failing step index if any step does not converge. Power-balance
/// residuals of accepted solutions are below 1e-8 p.u.
SimulationResult simulate(const FeederModel& feeder, const ProfileSet& profiles);

/// One ingested record: measurements for a (time, phase) pair; absent values
/// become unobserved entries in the companion mask.
struct StateRecord {
    double timestamp_min = 0.0;
    std::string phase_label;
    std::array<std::optional<double>, measurement::kCount> values;
};

struct TensorWithMask {
    Tensor3 tensor;
    MaskTensor mask;
};

/// Place records into a tensor along the fixed measurement axis. Rejects
/// duplicate (phase, measurement, time) cells and unknown labels/timestamps.
/// Row order does not affect the result.
TensorWithMask build_state_tensor(const std::vector<StateRecord>& records,
                                  const StateTensorMeta& meta);

/// Multiplicative Gaussian perturbation of the observed entries:
/// x -> x * (1 + percent/100 * g). Unobserved entries are untouched.
Tensor3 add_noise(const Tensor3& x, const MaskTensor& observed, double percent,
                  std::uint64_t seed);

/// Mask of the p and q entries of zero-injection phases (known to be zero at
/// all times); OR this with a sampling mask to model the extra knowledge.
MaskTensor zero_injection_extras(const StateTensorMeta& meta);

}  // namespace gridcpd
