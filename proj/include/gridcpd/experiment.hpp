#pragma once

#include "gridcpd/cpd.hpp"
#include "gridcpd/feeder.hpp"
#include "gridcpd/metrics.hpp"
#include "gridcpd/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridcpd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CertificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A fully seeded experiment description. Together with one base seed it
/// determines every byte of the outputs. Parsed from "key = value" text;
/// unknown or duplicate keys are rejected.
struct ExperimentConfig {
    // data source: either a feeder file or generator parameters
    std::string feeder_path;
    int feeder_generate_buses = 0;
    std::uint64_t feeder_generate_seed = 0;

    ProfileMode profile_mode = ProfileMode::Consecutive;
    std::uint64_t profile_seed = 1;
    int time_steps = 72;

    std::string scheme;  // "slab" | "fiber"
    int slab_horizontal_count = 0;
    int slab_frontal_count = 0;
    int fiber_pattern2_count = 0;
    std::vector<int> fiber_cols_1{0, 1, 2};
    std::vector<int> fiber_cols_2{3, 4};
    /// Optional sampling sweep. Slab: (horizontal count, frontal count) per
    /// level. Fiber: (|rows1|, |rows2|) per level, summing to phases + slack.
    std::vector<std::pair<int, int>> sweep_levels;

    int rank = 0;
    double noise_percent = 0.0;
    int runs = 1;
    bool zero_injection_known = true;
    MetricScope metric_scope = MetricScope::HeldOutOnly;

    int restarts = 5;
    int max_sweeps = 500;
    double rel_tol = 1e-9;
    double abs_tol = 0.0;
    double ridge = 0.0;
    double proximal = 0.0;
    std::uint64_t base_seed = 0;

    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_string(const std::string& text,
                                        const std::filesystem::path& base_dir);
    void validate() const;
    FitOptions fit_options(std::uint64_t run_seed) const;
};

struct RunRecord {
    int run_index = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    double final_objective = 0.0;
    double sampling_pct = 0.0;
    int undetermined_rows = 0;  // rows left undetermined after completion
    int completed_rows = 0;     // voltage-blind rows filled by class mean
    MetricsReport metrics;
};

struct ScenarioResult {
    IdentifiabilityReport certification;
    std::vector<RunRecord> runs;
    AggregatedMetrics aggregated;  // over converged runs only
    int non_converged = 0;
    double mean_sampling_pct = 0.0;
};

struct SweepLevelResult {
    std::pair<int, int> level;
    ScenarioResult scenario;
};

struct ExperimentResult {
    SimulationResult truth;
    std::optional<ScenarioResult> scenario;     // plain configs
    std::vector<SweepLevelResult> sweep;        // sweep configs
};

FeederModel load_feeder(const ExperimentConfig& config);

/// Ground truth for the configured feeder and profiles.
SimulationResult simulate_truth(const ExperimentConfig& config);

/// Certification of the configured sampling level(s) without simulating:
/// one (level, report) entry per sweep level, or a single entry for plain
/// configs. Representative index sets of the configured sizes are used (the
/// conditions depend only on the cardinalities and the fixed slack overlap).
std::vector<std::pair<std::pair<int, int>, IdentifiabilityReport>> certification_reports(
    const ExperimentConfig& config);

/// The masks a given run would observe (scheme mask, zero-injection extras,
/// and their union), for exporting sampling patterns.
struct SampleDraw {
    std::optional<SlabScheme> slab;
    std::optional<FiberScheme> fiber;
    MaskTensor scheme_mask;
    MaskTensor extras;
    MaskTensor observed;
};

SampleDraw draw_run_masks(const ExperimentConfig& config, const FeederModel& feeder,
                          const StateTensorMeta& meta, int run_index);

/// Monte-Carlo scenario driver: per run, draw the sampled phases (slack
/// always included, the rest from nonzero-load phases), build the mask, add
/// noise to the observed entries, fit, and evaluate on the noiseless truth.
/// Run r uses seed base_seed + r for both the sampling draw and the solver.
/// Refuses schemes that fail certification unless allow_uncertified is set;
/// fails when more than 20% of runs do not converge.
ExperimentResult run_experiment(const ExperimentConfig& config, bool allow_uncertified,
                                std::ostream* log = nullptr);

/// Plot-ready CSV for sweep results: scenario,measurement_pct,metric,value.
std::string sweep_curve_csv(const std::string& scenario_name,
                            const std::vector<SweepLevelResult>& levels);

}  // namespace gridcpd
