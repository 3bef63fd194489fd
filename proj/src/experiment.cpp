#include "gridcpd/experiment.hpp"

#include "gridcpd/io.hpp"
#include "gridcpd/scheme_init.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace gridcpd {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

long to_long(const std::string& value, const std::string& key) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': invalid integer '" + value + "'");
    }
    return v;
}

std::uint64_t to_u64(const std::string& value, const std::string& key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': invalid seed '" + value + "'");
    }
    return v;
}

double to_double(const std::string& value, const std::string& key) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': invalid number '" + value + "'");
    }
    return v;
}

bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<int> to_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config key '" + key + "': empty list item");
        out.push_back(static_cast<int>(to_long(item, key)));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<std::pair<int, int>> to_pair_list(const std::string& value, const std::string& key) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("config key '" + key + "': expected 'a:b' pairs, got '" + item +
                              "'");
        }
        out.emplace_back(static_cast<int>(to_long(trim(item.substr(0, colon)), key)),
                         static_cast<int>(to_long(trim(item.substr(colon + 1)), key)));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

// Random subset of `count` elements, deterministic for a given engine state.
// A null engine takes the first `count` elements (used for certification,
// which only depends on the cardinalities).
std::vector<int> sample_without_replacement(std::vector<int> pool, int count,
                                            std::mt19937_64* rng) {
    if (count > static_cast<int>(pool.size())) {
        throw ConfigError("cannot sample " + std::to_string(count) + " phases from a pool of " +
                          std::to_string(pool.size()));
    }
    if (rng != nullptr) {
        for (int t = 0; t < count; ++t) {
            std::uniform_int_distribution<int> pick(t, static_cast<int>(pool.size()) - 1);
            std::swap(pool[t], pool[pick(*rng)]);
        }
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<int> evenly_spaced_steps(int total, int count) {
    std::vector<int> out;
    out.reserve(count);
    for (int m = 1; m <= count; ++m) {
        out.push_back(static_cast<int>(static_cast<long>(m) * total / count) - 1);
    }
    return out;
}

struct PhasePools {
    std::vector<int> slack;
    std::vector<int> nonzero_load;  // excludes slack
};

PhasePools make_pools(const StateTensorMeta& meta, const std::vector<int>& slack_rows) {
    PhasePools pools;
    pools.slack = slack_rows;
    const std::set<int> slack_set(slack_rows.begin(), slack_rows.end());
    for (int i = 0; i < meta.phase_count(); ++i) {
        if (slack_set.count(i) != 0) continue;
        if (!meta.zero_injection[i]) pools.nonzero_load.push_back(i);
    }
    return pools;
}

struct DrawnScheme {
    std::optional<SlabScheme> slab;
    std::optional<FiberScheme> fiber;
};

DrawnScheme draw_scheme(const ExperimentConfig& config, std::pair<int, int> level,
                        const PhasePools& pools, int n_phases, int n_steps,
                        std::mt19937_64* rng) {
    DrawnScheme out;
    const int n_slack = static_cast<int>(pools.slack.size());
    if (config.scheme == "slab") {
        const auto [n_h, n_f] = level;
        if (n_h < n_slack) {
            throw ConfigError("slab horizontal count must cover the " +
                              std::to_string(n_slack) + " slack phases");
        }
        std::vector<int> horizontal = pools.slack;
        const auto drawn = sample_without_replacement(pools.nonzero_load, n_h - n_slack, rng);
        horizontal.insert(horizontal.end(), drawn.begin(), drawn.end());
        out.slab = SlabScheme(std::move(horizontal), evenly_spaced_steps(n_steps, n_f),
                              n_phases, measurement::kCount, n_steps);
    } else {
        const auto [n_r1, n_r2] = level;
        if (n_r1 + n_r2 != n_phases + n_slack) {
            throw ConfigError("fiber pattern sizes must sum to phases + slack (" +
                              std::to_string(n_phases + n_slack) + "), got " +
                              std::to_string(n_r1 + n_r2));
        }
        if (n_r2 < n_slack) {
            throw ConfigError("fiber pattern 2 must cover the slack phases");
        }
        // Pattern 2 rows: slack plus a draw from the nonzero-load phases;
        // pattern 1 rows: slack plus everything not drawn.
        std::vector<int> rows2 = pools.slack;
        const auto drawn = sample_without_replacement(pools.nonzero_load, n_r2 - n_slack, rng);
        rows2.insert(rows2.end(), drawn.begin(), drawn.end());
        const std::set<int> rows2_set(rows2.begin(), rows2.end());
        std::vector<int> rows1;
        for (int i = 0; i < n_phases; ++i) {
            if (rows2_set.count(i) == 0) rows1.push_back(i);
        }
        rows1.insert(rows1.end(), pools.slack.begin(), pools.slack.end());
        out.fiber = FiberScheme(FiberPattern{std::move(rows1), config.fiber_cols_1},
                                FiberPattern{std::move(rows2), config.fiber_cols_2}, n_phases,
                                measurement::kCount, n_steps);
    }
    return out;
}

IdentifiabilityReport certify(const ExperimentConfig& config, const DrawnScheme& scheme) {
    if (scheme.slab) return check_slab_conditions(*scheme.slab, config.rank);
    return check_fiber_conditions(*scheme.fiber, config.rank);
}

MaskTensor scheme_mask(const DrawnScheme& scheme) {
    if (scheme.slab) return build_slab_mask(*scheme.slab);
    return build_fiber_mask(*scheme.fiber);
}

PhasePools pools_from_feeder(const FeederModel& feeder) {
    PhasePools pools;
    pools.slack = feeder.slack_phase_indices();
    const auto phases = feeder.phase_list();
    for (size_t r = 0; r < phases.size(); ++r) {
        const auto [b, ph] = phases[r];
        if (b == 0) continue;
        const FeederBus& bus = feeder.buses[b];
        if (bus.has_load[ph] || bus.has_solar[ph]) {
            pools.nonzero_load.push_back(static_cast<int>(r));
        }
    }
    return pools;
}

std::vector<std::pair<int, int>> config_levels(const ExperimentConfig& config, int n_phases,
                                               int n_slack) {
    if (!config.sweep_levels.empty()) return config.sweep_levels;
    if (config.scheme == "slab") {
        return {{config.slab_horizontal_count, config.slab_frontal_count}};
    }
    return {{n_phases + n_slack - config.fiber_pattern2_count, config.fiber_pattern2_count}};
}

std::vector<CpdFactors> structural_warm_starts(const ExperimentConfig& config,
                                               const Tensor3& inputs,
                                               const MaskTensor& observed,
                                               const std::vector<int>& phase_classes,
                                               std::uint64_t run_seed) {
    const FitOptions sub_opts = config.fit_options(run_seed ^ 0x5DEECE66DULL);
    std::vector<CpdFactors> warm;
    try {
        auto w = complete_rows_warm_start(inputs, observed, config.rank, sub_opts,
                                          &phase_classes);
        if (w) warm.push_back(std::move(*w));
    } catch (const std::exception&) {
        // fall back to random restarts only
    }
    return warm;
}

// Phase letter (a/b/c from the trailing label character) as the anchor class.
std::vector<int> phase_letter_classes(const StateTensorMeta& meta) {
    std::vector<int> classes(meta.phase_count(), 0);
    for (int i = 0; i < meta.phase_count(); ++i) {
        const std::string& label = meta.phase_labels[i];
        classes[i] = label.empty() ? 0 : (label.back() - 'a');
    }
    return classes;
}

// Phases with no observed voltage-type entry. Their own fibers cannot place
// their voltage loading (the voltage-carrying factor directions are invisible
// to power measurements), so fitting them injects noise instead of signal.
std::vector<int> voltage_blind_rows(const MaskTensor& observed) {
    std::vector<int> rows;
    for (int i = 0; i < observed.dim0(); ++i) {
        bool any_voltage = false;
        for (int j : {measurement::kReV, measurement::kImV, measurement::kVmag}) {
            for (int k = 0; k < observed.dim2() && !any_voltage; ++k) {
                if (observed(i, j, k)) any_voltage = true;
            }
        }
        if (!any_voltage) rows.push_back(i);
    }
    return rows;
}

// Fill undetermined A rows with the mean loading of the determined rows in
// the same class. Returns the rows actually completed.
std::vector<int> complete_rows_by_class_mean(CpdFactors& factors,
                                             const std::vector<int>& undetermined,
                                             const std::vector<int>& classes) {
    const int rank = factors.rank();
    std::vector<char> is_undetermined(factors.a.rows(), 0);
    for (int r : undetermined) is_undetermined[r] = 1;
    std::map<int, std::pair<Vector, int>> sums;
    for (long i = 0; i < factors.a.rows(); ++i) {
        if (is_undetermined[i]) continue;
        auto [it, fresh] = sums.try_emplace(classes[i], Vector::Zero(rank).eval(), 0);
        it->second.first += factors.a.row(i).transpose();
        it->second.second += 1;
    }
    std::vector<int> completed;
    for (int r : undetermined) {
        const auto it = sums.find(classes[r]);
        if (it == sums.end() || it->second.second == 0) continue;
        factors.a.row(r) = (it->second.first / it->second.second).transpose();
        completed.push_back(r);
    }
    return completed;
}

RunRecord execute_run(const ExperimentConfig& config, std::pair<int, int> level, int run_index,
                      const SimulationResult& truth, const PhasePools& pools,
                      const MaskTensor& extras) {
    RunRecord rec;
    rec.run_index = run_index;
    rec.seed = config.base_seed + static_cast<std::uint64_t>(run_index);

    std::mt19937_64 rng(rec.seed);
    const DrawnScheme scheme = draw_scheme(config, level, pools, truth.state.dim0(),
                                           truth.state.dim2(), &rng);
    MaskTensor observed = scheme_mask(scheme);
    if (config.zero_injection_known) observed = observed.unite(extras);
    rec.sampling_pct = sampling_fraction(observed);

    const Tensor3 inputs = config.noise_percent > 0.0
                               ? add_noise(truth.state, observed, config.noise_percent, rec.seed)
                               : truth.state;
    const std::vector<int> classes = phase_letter_classes(truth.meta);

    // Voltage-blind phases are left out of the fit entirely (their power
    // fibers would only pollute the factors) and completed afterwards with
    // the mean loading of their phase class.
    const std::vector<int> blind = voltage_blind_rows(observed);
    MaskTensor fit_mask = observed;
    for (int i : blind)
        for (int j = 0; j < fit_mask.dim1(); ++j)
            for (int k = 0; k < fit_mask.dim2(); ++k) fit_mask.set(i, j, k, false);

    const std::vector<CpdFactors> warm =
        structural_warm_starts(config, inputs, fit_mask, classes, rec.seed);
    FitResult fit = masked_als_fit(inputs, fit_mask, config.rank,
                                   config.fit_options(rec.seed), warm);
    rec.converged = fit.converged;
    rec.final_objective = fit.final_objective();

    const std::vector<int> completed =
        complete_rows_by_class_mean(fit.factors, fit.undetermined_rows[0], classes);
    std::vector<char> was_completed(truth.state.dim0(), 0);
    for (int r : completed) was_completed[r] = 1;
    rec.completed_rows = static_cast<int>(completed.size());
    rec.undetermined_rows = static_cast<int>(fit.undetermined_rows[0].size() +
                                             fit.undetermined_rows[1].size() +
                                             fit.undetermined_rows[2].size()) -
                            rec.completed_rows;

    // Entries on rows that stayed undetermined carry no information; take
    // them out of the held-out scope instead of scoring initialization noise.
    MaskTensor metric_mask = observed;
    if (rec.undetermined_rows > 0) {
        for (int i : fit.undetermined_rows[0]) {
            if (was_completed[i]) continue;
            for (int j = 0; j < truth.state.dim1(); ++j)
                for (int k = 0; k < truth.state.dim2(); ++k) metric_mask.set(i, j, k, true);
        }
        for (int j : fit.undetermined_rows[1])
            for (int i = 0; i < truth.state.dim0(); ++i)
                for (int k = 0; k < truth.state.dim2(); ++k) metric_mask.set(i, j, k, true);
        for (int k : fit.undetermined_rows[2])
            for (int i = 0; i < truth.state.dim0(); ++i)
                for (int j = 0; j < truth.state.dim1(); ++j) metric_mask.set(i, j, k, true);
    }
    rec.metrics = evaluate(truth.state, reconstruct(fit.factors), metric_mask, truth.meta,
                           config.metric_scope);
    return rec;
}

ScenarioResult run_scenario(const ExperimentConfig& config, std::pair<int, int> level,
                            const SimulationResult& truth, const std::vector<int>& slack_rows,
                            bool allow_uncertified, std::ostream* log) {
    const PhasePools pools = make_pools(truth.meta, slack_rows);

    ScenarioResult result;
    {
        // Certification depends only on the set sizes, which are the same for
        // every run; evaluate it once on a representative scheme.
        const DrawnScheme representative = draw_scheme(
            config, level, pools, truth.state.dim0(), truth.state.dim2(), nullptr);
        result.certification = certify(config, representative);
    }
    if (!result.certification.satisfied && !allow_uncertified) {
        throw CertificationError("sampling scheme fails identifiability certification (" +
                                 result.certification.which_condition +
                                 "); re-run with the override flag to proceed");
    }

    const MaskTensor extras = zero_injection_extras(truth.meta);

    result.runs.resize(config.runs);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int batch = static_cast<int>(hw);
    for (int start = 0; start < config.runs; start += batch) {
        const int stop = std::min(config.runs, start + batch);
        std::vector<std::future<RunRecord>> futures;
        futures.reserve(stop - start);
        for (int r = start; r < stop; ++r) {
            futures.push_back(std::async(std::launch::async, [&, r] {
                return execute_run(config, level, r, truth, pools, extras);
            }));
        }
        for (int r = start; r < stop; ++r) result.runs[r] = futures[r - start].get();
    }

    std::vector<MetricsReport> converged_metrics;
    double pct_sum = 0.0;
    for (const RunRecord& rec : result.runs) {
        pct_sum += rec.sampling_pct;
        if (rec.converged) {
            converged_metrics.push_back(rec.metrics);
        } else {
            ++result.non_converged;
            if (log != nullptr) {
                *log << "warning: run " << rec.run_index << " did not converge within "
                     << config.max_sweeps << " sweeps; excluded from the aggregate\n";
            }
        }
    }
    result.mean_sampling_pct = pct_sum / config.runs;
    if (result.non_converged * 5 > config.runs) {
        throw SolverError("scenario failed: " + std::to_string(result.non_converged) + " of " +
                          std::to_string(config.runs) +
                          " runs did not converge (limit is 20%)");
    }
    result.aggregated = aggregate(converged_metrics);
    return result;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path.has_parent_path() ? path.parent_path() : ".");
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text,
                                               const std::filesystem::path& base_dir) {
    ExperimentConfig config;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("config key '" + key + "' appears twice");
        }

        if (key == "feeder") {
            const std::filesystem::path p(value);
            config.feeder_path = p.is_absolute() ? p.string() : (base_dir / p).string();
        } else if (key == "feeder_generate_buses") {
            config.feeder_generate_buses = static_cast<int>(to_long(value, key));
        } else if (key == "feeder_generate_seed") {
            config.feeder_generate_seed = to_u64(value, key);
        } else if (key == "profile_mode") {
            config.profile_mode = profile_mode_from_string(value);
        } else if (key == "profile_seed") {
            config.profile_seed = to_u64(value, key);
        } else if (key == "time_steps") {
            config.time_steps = static_cast<int>(to_long(value, key));
        } else if (key == "scheme") {
            config.scheme = value;
        } else if (key == "slab_horizontal_count") {
            config.slab_horizontal_count = static_cast<int>(to_long(value, key));
        } else if (key == "slab_frontal_count") {
            config.slab_frontal_count = static_cast<int>(to_long(value, key));
        } else if (key == "fiber_pattern2_count") {
            config.fiber_pattern2_count = static_cast<int>(to_long(value, key));
        } else if (key == "fiber_cols_1") {
            config.fiber_cols_1 = to_int_list(value, key);
        } else if (key == "fiber_cols_2") {
            config.fiber_cols_2 = to_int_list(value, key);
        } else if (key == "sweep_levels") {
            config.sweep_levels = to_pair_list(value, key);
        } else if (key == "rank") {
            config.rank = static_cast<int>(to_long(value, key));
        } else if (key == "noise_percent") {
            config.noise_percent = to_double(value, key);
        } else if (key == "runs") {
            config.runs = static_cast<int>(to_long(value, key));
        } else if (key == "zero_injection_known") {
            config.zero_injection_known = to_bool(value, key);
        } else if (key == "metric_scope") {
            config.metric_scope = metric_scope_from_string(value);
        } else if (key == "restarts") {
            config.restarts = static_cast<int>(to_long(value, key));
        } else if (key == "max_sweeps") {
            config.max_sweeps = static_cast<int>(to_long(value, key));
        } else if (key == "rel_tol") {
            config.rel_tol = to_double(value, key);
        } else if (key == "abs_tol") {
            config.abs_tol = to_double(value, key);
        } else if (key == "ridge") {
            config.ridge = to_double(value, key);
        } else if (key == "proximal") {
            config.proximal = to_double(value, key);
        } else if (key == "base_seed") {
            config.base_seed = to_u64(value, key);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

void ExperimentConfig::validate() const {
    const bool has_file = !feeder_path.empty();
    const bool has_gen = feeder_generate_buses > 0;
    if (has_file == has_gen) {
        throw ConfigError("specify exactly one of 'feeder' or 'feeder_generate_buses'");
    }
    if (scheme != "slab" && scheme != "fiber") {
        throw ConfigError("scheme must be 'slab' or 'fiber'");
    }
    if (rank < 1) throw ConfigError("rank must be >= 1");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    if (time_steps < 1) throw ConfigError("time_steps must be >= 1");
    if (noise_percent < 0.0) throw ConfigError("noise_percent must be >= 0");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be >= 1");
    if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
    if (sweep_levels.empty()) {
        if (scheme == "slab") {
            if (slab_horizontal_count < 1 || slab_frontal_count < 1) {
                throw ConfigError("slab scheme needs slab_horizontal_count and "
                                  "slab_frontal_count");
            }
        } else if (fiber_pattern2_count < 1) {
            throw ConfigError("fiber scheme needs fiber_pattern2_count");
        }
    }
}

FitOptions ExperimentConfig::fit_options(std::uint64_t run_seed) const {
    FitOptions opts;
    opts.max_sweeps = max_sweeps;
    opts.rel_tol = rel_tol;
    opts.abs_tol = abs_tol;
    opts.ridge = ridge;
    opts.proximal = proximal;
    opts.restarts = restarts;
    opts.seed = run_seed;
    return opts;
}

FeederModel load_feeder(const ExperimentConfig& config) {
    if (!config.feeder_path.empty()) return io::read_feeder(config.feeder_path);
    return generate_feeder(config.feeder_generate_buses, config.feeder_generate_seed);
}

SimulationResult simulate_truth(const ExperimentConfig& config) {
    const FeederModel feeder = load_feeder(config);
    const ProfileSet profiles =
        make_profiles(feeder, config.profile_mode, config.profile_seed, config.time_steps);
    return simulate(feeder, profiles);
}

std::vector<std::pair<std::pair<int, int>, IdentifiabilityReport>> certification_reports(
    const ExperimentConfig& config) {
    config.validate();
    const FeederModel feeder = load_feeder(config);
    const PhasePools pools = pools_from_feeder(feeder);
    const int n_phases = feeder.phase_count();

    std::vector<std::pair<std::pair<int, int>, IdentifiabilityReport>> out;
    for (const auto& level :
         config_levels(config, n_phases, static_cast<int>(pools.slack.size()))) {
        const DrawnScheme scheme =
            draw_scheme(config, level, pools, n_phases, config.time_steps, nullptr);
        out.emplace_back(level, certify(config, scheme));
    }
    return out;
}

SampleDraw draw_run_masks(const ExperimentConfig& config, const FeederModel& feeder,
                          const StateTensorMeta& meta, int run_index) {
    config.validate();
    const PhasePools pools = make_pools(meta, feeder.slack_phase_indices());
    const auto levels =
        config_levels(config, meta.phase_count(), static_cast<int>(pools.slack.size()));
    std::mt19937_64 rng(config.base_seed + static_cast<std::uint64_t>(run_index));
    const DrawnScheme scheme = draw_scheme(config, levels.front(), pools, meta.phase_count(),
                                           meta.step_count(), &rng);
    SampleDraw draw;
    draw.slab = scheme.slab;
    draw.fiber = scheme.fiber;
    draw.scheme_mask = scheme_mask(scheme);
    draw.extras = zero_injection_extras(meta);
    draw.observed = config.zero_injection_known ? draw.scheme_mask.unite(draw.extras)
                                                : draw.scheme_mask;
    return draw;
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool allow_uncertified,
                                std::ostream* log) {
    config.validate();
    const FeederModel feeder = load_feeder(config);
    const std::vector<int> slack_rows = feeder.slack_phase_indices();

    ExperimentResult result;
    result.truth = simulate(
        feeder, make_profiles(feeder, config.profile_mode, config.profile_seed,
                              config.time_steps));

    const auto levels = config_levels(config, result.truth.state.dim0(),
                                      static_cast<int>(slack_rows.size()));
    if (config.sweep_levels.empty()) {
        result.scenario = run_scenario(config, levels.front(), result.truth, slack_rows,
                                       allow_uncertified, log);
    } else {
        for (const auto& level : levels) {
            if (log != nullptr) {
                *log << "sweep level " << level.first << ":" << level.second << "\n";
            }
            result.sweep.push_back(SweepLevelResult{
                level, run_scenario(config, level, result.truth, slack_rows, allow_uncertified,
                                    log)});
        }
    }
    return result;
}

std::string sweep_curve_csv(const std::string& scenario_name,
                            const std::vector<SweepLevelResult>& levels) {
    std::ostringstream os;
    os.precision(10);
    os << "scenario,measurement_pct,metric,value\n";
    for (const auto& [level, scenario] : levels) {
        const auto& agg = scenario.aggregated;
        auto row = [&](const char* metric, const AggregatedMetrics::Entry& e) {
            if (e.defined_runs == 0) return;
            os << scenario_name << "," << scenario.mean_sampling_pct << "," << metric << ","
               << e.mean << "\n";
        };
        row("mape_vmag_pct", agg.mape_vmag_pct);
        row("mae_angle_deg", agg.mae_angle_deg);
        row("mae_p_kw", agg.mae_p_kw);
        row("mae_q_kvar", agg.mae_q_kvar);
    }
    return os.str();
}

}  // namespace gridcpd
