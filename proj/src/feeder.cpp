#include "gridcpd/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace gridcpd {

namespace measurement {
const std::array<const char*, kCount> kNames = {"re_v_pu", "im_v_pu", "vmag_pu", "p_kw",
                                                "q_kvar"};
}

namespace {

using Complex = std::complex<double>;

constexpr double kPowerFlowTol = 5e-14;    // max |dV| between sweeps, p.u.
constexpr double kResidualLimit = 1e-8;    // accepted power-balance mismatch, p.u.
constexpr int kPowerFlowMaxIter = 100;

constexpr std::array<char, 3> kPhaseLetters = {'a', 'b', 'c'};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Complex slack_voltage(int phase_letter) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double angle = phase_letter == 0 ? 0.0 : (phase_letter == 1 ? -120.0 * deg : 120.0 * deg);
    return std::polar(1.0, angle);
}

// Daily-curve archetypes on minutes-of-day; every load mixes the three with
// its own weights. All shapes are dimensionless multipliers around 1.
double shape_residential(double m) {
    const double morning = std::exp(-std::pow((m - 480.0) / 120.0, 2));
    const double evening = std::exp(-std::pow((m - 1170.0) / 150.0, 2));
    return 0.55 + 0.25 * morning + 0.45 * evening;
}

double shape_commercial(double m) {
    return 0.30 + 0.55 * std::exp(-std::pow((m - 780.0) / 240.0, 2));
}

double shape_steady(double m) {
    return 0.80 + 0.10 * std::sin(2.0 * std::numbers::pi * m / 1440.0);
}

double shape_solar(double m) {
    const double half_window = 270.0;  // minutes; solar noon at 12:30
    const double u = (m - 750.0) / half_window;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::pow(std::cos(0.5 * std::numbers::pi * u), 1.3);
}

// Shared sub-daily fluctuation basis (weather fronts, coincident appliance
// cycles). Each load carries its own coefficients on these. Three harmonics
// plus the archetypes and the solar pair keep the power block's time span
// within the ranks the experiments fit, with no per-row private structure.
constexpr int kHarmonicCount = 3;

double shape_harmonic(int h, double m) {
    const double periods_min[kHarmonicCount] = {480.0, 180.0, 70.0};
    const double phase_off[kHarmonicCount] = {0.3, 2.9, 0.9};
    return std::sin(2.0 * std::numbers::pi * m / periods_min[h] + phase_off[h]);
}

// Power factors are a property of the load class, not of the bus: reactive
// demand mixes the same time shapes as active demand but with per-shape
// ratios. The q rows then stay inside the shared time span while still
// carrying information that separates the components.
constexpr double kTanPhiResidential = 0.3287;  // pf 0.95
constexpr double kTanPhiCommercial = 0.4843;   // pf 0.90
constexpr double kTanPhiSteady = 0.2034;       // pf 0.98
constexpr std::array<double, kHarmonicCount> kTanPhiHarmonic = {0.45, 0.25, 0.52};

}  // namespace

int StateTensorMeta::phase_index(const std::string& label) const {
    for (size_t i = 0; i < phase_labels.size(); ++i) {
        if (phase_labels[i] == label) return static_cast<int>(i);
    }
    return -1;
}

void StateTensorMeta::validate() const {
    if (phase_labels.empty()) throw std::invalid_argument("meta has no phases");
    if (timestamps_min.empty()) throw std::invalid_argument("meta has no timestamps");
    if (zero_injection.size() != phase_labels.size()) {
        throw std::invalid_argument("zero_injection flags must cover every phase");
    }
    std::set<std::string> seen(phase_labels.begin(), phase_labels.end());
    if (seen.size() != phase_labels.size()) {
        throw std::invalid_argument("phase labels must be unique");
    }
    for (size_t k = 1; k < timestamps_min.size(); ++k) {
        if (!(timestamps_min[k] > timestamps_min[k - 1])) {
            throw std::invalid_argument("timestamps must be strictly increasing");
        }
    }
}

int FeederModel::phase_count() const {
    int n = 0;
    for (const auto& bus : buses)
        for (bool present : bus.has_phase) n += present ? 1 : 0;
    return n;
}

std::vector<std::pair<int, int>> FeederModel::phase_list() const {
    std::vector<std::pair<int, int>> out;
    for (size_t b = 0; b < buses.size(); ++b)
        for (int ph = 0; ph < 3; ++ph)
            if (buses[b].has_phase[ph]) out.emplace_back(static_cast<int>(b), ph);
    return out;
}

std::vector<std::string> FeederModel::phase_labels() const {
    std::vector<std::string> out;
    for (const auto& [b, ph] : phase_list()) {
        out.push_back(buses[b].name + "." + kPhaseLetters[ph]);
    }
    return out;
}

std::vector<int> FeederModel::slack_phase_indices() const {
    std::vector<int> out;
    const auto phases = phase_list();
    for (size_t r = 0; r < phases.size(); ++r)
        if (phases[r].first == 0) out.push_back(static_cast<int>(r));
    return out;
}

void FeederModel::validate() const {
    if (buses.empty()) throw std::invalid_argument("feeder has no buses");
    if (!(sbase_kva > 0.0)) throw std::invalid_argument("sbase_kva must be positive");
    std::set<std::string> names;
    for (size_t b = 0; b < buses.size(); ++b) {
        const FeederBus& bus = buses[b];
        if (bus.name.empty()) throw std::invalid_argument("bus name must be nonempty");
        if (!names.insert(bus.name).second) {
            throw std::invalid_argument("duplicate bus name: " + bus.name);
        }
        const bool any_phase = bus.has_phase[0] || bus.has_phase[1] || bus.has_phase[2];
        if (!any_phase) throw std::invalid_argument("bus " + bus.name + " has no phases");
        for (int ph = 0; ph < 3; ++ph) {
            if ((bus.has_load[ph] || bus.has_solar[ph]) && !bus.has_phase[ph]) {
                throw std::invalid_argument("bus " + bus.name +
                                            " flags load/solar on an absent phase");
            }
        }
        if (b == 0) {
            if (bus.parent != -1) throw std::invalid_argument("slack bus must have no parent");
            if (bus.has_load[0] || bus.has_load[1] || bus.has_load[2] || bus.has_solar[0] ||
                bus.has_solar[1] || bus.has_solar[2]) {
                throw std::invalid_argument("slack bus must not carry load or solar");
            }
        } else {
            if (bus.parent < 0 || bus.parent >= static_cast<int>(b)) {
                throw std::invalid_argument("bus " + bus.name +
                                            " must reference an earlier parent bus");
            }
            if (bus.line_r < 0.0 || bus.line_x < 0.0) {
                throw std::invalid_argument("bus " + bus.name + " has negative line impedance");
            }
            for (int ph = 0; ph < 3; ++ph) {
                if (bus.has_phase[ph] && !buses[bus.parent].has_phase[ph]) {
                    throw std::invalid_argument("bus " + bus.name + " carries phase " +
                                                std::string(1, kPhaseLetters[ph]) +
                                                " absent at its parent");
                }
            }
        }
    }
}

FeederModel make_tiny_feeder() {
    FeederModel f;
    f.name = "tiny8";
    f.sbase_kva = 100.0;
    f.buses.resize(5);
    f.buses[0] = {"T000", {true, true, true}, {}, {}, -1, 0.0, 0.0};
    f.buses[1] = {"T001", {true, true, false}, {true, true, false}, {}, 0, 0.015, 0.010};
    f.buses[2] = {"T002", {true, false, false}, {true, false, false},
                  {true, false, false}, 1, 0.020, 0.012};
    f.buses[3] = {"T003", {false, true, false}, {}, {}, 1, 0.010, 0.008};
    f.buses[4] = {"T004", {true, false, false}, {true, false, false}, {}, 2, 0.018, 0.011};
    f.validate();
    return f;
}

FeederModel generate_feeder(int bus_count, std::uint64_t seed) {
    if (bus_count < 2) throw std::invalid_argument("feeder needs at least 2 buses");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    FeederModel f;
    f.name = "gen" + std::to_string(bus_count) + "s" + std::to_string(seed);
    f.sbase_kva = 100.0;
    f.buses.reserve(bus_count);

    FeederBus slack;
    slack.name = "B000";
    slack.has_phase = {true, true, true};
    f.buses.push_back(slack);

    int backbone_tip = 0;  // most recent three-phase bus
    for (int b = 1; b < bus_count; ++b) {
        FeederBus bus;
        char name[16];
        std::snprintf(name, sizeof(name), "B%03d", b);
        bus.name = name;

        // Grow a three-phase backbone with mixed single/double-phase laterals.
        const bool extend_backbone = unit(rng) < 0.5;
        bus.parent = extend_backbone ? backbone_tip
                                     : static_cast<int>(unit(rng) * b) % b;
        const FeederBus& parent = f.buses[bus.parent];
        std::vector<int> parent_phases;
        for (int ph = 0; ph < 3; ++ph)
            if (parent.has_phase[ph]) parent_phases.push_back(ph);

        const double mix = unit(rng);
        if (extend_backbone && parent_phases.size() == 3) {
            bus.has_phase = {true, true, true};
            backbone_tip = b;
        } else if (parent_phases.size() == 3 && mix < 0.35) {
            bus.has_phase = {true, true, true};
        } else if (parent_phases.size() >= 2 && mix < 0.65) {
            const int drop = parent_phases[static_cast<int>(unit(rng) * parent_phases.size()) %
                                           parent_phases.size()];
            for (int ph : parent_phases) bus.has_phase[ph] = (ph != drop);
        } else {
            const int keep = parent_phases[static_cast<int>(unit(rng) * parent_phases.size()) %
                                           parent_phases.size()];
            bus.has_phase[keep] = true;
        }

        bus.line_r = 0.010 + 0.015 * unit(rng);
        bus.line_x = bus.line_r * (0.6 + 0.4 * unit(rng));
        for (int ph = 0; ph < 3; ++ph) {
            if (!bus.has_phase[ph]) continue;
            if (unit(rng) < 0.42) {
                bus.has_load[ph] = true;
                bus.has_solar[ph] = unit(rng) < 0.5;
            }
        }
        f.buses.push_back(bus);
    }
    f.validate();
    return f;
}

FeederModel make_default_feeder() {
    FeederModel f = generate_feeder(50, 20240711ULL);
    f.name = "default50";
    return f;
}

ProfileMode profile_mode_from_string(const std::string& s) {
    if (s == "consecutive") return ProfileMode::Consecutive;
    if (s == "nonconsecutive") return ProfileMode::Nonconsecutive;
    throw std::invalid_argument("unknown profile mode: " + s);
}

std::string to_string(ProfileMode mode) {
    return mode == ProfileMode::Consecutive ? "consecutive" : "nonconsecutive";
}

ProfileSet make_profiles(const FeederModel& feeder, ProfileMode mode, std::uint64_t seed,
                         int steps) {
    feeder.validate();
    if (steps < 1) throw std::invalid_argument("profile steps must be >= 1");

    ProfileSet p;
    p.mode = mode;
    p.seed = seed;
    p.timestamps_min.resize(steps);
    const double start = (mode == ProfileMode::Consecutive) ? 660.0 : 0.0;  // 11:00 or 00:00
    const double spacing = (mode == ProfileMode::Consecutive) ? 1.0 : 20.0;
    for (int k = 0; k < steps; ++k) p.timestamps_min[k] = start + spacing * k;

    const auto phases = feeder.phase_list();
    const int n = static_cast<int>(phases.size());
    p.load_p_kw = Matrix::Zero(n, steps);
    p.load_q_kvar = Matrix::Zero(n, steps);
    p.solar_kw = Matrix::Zero(n, steps);

    const double ar_rho = (mode == ProfileMode::Consecutive) ? 0.97 : 0.0;
    const double sigma = (mode == ProfileMode::Consecutive) ? 0.002 : 0.01;

    for (int r = 0; r < n; ++r) {
        const auto [b, ph] = phases[r];
        const FeederBus& bus = feeder.buses[b];
        if (!bus.has_load[ph] && !bus.has_solar[ph]) continue;

        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const double size_kw = std::clamp(1.9 * std::exp(0.8 * gauss(rng)), 0.2, 14.0);
        double w1 = std::abs(gauss(rng)) + 0.05;
        double w2 = std::abs(gauss(rng)) + 0.05;
        double w3 = std::abs(gauss(rng)) + 0.05;
        const double wsum = w1 + w2 + w3;
        w1 /= wsum; w2 /= wsum; w3 /= wsum;
        std::array<double, kHarmonicCount> harm;
        for (double& h : harm) h = 0.05 * gauss(rng);
        const double solar_cap = bus.has_solar[ph] ? size_kw * (0.6 + 0.8 * unit(rng)) : 0.0;
        const double solar_wobble = 0.08 * gauss(rng);

        double load_ar = 0.0, solar_ar = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double m = std::fmod(p.timestamps_min[k], 1440.0);
            const double innov = (k == 0) ? 1.0 : std::sqrt(1.0 - ar_rho * ar_rho);
            load_ar = ar_rho * load_ar + sigma * innov * gauss(rng);
            solar_ar = ar_rho * solar_ar + sigma * innov * gauss(rng);
            if (bus.has_load[ph]) {
                double shape_p =
                    w1 * shape_residential(m) + w2 * shape_commercial(m) + w3 * shape_steady(m);
                double shape_q = w1 * kTanPhiResidential * shape_residential(m) +
                                 w2 * kTanPhiCommercial * shape_commercial(m) +
                                 w3 * kTanPhiSteady * shape_steady(m);
                for (int h = 0; h < kHarmonicCount; ++h) {
                    shape_p += harm[h] * shape_harmonic(h, m);
                    shape_q += harm[h] * kTanPhiHarmonic[h] * shape_harmonic(h, m);
                }
                p.load_p_kw(r, k) = std::max(0.0, size_kw * shape_p * (1.0 + load_ar));
                p.load_q_kvar(r, k) = std::max(0.0, size_kw * shape_q * (1.0 + load_ar));
            }
            if (bus.has_solar[ph]) {
                const double wobble = 1.0 + solar_wobble * shape_harmonic(1, m);
                p.solar_kw(r, k) = std::max(
                    0.0, solar_cap * shape_solar(m) * wobble * (1.0 + solar_ar));
            }
        }
    }
    return p;
}

SimulationResult simulate(const FeederModel& feeder, const ProfileSet& profiles) {
    feeder.validate();
    const auto phases = feeder.phase_list();
    const int n_phases = static_cast<int>(phases.size());
    const int steps = profiles.step_count();
    if (steps < 1) throw std::invalid_argument("profiles have no time steps");
    if (profiles.load_p_kw.rows() != n_phases || profiles.load_q_kvar.rows() != n_phases ||
        profiles.solar_kw.rows() != n_phases) {
        throw std::invalid_argument("profiles do not cover every feeder phase");
    }
    if (profiles.load_p_kw.cols() != steps || profiles.load_q_kvar.cols() != steps ||
        profiles.solar_kw.cols() != steps) {
        throw std::invalid_argument("profile series length mismatch");
    }

    // Flat row lookup per (bus, phase letter).
    const int n_buses = static_cast<int>(feeder.buses.size());
    std::vector<std::array<int, 3>> row_of(n_buses, {-1, -1, -1});
    for (int r = 0; r < n_phases; ++r) row_of[phases[r].first][phases[r].second] = r;

    SimulationResult out;
    out.state = Tensor3(n_phases, measurement::kCount, steps);
    out.meta.phase_labels = feeder.phase_labels();
    out.meta.timestamps_min = profiles.timestamps_min;
    out.meta.zero_injection.assign(n_phases, 0);
    for (int r = 0; r < n_phases; ++r) {
        const auto [b, ph] = phases[r];
        const FeederBus& bus = feeder.buses[b];
        out.meta.zero_injection[r] = (b != 0 && !bus.has_load[ph] && !bus.has_solar[ph]) ? 1 : 0;
    }

    // Per-phase bus lists; parent order (parent index < child index) makes
    // ascending order a valid forward-sweep order.
    std::array<std::vector<int>, 3> phase_buses;
    for (int b = 0; b < n_buses; ++b)
        for (int ph = 0; ph < 3; ++ph)
            if (feeder.buses[b].has_phase[ph]) phase_buses[ph].push_back(b);

    for (int k = 0; k < steps; ++k) {
        for (int ph = 0; ph < 3; ++ph) {
            const std::vector<int>& nodes = phase_buses[ph];
            if (nodes.empty()) continue;
            const int n_nodes = static_cast<int>(nodes.size());
            std::map<int, int> node_pos;
            for (int t = 0; t < n_nodes; ++t) node_pos[nodes[t]] = t;

            // Net complex demand per node, p.u.
            std::vector<Complex> demand(n_nodes, Complex(0.0, 0.0));
            for (int t = 0; t < n_nodes; ++t) {
                const int r = row_of[nodes[t]][ph];
                const double pd = profiles.load_p_kw(r, k) - profiles.solar_kw(r, k);
                const double qd = profiles.load_q_kvar(r, k);
                demand[t] = Complex(pd, qd) / feeder.sbase_kva;
            }

            const Complex v_slack = slack_voltage(ph);
            std::vector<Complex> voltage(n_nodes, v_slack);
            std::vector<Complex> branch_current(n_nodes, Complex(0.0, 0.0));
            std::vector<Complex> node_current(n_nodes, Complex(0.0, 0.0));

            bool converged = false;
            for (int iter = 0; iter < kPowerFlowMaxIter && !converged; ++iter) {
                // backward sweep: accumulate branch currents toward the root
                for (int t = 0; t < n_nodes; ++t) {
                    node_current[t] = std::conj(demand[t] / voltage[t]);
                    branch_current[t] = node_current[t];
                }
                for (int t = n_nodes - 1; t >= 1; --t) {
                    const int parent = feeder.buses[nodes[t]].parent;
                    branch_current[node_pos.at(parent)] += branch_current[t];
                }
                // forward sweep: propagate voltage drops from the slack
                double max_dv = 0.0;
                for (int t = 1; t < n_nodes; ++t) {
                    const FeederBus& bus = feeder.buses[nodes[t]];
                    const Complex z(bus.line_r, bus.line_x);
                    const Complex v_new =
                        voltage[node_pos.at(bus.parent)] - z * branch_current[t];
                    max_dv = std::max(max_dv, std::abs(v_new - voltage[t]));
                    voltage[t] = v_new;
                }
                if (!std::isfinite(max_dv) || std::abs(voltage[n_nodes - 1]) > 10.0) {
                    throw std::runtime_error(
                        "power flow diverged at time step " + std::to_string(k) + " (phase " +
                        std::string(1, kPhaseLetters[ph]) + "), loading is infeasible");
                }
                converged = max_dv < kPowerFlowTol;
            }
            if (!converged) {
                throw std::runtime_error("power flow did not converge at time step " +
                                         std::to_string(k) + " (phase " +
                                         std::string(1, kPhaseLetters[ph]) + ")");
            }

            // Power-balance residual at the solution.
            double max_mismatch = 0.0;
            for (int t = 1; t < n_nodes; ++t) {
                const Complex s_calc = voltage[t] * std::conj(node_current[t]);
                max_mismatch = std::max(max_mismatch, std::abs(s_calc - demand[t]));
            }
            if (max_mismatch > kResidualLimit) {
                throw std::runtime_error("power-balance residual " +
                                         std::to_string(max_mismatch) +
                                         " above tolerance at time step " + std::to_string(k));
            }

            // Head supply measured at the slack: its tensor rows carry the
            // negated delivery in the demand-positive convention.
            Complex head(0.0, 0.0);
            for (int t = 1; t < n_nodes; ++t) {
                if (feeder.buses[nodes[t]].parent == nodes[0]) head += branch_current[t];
            }
            const Complex s_head = v_slack * std::conj(head);

            for (int t = 0; t < n_nodes; ++t) {
                const int r = row_of[nodes[t]][ph];
                const Complex v = voltage[t];
                double p_kw, q_kvar;
                if (t == 0) {
                    p_kw = -s_head.real() * feeder.sbase_kva;
                    q_kvar = -s_head.imag() * feeder.sbase_kva;
                } else {
                    p_kw = demand[t].real() * feeder.sbase_kva;
                    q_kvar = demand[t].imag() * feeder.sbase_kva;
                }
                out.state(r, measurement::kReV, k) = v.real();
                out.state(r, measurement::kImV, k) = v.imag();
                out.state(r, measurement::kVmag, k) = std::abs(v);
                out.state(r, measurement::kP, k) = p_kw;
                out.state(r, measurement::kQ, k) = q_kvar;
            }
        }
    }
    return out;
}

TensorWithMask build_state_tensor(const std::vector<StateRecord>& records,
                                  const StateTensorMeta& meta) {
    meta.validate();
    const int n_phases = meta.phase_count();
    const int steps = meta.step_count();

    std::map<std::string, int> phase_of;
    for (int i = 0; i < n_phases; ++i) phase_of[meta.phase_labels[i]] = i;
    std::map<double, int> step_of;
    for (int k = 0; k < steps; ++k) step_of[meta.timestamps_min[k]] = k;

    TensorWithMask out{Tensor3(n_phases, measurement::kCount, steps),
                       MaskTensor(n_phases, measurement::kCount, steps)};
    for (const StateRecord& rec : records) {
        const auto pit = phase_of.find(rec.phase_label);
        if (pit == phase_of.end()) {
            throw std::invalid_argument("record references unknown phase: " + rec.phase_label);
        }
        const auto kit = step_of.find(rec.timestamp_min);
        if (kit == step_of.end()) {
            throw std::invalid_argument("record references unknown timestamp: " +
                                        std::to_string(rec.timestamp_min));
        }
        for (int j = 0; j < measurement::kCount; ++j) {
            if (!rec.values[j]) continue;
            if (out.mask(pit->second, j, kit->second)) {
                throw std::invalid_argument("duplicate record for phase " + rec.phase_label +
                                            ", measurement " + measurement::kNames[j] +
                                            ", t=" + std::to_string(rec.timestamp_min));
            }
            out.tensor(pit->second, j, kit->second) = *rec.values[j];
            out.mask.set(pit->second, j, kit->second, true);
        }
    }
    return out;
}

Tensor3 add_noise(const Tensor3& x, const MaskTensor& observed, double percent,
                  std::uint64_t seed) {
    if (!observed.matches(x)) {
        throw std::invalid_argument("noise mask dims must equal tensor dims");
    }
    if (percent < 0.0) throw std::invalid_argument("noise percent must be >= 0");
    Tensor3 out = x;
    if (percent == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < x.dim0(); ++i)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k)
                if (observed(i, j, k)) {
                    out(i, j, k) = x(i, j, k) * (1.0 + percent / 100.0 * gauss(rng));
                }
    return out;
}

MaskTensor zero_injection_extras(const StateTensorMeta& meta) {
    meta.validate();
    MaskTensor extras(meta.phase_count(), measurement::kCount, meta.step_count());
    for (int i = 0; i < meta.phase_count(); ++i) {
        if (!meta.zero_injection[i]) continue;
        for (int k = 0; k < meta.step_count(); ++k) {
            extras.set(i, measurement::kP, k, true);
            extras.set(i, measurement::kQ, k, true);
        }
    }
    return extras;
}

}  // namespace gridcpd
