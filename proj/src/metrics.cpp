#include "gridcpd/metrics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace gridcpd {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Reduce an angle difference to (-180, 180] degrees before taking magnitude.
double wrapped_angle_abs_deg(double diff_deg) {
    double d = std::fmod(diff_deg + 180.0, 360.0);
    if (d < 0.0) d += 360.0;
    return std::abs(d - 180.0);
}

std::string format_metric(const MetricValue& m, const char* unit) {
    std::ostringstream os;
    if (!m.defined()) {
        os << "undefined (n=0)";
    } else {
        os.precision(6);
        os << m.value << " " << unit << " (n=" << m.count << ")";
    }
    return os.str();
}

struct Accumulator {
    double sum = 0.0;
    long count = 0;

    void add(double v) {
        sum += v;
        ++count;
    }
    MetricValue finish() const {
        return MetricValue{count > 0 ? sum / count : 0.0, count};
    }
};

}  // namespace

MetricScope metric_scope_from_string(const std::string& s) {
    if (s == "held-out") return MetricScope::HeldOutOnly;
    if (s == "all") return MetricScope::AllEntries;
    throw std::invalid_argument("unknown metric scope: " + s);
}

std::string to_string(MetricScope scope) {
    return scope == MetricScope::HeldOutOnly ? "held-out" : "all";
}

std::string MetricsReport::to_table() const {
    std::ostringstream os;
    os << "metric scope: " << gridcpd::to_string(scope) << "\n";
    os << "  MAPE(|V|):  " << format_metric(mape_vmag_pct, "%") << "\n";
    os << "  MAE(theta): " << format_metric(mae_angle_deg, "deg") << "\n";
    os << "  MAE(P):     " << format_metric(mae_p_kw, "kW") << "\n";
    os << "  MAE(Q):     " << format_metric(mae_q_kvar, "kVAr") << "\n";
    return os.str();
}

std::string MetricsReport::to_key_values(const std::string& prefix) const {
    std::ostringstream os;
    os.precision(17);
    auto emit = [&](const char* name, const MetricValue& m) {
        os << prefix << name << " = ";
        if (m.defined()) {
            os << m.value;
        } else {
            os << "undefined";
        }
        os << "\n" << prefix << name << ".n = " << m.count << "\n";
    };
    os << prefix << "scope = " << gridcpd::to_string(scope) << "\n";
    emit("mape_vmag_pct", mape_vmag_pct);
    emit("mae_angle_deg", mae_angle_deg);
    emit("mae_p_kw", mae_p_kw);
    emit("mae_q_kvar", mae_q_kvar);
    return os.str();
}

MetricsReport evaluate(const Tensor3& truth, const Tensor3& estimate, const MaskTensor& mask,
                       const StateTensorMeta& meta, MetricScope scope) {
    if (!truth.same_dims(estimate)) {
        throw std::invalid_argument("evaluate: truth and estimate dims differ");
    }
    if (!mask.matches(truth)) {
        throw std::invalid_argument("evaluate: mask dims differ from tensor dims");
    }
    if (truth.dim1() != measurement::kCount) {
        throw std::invalid_argument("evaluate: measurement axis must have 5 entries");
    }
    if (meta.phase_count() != truth.dim0() || meta.step_count() != truth.dim2()) {
        throw std::invalid_argument("evaluate: meta does not match tensor dims");
    }

    const bool held_out = scope == MetricScope::HeldOutOnly;
    Accumulator vmag, angle, p_err, q_err;

    for (int i = 0; i < truth.dim0(); ++i) {
        const bool nonzero_load = !meta.zero_injection[i];
        for (int k = 0; k < truth.dim2(); ++k) {
            if (!held_out || !mask(i, measurement::kVmag, k)) {
                const double t = truth(i, measurement::kVmag, k);
                if (t == 0.0) {
                    throw std::invalid_argument(
                        "evaluate: zero voltage magnitude in scope (MAPE undefined)");
                }
                vmag.add(std::abs((t - estimate(i, measurement::kVmag, k)) / t) * 100.0);
            }
            if (!held_out || !mask(i, measurement::kReV, k) || !mask(i, measurement::kImV, k)) {
                const double theta_t = std::atan2(truth(i, measurement::kImV, k),
                                                  truth(i, measurement::kReV, k)) * kRadToDeg;
                const double theta_e = std::atan2(estimate(i, measurement::kImV, k),
                                                  estimate(i, measurement::kReV, k)) * kRadToDeg;
                angle.add(wrapped_angle_abs_deg(theta_t - theta_e));
            }
            if (nonzero_load) {
                if (!held_out || !mask(i, measurement::kP, k)) {
                    p_err.add(std::abs(truth(i, measurement::kP, k) -
                                       estimate(i, measurement::kP, k)));
                }
                if (!held_out || !mask(i, measurement::kQ, k)) {
                    q_err.add(std::abs(truth(i, measurement::kQ, k) -
                                       estimate(i, measurement::kQ, k)));
                }
            }
        }
    }

    MetricsReport report;
    report.scope = scope;
    report.mape_vmag_pct = vmag.finish();
    report.mae_angle_deg = angle.finish();
    report.mae_p_kw = p_err.finish();
    report.mae_q_kvar = q_err.finish();
    return report;
}

std::string AggregatedMetrics::to_table() const {
    std::ostringstream os;
    os.precision(6);
    os << "aggregated over " << runs << " runs (scope: " << gridcpd::to_string(scope) << ")\n";
    auto line = [&](const char* name, const Entry& e, const char* unit) {
        os << "  " << name << ": ";
        if (e.defined_runs == 0) {
            os << "undefined\n";
            return;
        }
        os << e.mean << " +/- " << e.stddev << " " << unit << " (runs " << e.defined_runs
           << ", n " << e.total_count << ")\n";
    };
    line("MAPE(|V|) ", mape_vmag_pct, "%");
    line("MAE(theta)", mae_angle_deg, "deg");
    line("MAE(P)    ", mae_p_kw, "kW");
    line("MAE(Q)    ", mae_q_kvar, "kVAr");
    return os.str();
}

std::string AggregatedMetrics::to_key_values(const std::string& prefix) const {
    std::ostringstream os;
    os.precision(17);
    auto emit = [&](const char* name, const Entry& e) {
        os << prefix << name << ".mean = ";
        if (e.defined_runs > 0) {
            os << e.mean;
        } else {
            os << "undefined";
        }
        os << "\n" << prefix << name << ".stddev = ";
        if (e.defined_runs > 0) {
            os << e.stddev;
        } else {
            os << "undefined";
        }
        os << "\n" << prefix << name << ".n = " << e.total_count << "\n";
        os << prefix << name << ".runs = " << e.defined_runs << "\n";
    };
    os << prefix << "scope = " << gridcpd::to_string(scope) << "\n";
    os << prefix << "runs = " << runs << "\n";
    emit("mape_vmag_pct", mape_vmag_pct);
    emit("mae_angle_deg", mae_angle_deg);
    emit("mae_p_kw", mae_p_kw);
    emit("mae_q_kvar", mae_q_kvar);
    return os.str();
}

AggregatedMetrics aggregate(const std::vector<MetricsReport>& runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
    for (const auto& r : runs) {
        if (r.scope != runs.front().scope) {
            throw std::invalid_argument("aggregate: runs mix metric scopes");
        }
    }

    AggregatedMetrics agg;
    agg.scope = runs.front().scope;
    agg.runs = static_cast<int>(runs.size());

    auto combine = [&](auto pick) {
        AggregatedMetrics::Entry entry;
        double sum = 0.0;
        for (const auto& r : runs) {
            const MetricValue& m = pick(r);
            if (!m.defined()) continue;
            sum += m.value;
            entry.total_count += m.count;
            ++entry.defined_runs;
        }
        if (entry.defined_runs > 0) {
            entry.mean = sum / entry.defined_runs;
            double ss = 0.0;
            for (const auto& r : runs) {
                const MetricValue& m = pick(r);
                if (!m.defined()) continue;
                ss += (m.value - entry.mean) * (m.value - entry.mean);
            }
            entry.stddev = entry.defined_runs > 1 ? std::sqrt(ss / (entry.defined_runs - 1)) : 0.0;
        }
        return entry;
    };

    agg.mape_vmag_pct = combine([](const MetricsReport& r) { return r.mape_vmag_pct; });
    agg.mae_angle_deg = combine([](const MetricsReport& r) { return r.mae_angle_deg; });
    agg.mae_p_kw = combine([](const MetricsReport& r) { return r.mae_p_kw; });
    agg.mae_q_kvar = combine([](const MetricsReport& r) { return r.mae_q_kvar; });
    return agg;
}

}  // namespace gridcpd
