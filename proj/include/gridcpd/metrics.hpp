#pragma once

#include "gridcpd/feeder.hpp"
#include "gridcpd/tensor.hpp"

#include <string>
#include <vector>

namespace gridcpd {

/// Which entries the error metrics are computed over.
enum class MetricScope {
    HeldOutOnly,  // entries the mask did not observe (default)
    AllEntries,
};

MetricScope metric_scope_from_string(const std::string& s);
std::string to_string(MetricScope scope);

/// A metric together with the number of entries it averaged over. A metric
/// whose scope selected no entries is undefined (count == 0), never zero.
struct MetricValue {
    double value = 0.0;
    long count = 0;

    bool defined() const { return count > 0; }
};

/// The four error figures: MAPE of voltage magnitude (percent), MAE of the
/// voltage angle (degrees, wrap-safe), MAE of active/reactive power (kW and
/// kVAr, nonzero-load phases only).
struct MetricsReport {
    MetricValue mape_vmag_pct;
    MetricValue mae_angle_deg;
    MetricValue mae_p_kw;
    MetricValue mae_q_kvar;
    MetricScope scope = MetricScope::HeldOutOnly;

    std::string to_table() const;
    std::string to_key_values(const std::string& prefix = "") const;
};

/// Absolute errors between estimate and truth over the scope. The angle is
/// derived per (phase, time) from the real/imaginary voltage entries; a pair
/// counts as held out when either of the two entries is unobserved.
MetricsReport evaluate(const Tensor3& truth, const Tensor3& estimate, const MaskTensor& mask,
                       const StateTensorMeta& meta, MetricScope scope = MetricScope::HeldOutOnly);

struct AggregatedMetrics {
    struct Entry {
        double mean = 0.0;
        double stddev = 0.0;
        long total_count = 0;
        int defined_runs = 0;
    };
    Entry mape_vmag_pct;
    Entry mae_angle_deg;
    Entry mae_p_kw;
    Entry mae_q_kvar;
    MetricScope scope = MetricScope::HeldOutOnly;
    int runs = 0;

    std::string to_table() const;
    std::string to_key_values(const std::string& prefix = "") const;
};

/// Per-metric mean and sample standard deviation across runs; counts summed.
/// Runs must share a scope. Run order does not affect the result.
AggregatedMetrics aggregate(const std::vector<MetricsReport>& runs);

}  // namespace gridcpd
