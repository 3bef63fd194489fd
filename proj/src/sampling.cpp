#include "gridcpd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gridcpd {

namespace {

std::vector<int> normalize_index_set(std::vector<int> indices, int dim, const char* what) {
    for (int idx : indices) {
        if (idx < 0 || idx >= dim) {
            throw std::invalid_argument(std::string(what) + " index " + std::to_string(idx) +
                                        " out of range [0, " + std::to_string(dim) + ")");
        }
    }
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    return indices;
}

// floor(log2 n) for n >= 1; -inf for n <= 0 so that any min-inequality
// containing it is violated rather than erroring out.
double floor_log2(long n) {
    if (n <= 0) return -std::numeric_limits<double>::infinity();
    int bits = 0;
    for (unsigned long v = static_cast<unsigned long>(n); v > 1; v >>= 1) ++bits;
    return static_cast<double>(bits);
}

double log2_of(double v) {
    if (v <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log2(v);
}

ConditionClause make_clause(std::string label, double lhs, double rhs) {
    return ConditionClause{std::move(label), lhs, rhs, lhs >= rhs};
}

std::string format_value(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return "-inf";
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

SlabScheme::SlabScheme(std::vector<int> horizontal_set, std::vector<int> frontal_set,
                       int i_dim, int j_dim, int k_dim)
    : dim0(i_dim), dim1(j_dim), dim2(k_dim) {
    if (i_dim <= 0 || j_dim <= 0 || k_dim <= 0) {
        throw std::invalid_argument("slab scheme dims must be positive");
    }
    horizontal = normalize_index_set(std::move(horizontal_set), i_dim, "horizontal slab");
    frontal = normalize_index_set(std::move(frontal_set), k_dim, "frontal slab");
}

FiberScheme::FiberScheme(FiberPattern first, FiberPattern second, int i_dim, int j_dim,
                         int k_dim)
    : dim0(i_dim), dim1(j_dim), dim2(k_dim) {
    if (i_dim <= 0 || j_dim <= 0 || k_dim <= 0) {
        throw std::invalid_argument("fiber scheme dims must be positive");
    }
    patterns[0].rows = normalize_index_set(std::move(first.rows), i_dim, "pattern 1 row");
    patterns[0].cols = normalize_index_set(std::move(first.cols), j_dim, "pattern 1 column");
    patterns[1].rows = normalize_index_set(std::move(second.rows), i_dim, "pattern 2 row");
    patterns[1].cols = normalize_index_set(std::move(second.cols), j_dim, "pattern 2 column");
}

std::string IdentifiabilityReport::to_text() const {
    std::ostringstream os;
    os << (satisfied ? "identifiable" : "not certified") << " (" << which_condition << ")\n";
    os << "assumes factors drawn from an absolutely continuous distribution\n";
    for (const auto& clause : clauses) {
        os << "  " << (clause.holds ? "[ok]  " : "[FAIL]") << " " << clause.label << ": "
           << format_value(clause.lhs) << " >= " << format_value(clause.rhs) << "\n";
    }
    return os.str();
}

std::string IdentifiabilityReport::to_key_values() const {
    std::ostringstream os;
    os << "satisfied = " << (satisfied ? 1 : 0) << "\n";
    os << "which_condition = " << which_condition << "\n";
    for (const auto& clause : clauses) {
        os << "clause." << clause.label << ".lhs = " << format_value(clause.lhs) << "\n";
        os << "clause." << clause.label << ".rhs = " << format_value(clause.rhs) << "\n";
        os << "clause." << clause.label << ".holds = " << (clause.holds ? 1 : 0) << "\n";
    }
    return os.str();
}

MaskTensor build_slab_mask(const SlabScheme& scheme) {
    MaskTensor mask(scheme.dim0, scheme.dim1, scheme.dim2);
    std::vector<char> in_h(scheme.dim0, 0), in_f(scheme.dim2, 0);
    for (int i : scheme.horizontal) in_h[i] = 1;
    for (int k : scheme.frontal) in_f[k] = 1;
    for (int k = 0; k < scheme.dim2; ++k)
        for (int j = 0; j < scheme.dim1; ++j)
            for (int i = 0; i < scheme.dim0; ++i)
                if (in_h[i] || in_f[k]) mask.set(i, j, k, true);
    return mask;
}

MaskTensor build_fiber_mask(const FiberScheme& scheme) {
    MaskTensor mask(scheme.dim0, scheme.dim1, scheme.dim2);
    std::vector<char> sampled(static_cast<size_t>(scheme.dim0) * scheme.dim1, 0);
    for (const FiberPattern& pattern : scheme.patterns)
        for (int i : pattern.rows)
            for (int j : pattern.cols) sampled[i + static_cast<size_t>(scheme.dim0) * j] = 1;
    for (int k = 0; k < scheme.dim2; ++k)
        for (int j = 0; j < scheme.dim1; ++j)
            for (int i = 0; i < scheme.dim0; ++i)
                if (sampled[i + static_cast<size_t>(scheme.dim0) * j])
                    mask.set(i, j, k, true);
    return mask;
}

IdentifiabilityReport generic_identifiability(int i_dim, int j_dim, int k_dim, int rank) {
    if (i_dim <= 0 || j_dim <= 0 || k_dim <= 0 || rank <= 0) {
        throw std::invalid_argument("dims and rank must be positive");
    }
    std::array<int, 3> dims{i_dim, j_dim, k_dim};
    std::sort(dims.begin(), dims.end(), std::greater<int>());
    const double exponent = floor_log2(dims[1]) + floor_log2(dims[2]) - 2.0;
    const double bound = std::pow(2.0, exponent);

    IdentifiabilityReport report;
    report.clauses.push_back(
        make_clause("rank_bound_2^(floor_log2_d2+floor_log2_d3-2)", bound,
                    static_cast<double>(rank)));
    report.satisfied = report.clauses[0].holds;
    report.which_condition = "generic rank bound";
    return report;
}

IdentifiabilityReport check_slab_conditions(const SlabScheme& scheme, int rank) {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    const long n_h = static_cast<long>(scheme.horizontal.size());
    const long n_f = static_cast<long>(scheme.frontal.size());
    const long dim0 = scheme.dim0, dim1 = scheme.dim1, dim2 = scheme.dim2;
    const double threshold = log2_of(4.0 * rank);

    IdentifiabilityReport report;
    auto add_min_condition = [&](const std::string& name, std::array<double, 4> terms,
                                 std::array<const char*, 4> labels) {
        const double lhs = *std::min_element(terms.begin(), terms.end());
        bool holds = lhs >= threshold;
        for (int t = 0; t < 4; ++t) {
            report.clauses.push_back(make_clause(name + "." + labels[t], terms[t], threshold));
        }
        return holds;
    };

    const bool cond1 = add_min_condition(
        "condition1",
        {floor_log2(n_h) + floor_log2(dim1), floor_log2(dim1) + floor_log2(dim2),
         floor_log2(n_h) + floor_log2(dim2), log2_of(4.0 * dim1 * n_f)},
        {"flog2_Ih+flog2_J", "flog2_J+flog2_K", "flog2_Ih+flog2_K", "log2_4JKf"});
    const bool cond2 = add_min_condition(
        "condition2",
        {floor_log2(dim0) + floor_log2(dim1), floor_log2(dim1) + floor_log2(n_f),
         floor_log2(dim0) + floor_log2(n_f), log2_of(4.0 * n_h * dim1)},
        {"flog2_I+flog2_J", "flog2_J+flog2_Kf", "flog2_I+flog2_Kf", "log2_4IhJ"});

    report.satisfied = cond1 || cond2;
    if (cond1) {
        report.which_condition = "condition 1";
    } else if (cond2) {
        report.which_condition = "condition 2";
    } else {
        report.which_condition = "condition 1";
    }
    return report;
}

IdentifiabilityReport check_fiber_conditions(const FiberScheme& scheme, int rank) {
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    IdentifiabilityReport report;
    const double threshold = log2_of(4.0 * rank);

    auto set_union_size = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::set<int> u(a.begin(), a.end());
        u.insert(b.begin(), b.end());
        return static_cast<long>(u.size());
    };
    auto intersect_size = [](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> out;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                              std::back_inserter(out));
        return static_cast<long>(out.size());
    };

    const auto& p1 = scheme.patterns[0];
    const auto& p2 = scheme.patterns[1];

    // 1: every pattern has at least two rows and two columns
    bool cond1 = true;
    for (int d = 0; d < 2; ++d) {
        const auto& p = scheme.patterns[d];
        const std::string tag = "condition1.pattern" + std::to_string(d + 1);
        report.clauses.push_back(
            make_clause(tag + ".rows", static_cast<double>(p.rows.size()), 2.0));
        report.clauses.push_back(
            make_clause(tag + ".cols", static_cast<double>(p.cols.size()), 2.0));
        cond1 = cond1 && p.rows.size() >= 2 && p.cols.size() >= 2;
    }
    // 2: row sets cover all phases
    const long row_union = set_union_size(p1.rows, p2.rows);
    report.clauses.push_back(make_clause("condition2.row_cover",
                                         static_cast<double>(row_union),
                                         static_cast<double>(scheme.dim0)));
    const bool cond2 = row_union == scheme.dim0;
    // 3: column sets cover all measurements
    const long col_union = set_union_size(p1.cols, p2.cols);
    report.clauses.push_back(make_clause("condition3.col_cover",
                                         static_cast<double>(col_union),
                                         static_cast<double>(scheme.dim1)));
    const bool cond3 = col_union == scheme.dim1;
    // 4: patterns intersect in rows or columns
    const long overlap = intersect_size(p1.rows, p2.rows) + intersect_size(p1.cols, p2.cols);
    report.clauses.push_back(
        make_clause("condition4.pattern_overlap", static_cast<double>(overlap), 1.0));
    const bool cond4 = overlap >= 1;
    // 5: per-pattern log2 inequality
    bool cond5 = true;
    for (int d = 0; d < 2; ++d) {
        const auto& p = scheme.patterns[d];
        const double fr = floor_log2(static_cast<long>(p.rows.size()));
        const double fc = floor_log2(static_cast<long>(p.cols.size()));
        const double fk = floor_log2(scheme.dim2);
        const double lhs = std::min({fr + fc, fr + fk, fc + fk});
        report.clauses.push_back(make_clause(
            "condition5.pattern" + std::to_string(d + 1) + ".min_term", lhs, threshold));
        cond5 = cond5 && lhs >= threshold;
    }

    report.satisfied = cond1 && cond2 && cond3 && cond4 && cond5;
    if (report.satisfied) {
        report.which_condition = "all conditions";
    } else if (!cond1) {
        report.which_condition = "condition 1";
    } else if (!cond2) {
        report.which_condition = "condition 2";
    } else if (!cond3) {
        report.which_condition = "condition 3";
    } else if (!cond4) {
        report.which_condition = "condition 4";
    } else {
        report.which_condition = "condition 5";
    }
    return report;
}

SlabMinima min_slab_requirements(int i_dim, int j_dim, int k_dim, int rank) {
    SlabMinima result;
    const IdentifiabilityReport generic = generic_identifiability(i_dim, j_dim, k_dim, rank);
    if (!generic.satisfied) {
        result.feasible = false;
        result.note = "rank exceeds the generic identifiability bound";
        return result;
    }

    // The conditions are monotone in both counts, so for each frontal count it
    // is enough to record the smallest passing horizontal count.
    auto passes = [&](int n_h, int n_f) {
        std::vector<int> h(n_h), f(n_f);
        for (int t = 0; t < n_h; ++t) h[t] = t;
        for (int t = 0; t < n_f; ++t) f[t] = t;
        return check_slab_conditions(SlabScheme(std::move(h), std::move(f), i_dim, j_dim, k_dim),
                                     rank)
            .satisfied;
    };

    std::vector<std::pair<int, int>> frontier;
    int best_h = std::numeric_limits<int>::max();
    for (int n_f = 1; n_f <= k_dim; ++n_f) {
        for (int n_h = 1; n_h <= i_dim; ++n_h) {
            if (!passes(n_h, n_f)) continue;
            if (n_h < best_h) {
                frontier.emplace_back(n_h, n_f);
                best_h = n_h;
            }
            break;
        }
        if (best_h == 1) break;  // nothing to the right can improve
    }
    result.feasible = !frontier.empty();
    result.minimal_pairs = std::move(frontier);
    if (!result.feasible) {
        result.note = "no pair up to (" + std::to_string(i_dim) + ", " +
                      std::to_string(k_dim) + ") satisfies the slab conditions";
    }
    return result;
}

double sampling_fraction(const MaskTensor& mask, const MaskTensor* extra_known) {
    long observed = 0;
    if (extra_known != nullptr) {
        if (!mask.same_dims(*extra_known)) {
            throw std::invalid_argument("sampling_fraction requires identical mask dims");
        }
        observed = mask.unite(*extra_known).observed_count();
    } else {
        observed = mask.observed_count();
    }
    return 100.0 * static_cast<double>(observed) / static_cast<double>(mask.size());
}

}  // namespace gridcpd
