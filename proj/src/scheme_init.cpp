#include "gridcpd/scheme_init.hpp"

#include <map>
#include <vector>

namespace gridcpd {

std::vector<int> fully_observed_rows(const MaskTensor& mask) {
    std::vector<int> rows;
    for (int i = 0; i < mask.dim0(); ++i) {
        bool complete = true;
        for (int j = 0; j < mask.dim1() && complete; ++j)
            for (int k = 0; k < mask.dim2() && complete; ++k)
                if (!mask(i, j, k)) complete = false;
        if (complete) rows.push_back(i);
    }
    return rows;
}

std::optional<CpdFactors> complete_rows_warm_start(const Tensor3& x, const MaskTensor& mask,
                                                   int rank, const FitOptions& opts,
                                                   const std::vector<int>* row_classes) {
    if (!mask.matches(x)) {
        throw std::invalid_argument("complete_rows_warm_start: mask dims do not match tensor");
    }
    if (row_classes != nullptr && static_cast<int>(row_classes->size()) != x.dim0()) {
        throw std::invalid_argument("complete_rows_warm_start: one class per row required");
    }
    const std::vector<int> rows = fully_observed_rows(mask);
    if (rows.empty() || static_cast<int>(rows.size()) == x.dim0()) return std::nullopt;

    Tensor3 sub(static_cast<int>(rows.size()), x.dim1(), x.dim2());
    for (size_t t = 0; t < rows.size(); ++t)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k) sub(static_cast<int>(t), j, k) = x(rows[t], j, k);

    const FitResult fit = als_fit(sub, rank, opts);
    CpdFactors warm;
    warm.a = Matrix::Zero(x.dim0(), rank);
    for (size_t t = 0; t < rows.size(); ++t) {
        warm.a.row(rows[t]) = fit.factors.a.row(static_cast<long>(t));
    }
    warm.b = fit.factors.b;
    warm.c = fit.factors.c;

    // class-mean anchors for the rows the subtensor did not cover
    std::map<int, std::pair<Vector, int>> class_sums;
    auto class_of = [&](int row) { return row_classes ? (*row_classes)[row] : 0; };
    for (size_t t = 0; t < rows.size(); ++t) {
        auto [it, fresh] =
            class_sums.try_emplace(class_of(rows[t]), Vector::Zero(rank).eval(), 0);
        it->second.first += warm.a.row(rows[t]).transpose();
        it->second.second += 1;
    }
    std::vector<char> complete(x.dim0(), 0);
    for (int r : rows) complete[r] = 1;
    for (int i = 0; i < x.dim0(); ++i) {
        if (complete[i]) continue;
        const auto it = class_sums.find(class_of(i));
        if (it != class_sums.end() && it->second.second > 0) {
            warm.a.row(i) = (it->second.first / it->second.second).transpose();
        }
    }
    return warm;
}

}  // namespace gridcpd
