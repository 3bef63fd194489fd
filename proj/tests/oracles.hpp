#pragma once

// Brute-force reference implementations used only by tests. These stay
// independent of the library code paths they check: plain index loops over
// the definitions, no shared helpers.

#include "gridcpd/cpd.hpp"
#include "gridcpd/tensor.hpp"

#include <cmath>
#include <random>

namespace oracles {

using gridcpd::CpdFactors;
using gridcpd::Matrix;
using gridcpd::MaskTensor;
using gridcpd::Tensor3;
using gridcpd::Vector;

inline Tensor3 rank_one_loop(const Vector& a, const Vector& b, const Vector& c) {
    Tensor3 t(static_cast<int>(a.size()), static_cast<int>(b.size()),
              static_cast<int>(c.size()));
    for (int i = 0; i < t.dim0(); ++i)
        for (int j = 0; j < t.dim1(); ++j)
            for (int k = 0; k < t.dim2(); ++k) t(i, j, k) = a(i) * b(j) * c(k);
    return t;
}

inline Tensor3 reconstruct_loop(const CpdFactors& f) {
    Tensor3 t(static_cast<int>(f.a.rows()), static_cast<int>(f.b.rows()),
              static_cast<int>(f.c.rows()));
    for (int i = 0; i < t.dim0(); ++i)
        for (int j = 0; j < t.dim1(); ++j)
            for (int k = 0; k < t.dim2(); ++k) {
                double s = 0.0;
                for (int r = 0; r < f.rank(); ++r) s += f.a(i, r) * f.b(j, r) * f.c(k, r);
                t(i, j, k) = s;
            }
    return t;
}

inline Matrix khatri_rao_loop(const Matrix& p, const Matrix& q) {
    Matrix out(p.rows() * q.rows(), p.cols());
    for (long f = 0; f < p.cols(); ++f)
        for (long rp = 0; rp < p.rows(); ++rp)
            for (long rq = 0; rq < q.rows(); ++rq)
                out(rq + q.rows() * rp, f) = p(rp, f) * q(rq, f);
    return out;
}

inline Matrix unfold_loop(const Tensor3& x, int mode) {
    const int di = x.dim0(), dj = x.dim1(), dk = x.dim2();
    Matrix m;
    if (mode == 1) {
        m.resize(di, static_cast<long>(dj) * dk);
        for (int i = 0; i < di; ++i)
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k) m(i, j + dj * k) = x(i, j, k);
    } else if (mode == 2) {
        m.resize(dj, static_cast<long>(dk) * di);
        for (int i = 0; i < di; ++i)
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k) m(j, k + dk * i) = x(i, j, k);
    } else {
        m.resize(dk, static_cast<long>(di) * dj);
        for (int i = 0; i < di; ++i)
            for (int j = 0; j < dj; ++j)
                for (int k = 0; k < dk; ++k) m(k, i + di * j) = x(i, j, k);
    }
    return m;
}

inline double frobenius_sq_loop(const Tensor3& x) {
    double s = 0.0;
    for (int i = 0; i < x.dim0(); ++i)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k) s += x(i, j, k) * x(i, j, k);
    return s;
}

inline Tensor3 random_tensor(int di, int dj, int dk, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tensor3 t(di, dj, dk);
    for (int i = 0; i < di; ++i)
        for (int j = 0; j < dj; ++j)
            for (int k = 0; k < dk; ++k) t(i, j, k) = gauss(rng);
    return t;
}

inline Matrix random_matrix(long rows, long cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) m(r, c) = gauss(rng);
    return m;
}

inline CpdFactors random_factors(int di, int dj, int dk, int rank, std::mt19937_64& rng) {
    return CpdFactors{random_matrix(di, rank, rng), random_matrix(dj, rank, rng),
                      random_matrix(dk, rank, rng)};
}

inline double max_abs_diff(const Tensor3& a, const Tensor3& b) {
    double m = 0.0;
    for (int i = 0; i < a.dim0(); ++i)
        for (int j = 0; j < a.dim1(); ++j)
            for (int k = 0; k < a.dim2(); ++k)
                m = std::max(m, std::abs(a(i, j, k) - b(i, j, k)));
    return m;
}

inline long mask_count_loop(const MaskTensor& m) {
    long n = 0;
    for (int i = 0; i < m.dim0(); ++i)
        for (int j = 0; j < m.dim1(); ++j)
            for (int k = 0; k < m.dim2(); ++k) n += m(i, j, k) ? 1 : 0;
    return n;
}

}  // namespace oracles
