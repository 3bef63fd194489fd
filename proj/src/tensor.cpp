#include "gridcpd/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gridcpd {

namespace {

void require_positive_dims(int i_dim, int j_dim, int k_dim) {
    if (i_dim <= 0 || j_dim <= 0 || k_dim <= 0) {
        throw std::invalid_argument("tensor dims must be positive, got (" +
                                    std::to_string(i_dim) + ", " + std::to_string(j_dim) +
                                    ", " + std::to_string(k_dim) + ")");
    }
}

void require_index(int idx, int dim, const char* what) {
    if (idx < 0 || idx >= dim) {
        throw std::out_of_range(std::string(what) + " index " + std::to_string(idx) +
                                " out of range [0, " + std::to_string(dim) + ")");
    }
}

}  // namespace

Tensor3::Tensor3(int i_dim, int j_dim, int k_dim)
    : dims_{i_dim, j_dim, k_dim} {
    require_positive_dims(i_dim, j_dim, k_dim);
    data_.assign(static_cast<long>(i_dim) * j_dim * k_dim, 0.0);
}

Tensor3 Tensor3::constant(int i_dim, int j_dim, int k_dim, double value) {
    Tensor3 t(i_dim, j_dim, k_dim);
    t.data_.assign(t.data_.size(), value);
    return t;
}

double Tensor3::at(int i, int j, int k) const {
    require_index(i, dims_[0], "mode-1");
    require_index(j, dims_[1], "mode-2");
    require_index(k, dims_[2], "mode-3");
    return data_[offset(i, j, k)];
}

double& Tensor3::at(int i, int j, int k) {
    require_index(i, dims_[0], "mode-1");
    require_index(j, dims_[1], "mode-2");
    require_index(k, dims_[2], "mode-3");
    return data_[offset(i, j, k)];
}

MaskTensor::MaskTensor(int i_dim, int j_dim, int k_dim, bool observed)
    : dims_{i_dim, j_dim, k_dim} {
    require_positive_dims(i_dim, j_dim, k_dim);
    data_.assign(static_cast<long>(i_dim) * j_dim * k_dim, observed ? 1 : 0);
}

MaskTensor MaskTensor::ones(int i_dim, int j_dim, int k_dim) {
    return MaskTensor(i_dim, j_dim, k_dim, true);
}

void MaskTensor::set(int i, int j, int k, bool observed) {
    require_index(i, dims_[0], "mode-1");
    require_index(j, dims_[1], "mode-2");
    require_index(k, dims_[2], "mode-3");
    data_[offset(i, j, k)] = observed ? 1 : 0;
}

long MaskTensor::observed_count() const {
    long n = 0;
    for (auto v : data_) n += v;
    return n;
}

bool MaskTensor::all() const {
    return observed_count() == size();
}

MaskTensor MaskTensor::unite(const MaskTensor& other) const {
    if (!same_dims(other)) {
        throw std::invalid_argument("mask union requires identical dims");
    }
    MaskTensor out = *this;
    for (size_t n = 0; n < data_.size(); ++n) {
        out.data_[n] = (data_[n] || other.data_[n]) ? 1 : 0;
    }
    return out;
}

Tensor3 rank_one(const Vector& a, const Vector& b, const Vector& c) {
    if (a.size() == 0 || b.size() == 0 || c.size() == 0) {
        throw std::invalid_argument("rank_one requires nonempty vectors");
    }
    Tensor3 t(static_cast<int>(a.size()), static_cast<int>(b.size()),
              static_cast<int>(c.size()));
    for (int k = 0; k < t.dim2(); ++k)
        for (int j = 0; j < t.dim1(); ++j)
            for (int i = 0; i < t.dim0(); ++i)
                t(i, j, k) = a(i) * b(j) * c(k);
    return t;
}

Matrix unfold(const Tensor3& x, int mode) {
    const int di = x.dim0(), dj = x.dim1(), dk = x.dim2();
    Matrix m;
    switch (mode) {
        case 1:
            m.resize(di, static_cast<long>(dj) * dk);
            for (int k = 0; k < dk; ++k)
                for (int j = 0; j < dj; ++j)
                    for (int i = 0; i < di; ++i)
                        m(i, j + static_cast<long>(dj) * k) = x(i, j, k);
            break;
        case 2:
            m.resize(dj, static_cast<long>(dk) * di);
            for (int i = 0; i < di; ++i)
                for (int k = 0; k < dk; ++k)
                    for (int j = 0; j < dj; ++j)
                        m(j, k + static_cast<long>(dk) * i) = x(i, j, k);
            break;
        case 3:
            m.resize(dk, static_cast<long>(di) * dj);
            for (int j = 0; j < dj; ++j)
                for (int i = 0; i < di; ++i)
                    for (int k = 0; k < dk; ++k)
                        m(k, i + static_cast<long>(di) * j) = x(i, j, k);
            break;
        default:
            throw std::invalid_argument("unfold mode must be 1, 2 or 3");
    }
    return m;
}

Tensor3 refold(const Matrix& m, int mode, int i_dim, int j_dim, int k_dim) {
    Tensor3 t(i_dim, j_dim, k_dim);
    auto check_shape = [&](long rows, long cols) {
        if (m.rows() != rows || m.cols() != cols) {
            throw std::invalid_argument("refold: matrix shape does not match dims");
        }
    };
    switch (mode) {
        case 1:
            check_shape(i_dim, static_cast<long>(j_dim) * k_dim);
            for (int k = 0; k < k_dim; ++k)
                for (int j = 0; j < j_dim; ++j)
                    for (int i = 0; i < i_dim; ++i)
                        t(i, j, k) = m(i, j + static_cast<long>(j_dim) * k);
            break;
        case 2:
            check_shape(j_dim, static_cast<long>(k_dim) * i_dim);
            for (int i = 0; i < i_dim; ++i)
                for (int k = 0; k < k_dim; ++k)
                    for (int j = 0; j < j_dim; ++j)
                        t(i, j, k) = m(j, k + static_cast<long>(k_dim) * i);
            break;
        case 3:
            check_shape(k_dim, static_cast<long>(i_dim) * j_dim);
            for (int j = 0; j < j_dim; ++j)
                for (int i = 0; i < i_dim; ++i)
                    for (int k = 0; k < k_dim; ++k)
                        t(i, j, k) = m(k, i + static_cast<long>(i_dim) * j);
            break;
        default:
            throw std::invalid_argument("refold mode must be 1, 2 or 3");
    }
    return t;
}

Matrix khatri_rao(const Matrix& p, const Matrix& q) {
    if (p.cols() != q.cols()) {
        throw std::invalid_argument("khatri_rao requires equal column counts");
    }
    const long m = p.rows(), n = q.rows(), f_count = p.cols();
    Matrix out(m * n, f_count);
    for (long f = 0; f < f_count; ++f)
        for (long r = 0; r < m; ++r)
            out.col(f).segment(r * n, n) = p(r, f) * q.col(f);
    return out;
}

Matrix extract_slab(const Tensor3& x, SlabKind kind, int index) {
    Matrix m;
    switch (kind) {
        case SlabKind::Horizontal:
            require_index(index, x.dim0(), "horizontal slab");
            m.resize(x.dim1(), x.dim2());
            for (int k = 0; k < x.dim2(); ++k)
                for (int j = 0; j < x.dim1(); ++j)
                    m(j, k) = x(index, j, k);
            break;
        case SlabKind::Vertical:
            require_index(index, x.dim1(), "vertical slab");
            m.resize(x.dim0(), x.dim2());
            for (int k = 0; k < x.dim2(); ++k)
                for (int i = 0; i < x.dim0(); ++i)
                    m(i, k) = x(i, index, k);
            break;
        case SlabKind::Frontal:
            require_index(index, x.dim2(), "frontal slab");
            m.resize(x.dim0(), x.dim1());
            for (int j = 0; j < x.dim1(); ++j)
                for (int i = 0; i < x.dim0(); ++i)
                    m(i, j) = x(i, j, index);
            break;
    }
    return m;
}

Vector extract_fiber(const Tensor3& x, int i, int j) {
    require_index(i, x.dim0(), "fiber mode-1");
    require_index(j, x.dim1(), "fiber mode-2");
    Vector v(x.dim2());
    for (int k = 0; k < x.dim2(); ++k) v(k) = x(i, j, k);
    return v;
}

double frobenius_norm_squared(const Tensor3& x) {
    double s = 0.0;
    for (double v : x.raw()) s += v * v;
    return s;
}

double relative_error(const Tensor3& x, const Tensor3& xhat) {
    if (!x.same_dims(xhat)) {
        throw std::invalid_argument("relative_error requires identical dims");
    }
    const double denom = frobenius_norm_squared(x);
    if (denom == 0.0) {
        throw std::invalid_argument("relative_error undefined for zero-norm reference");
    }
    double num = 0.0;
    for (long n = 0; n < x.size(); ++n) {
        const double d = x.raw()[n] - xhat.raw()[n];
        num += d * d;
    }
    return num / denom;
}

}  // namespace gridcpd
