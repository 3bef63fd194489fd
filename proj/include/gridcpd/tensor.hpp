#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace gridcpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense real third-order tensor, indexed (i, j, k) with
/// 0 <= i < dim0, 0 <= j < dim1, 0 <= k < dim2.
///
/// Treat instances as values: copy freely, do not mutate shared ones.
/// All free functions below are pure.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int i_dim, int j_dim, int k_dim);

    static Tensor3 constant(int i_dim, int j_dim, int k_dim, double value);

    int dim0() const { return dims_[0]; }
    int dim1() const { return dims_[1]; }
    int dim2() const { return dims_[2]; }
    std::array<int, 3> dims() const { return dims_; }
    long size() const { return static_cast<long>(data_.size()); }

    double operator()(int i, int j, int k) const {
        return data_[offset(i, j, k)];
    }
    double& operator()(int i, int j, int k) {
        return data_[offset(i, j, k)];
    }

    double at(int i, int j, int k) const;  // range-checked
    double& at(int i, int j, int k);

    bool same_dims(const Tensor3& other) const { return dims_ == other.dims_; }

    const std::vector<double>& raw() const { return data_; }
    std::vector<double>& raw() { return data_; }

private:
    long offset(int i, int j, int k) const {
        return i + static_cast<long>(dims_[0]) * (j + static_cast<long>(dims_[1]) * k);
    }

    std::array<int, 3> dims_{0, 0, 0};
    std::vector<double> data_;
};

/// Binary observation indicator with the same index space as a Tensor3.
/// Entries are exactly 0 or 1 (1 = observed).
class MaskTensor {
public:
    MaskTensor() = default;
    MaskTensor(int i_dim, int j_dim, int k_dim, bool observed = false);

    static MaskTensor ones(int i_dim, int j_dim, int k_dim);

    int dim0() const { return dims_[0]; }
    int dim1() const { return dims_[1]; }
    int dim2() const { return dims_[2]; }
    std::array<int, 3> dims() const { return dims_; }
    long size() const { return static_cast<long>(data_.size()); }

    bool operator()(int i, int j, int k) const {
        return data_[offset(i, j, k)] != 0;
    }
    void set(int i, int j, int k, bool observed);

    long observed_count() const;
    bool any() const { return observed_count() > 0; }
    bool all() const;

    /// Entrywise OR with another mask of identical dims.
    MaskTensor unite(const MaskTensor& other) const;

    bool same_dims(const MaskTensor& other) const { return dims_ == other.dims_; }
    bool matches(const Tensor3& t) const { return dims_ == t.dims(); }

    const std::vector<std::uint8_t>& raw() const { return data_; }
    std::vector<std::uint8_t>& raw() { return data_; }

private:
    long offset(int i, int j, int k) const {
        return i + static_cast<long>(dims_[0]) * (j + static_cast<long>(dims_[1]) * k);
    }

    std::array<int, 3> dims_{0, 0, 0};
    std::vector<std::uint8_t> data_;
};

enum class SlabKind { Horizontal, Vertical, Frontal };

/// Outer product a ∘ b ∘ c: result(i,j,k) = a(i) * b(j) * c(k).
Tensor3 rank_one(const Vector& a, const Vector& b, const Vector& c);

/// Mode-n matricization. Column index conventions (cyclic):
///   mode 1: dim0 x (dim1*dim2), column = j + dim1 * k
///   mode 2: dim1 x (dim2*dim0), column = k + dim2 * i
///   mode 3: dim2 x (dim0*dim1), column = i + dim0 * j
/// With these conventions,
///   unfold(rank_one(a,b,c), 1) = a * khatri_rao(c, b)^T
///   unfold(rank_one(a,b,c), 2) = b * khatri_rao(a, c)^T
///   unfold(rank_one(a,b,c), 3) = c * khatri_rao(b, a)^T
Matrix unfold(const Tensor3& x, int mode);

/// Inverse of unfold for the given mode and original dims.
Tensor3 refold(const Matrix& m, int mode, int i_dim, int j_dim, int k_dim);

/// Column-wise Kronecker product: for P (m x F) and Q (n x F), the result is
/// (m*n) x F with column f = kron(P.col(f), Q.col(f)) and row index
/// r_q + n * r_p (Q index varies fastest).
Matrix khatri_rao(const Matrix& p, const Matrix& q);

/// Fixed-index matrix section.
///   Horizontal (i fixed): dim1 x dim2,  result(j,k) = X(i,j,k)
///   Vertical   (j fixed): dim0 x dim2,  result(i,k) = X(i,j,k)
///   Frontal    (k fixed): dim0 x dim1,  result(i,j) = X(i,j,k)
Matrix extract_slab(const Tensor3& x, SlabKind kind, int index);

/// Third-mode fiber X(i,j,:) as a vector of length dim2.
Vector extract_fiber(const Tensor3& x, int i, int j);

double frobenius_norm_squared(const Tensor3& x);

/// ||x - xhat||_F^2 / ||x||_F^2. Throws if x has zero norm.
double relative_error(const Tensor3& x, const Tensor3& xhat);

}  // namespace gridcpd
