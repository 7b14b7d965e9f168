#pragma once

// Dense order-3 tensors viewed as matrices of tubes, plus the transform-free
// structural operations (mode-3 product, facewise product, bdiag, mat_M,
// inner products, facewise transpose, fold/unfold).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace tsdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstSliceView = Eigen::Map<const RowMajorMatrix>;

namespace detail {

inline std::string extents_str(std::size_t a, std::size_t b, std::size_t c) {
    return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c);
}

template <typename Range>
void require_finite(Range const& values, char const* what) {
    for (double v : values)
        if (!std::isfinite(v))
            throw InvalidArgument(std::string(what) + ": non-finite entry");
}

} // namespace detail

/// A 1x1xn3 tensor, the scalar of the tubal ring.
class Tube {
public:
    explicit Tube(Vector values) : values_(std::move(values)) {
        if (values_.size() == 0)
            throw InvalidArgument("tube: empty input");
        detail::require_finite(std::span<const double>(values_.data(), values_.size()), "tube");
    }

    static Tube zeros(std::size_t n3) { return Tube(Vector::Zero(static_cast<Eigen::Index>(n3))); }

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t k) const { return values_[static_cast<Eigen::Index>(k)]; }
    Vector const& values() const noexcept { return values_; }
    double norm() const { return values_.norm(); }

private:
    Vector values_;
};

/// tube(x)_{1,1,k} = x_k
inline Tube tube(std::span<const double> x) {
    if (x.empty())
        throw InvalidArgument("tube: empty input");
    return Tube(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
}

inline Tube tube(std::initializer_list<double> x) {
    return tube(std::span<const double>(x.begin(), x.size()));
}

inline std::vector<double> vec(Tube const& t) {
    return {t.values().data(), t.values().data() + t.values().size()};
}

/// Dense real n1 x n2 x n3 tensor.
///
/// Storage is slice-major: frontal slice k is contiguous and row-major, so
/// entry (i, j, k) lives at k*n1*n2 + i*n2 + j. Values are immutable once
/// constructed and every entry is finite.
class Tensor3 {
public:
    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, std::vector<double> data)
        : n1_(n1), n2_(n2), n3_(n3), data_(std::move(data)) {
        if (n1 == 0 || n2 == 0 || n3 == 0)
            throw InvalidArgument("Tensor3: extents must be positive, got " + detail::extents_str(n1, n2, n3));
        if (data_.size() != n1 * n2 * n3)
            throw DimensionError("Tensor3: data length " + std::to_string(data_.size()) + " does not match " +
                                 detail::extents_str(n1, n2, n3));
        detail::require_finite(data_, "Tensor3");
    }

    static Tensor3 zeros(std::size_t n1, std::size_t n2, std::size_t n3) {
        return Tensor3(n1, n2, n3, std::vector<double>(n1 * n2 * n3, 0.0));
    }

    /// Builds a tensor from frontal slices, all of equal shape.
    static Tensor3 from_slices(std::span<const Matrix> slices) {
        if (slices.empty())
            throw InvalidArgument("Tensor3::from_slices: no slices");
        auto const n1 = static_cast<std::size_t>(slices.front().rows());
        auto const n2 = static_cast<std::size_t>(slices.front().cols());
        std::vector<double> data(n1 * n2 * slices.size());
        for (std::size_t k = 0; k < slices.size(); ++k) {
            if (static_cast<std::size_t>(slices[k].rows()) != n1 || static_cast<std::size_t>(slices[k].cols()) != n2)
                throw DimensionError("Tensor3::from_slices: slice " + std::to_string(k) + " has a different shape");
            Eigen::Map<RowMajorMatrix>(data.data() + k * n1 * n2, static_cast<Eigen::Index>(n1),
                                       static_cast<Eigen::Index>(n2)) = slices[k];
        }
        return Tensor3(n1, n2, slices.size(), std::move(data));
    }

    static Tensor3 from_slices(std::initializer_list<Matrix> slices) {
        return from_slices(std::span<const Matrix>(slices.begin(), slices.size()));
    }

    /// Builds an n1 x n2 x n3 tensor whose (i, j) tube is tubes[i][j].
    static Tensor3 from_tubes(std::size_t n1, std::size_t n2, std::span<const Tube> tubes_row_major) {
        if (tubes_row_major.size() != n1 * n2 || tubes_row_major.empty())
            throw DimensionError("Tensor3::from_tubes: expected " + std::to_string(n1 * n2) + " tubes");
        std::size_t const n3 = tubes_row_major.front().size();
        std::vector<double> data(n1 * n2 * n3);
        for (std::size_t p = 0; p < n1 * n2; ++p) {
            if (tubes_row_major[p].size() != n3)
                throw DimensionError("Tensor3::from_tubes: tube lengths differ");
            for (std::size_t k = 0; k < n3; ++k)
                data[k * n1 * n2 + p] = tubes_row_major[p][k];
        }
        return Tensor3(n1, n2, n3, std::move(data));
    }

    static Tensor3 from_tube(Tube const& t) { return from_tubes(1, 1, std::span<const Tube>(&t, 1)); }

    /// Generates entries from f(i, j, k).
    template <typename F>
    static Tensor3 generate(std::size_t n1, std::size_t n2, std::size_t n3, F&& f) {
        std::vector<double> data(n1 * n2 * n3);
        for (std::size_t k = 0; k < n3; ++k)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    data[(k * n1 + i) * n2 + j] = f(i, j, k);
        return Tensor3(n1, n2, n3, std::move(data));
    }

    std::size_t n1() const noexcept { return n1_; }
    std::size_t n2() const noexcept { return n2_; }
    std::size_t n3() const noexcept { return n3_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> data() const noexcept { return data_; }

    double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(k * n1_ + i) * n2_ + j]; }

    ConstSliceView slice(std::size_t k) const {
        return ConstSliceView(data_.data() + k * n1_ * n2_, static_cast<Eigen::Index>(n1_),
                              static_cast<Eigen::Index>(n2_));
    }

    Tube tube(std::size_t i, std::size_t j) const {
        Vector t(static_cast<Eigen::Index>(n3_));
        for (std::size_t k = 0; k < n3_; ++k)
            t[static_cast<Eigen::Index>(k)] = (*this)(i, j, k);
        return Tube(std::move(t));
    }

    /// The n1n2 x n3 matrix whose row i*n2+j is the (i, j) tube.
    Eigen::Map<const Matrix> tube_matrix() const {
        return Eigen::Map<const Matrix>(data_.data(), static_cast<Eigen::Index>(n1_ * n2_),
                                        static_cast<Eigen::Index>(n3_));
    }

    /// Inverse of tube_matrix().
    static Tensor3 from_tube_matrix(std::size_t n1, std::size_t n2, Matrix const& tubes) {
        if (static_cast<std::size_t>(tubes.rows()) != n1 * n2)
            throw DimensionError("Tensor3::from_tube_matrix: row count mismatch");
        std::vector<double> data(tubes.data(), tubes.data() + tubes.size());
        return Tensor3(n1, n2, static_cast<std::size_t>(tubes.cols()), std::move(data));
    }

    /// Sub-tensor on the given rows and columns (0-based), all slices kept.
    Tensor3 subtensor(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
        for (auto r : rows)
            if (r >= n1_)
                throw InvalidArgument("subtensor: row index out of range");
        for (auto c : cols)
            if (c >= n2_)
                throw InvalidArgument("subtensor: column index out of range");
        return generate(rows.size(), cols.size(), n3_,
                        [&](std::size_t i, std::size_t j, std::size_t k) { return (*this)(rows[i], cols[j], k); });
    }

    friend bool same_extents(Tensor3 const& a, Tensor3 const& b) {
        return a.n1_ == b.n1_ && a.n2_ == b.n2_ && a.n3_ == b.n3_;
    }

    std::string extents() const { return detail::extents_str(n1_, n2_, n3_); }

private:
    std::size_t n1_, n2_, n3_;
    std::vector<double> data_;
};

namespace detail {

inline void require_same_extents(Tensor3 const& a, Tensor3 const& b, char const* op) {
    if (!same_extents(a, b))
        throw DimensionError(std::string(op) + ": extents " + a.extents() + " and " + b.extents() + " differ");
}

template <typename F>
Tensor3 zip(Tensor3 const& a, Tensor3 const& b, char const* op, F f) {
    require_same_extents(a, b, op);
    std::vector<double> out(a.size());
    std::transform(a.data().begin(), a.data().end(), b.data().begin(), out.begin(), f);
    return Tensor3(a.n1(), a.n2(), a.n3(), std::move(out));
}

} // namespace detail

inline Tensor3 operator+(Tensor3 const& a, Tensor3 const& b) {
    return detail::zip(a, b, "operator+", [](double x, double y) { return x + y; });
}

inline Tensor3 operator-(Tensor3 const& a, Tensor3 const& b) {
    return detail::zip(a, b, "operator-", [](double x, double y) { return x - y; });
}

inline Tensor3 operator*(double s, Tensor3 const& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out)
        v *= s;
    return Tensor3(a.n1(), a.n2(), a.n3(), std::move(out));
}

inline Tensor3 operator-(Tensor3 const& a) { return -1.0 * a; }

inline double max_abs(Tensor3 const& a) {
    double m = 0.0;
    for (double v : a.data())
        m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(Tensor3 const& a, Tensor3 const& b) {
    detail::require_same_extents(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        m = std::max(m, std::abs(a.data()[p] - b.data()[p]));
    return m;
}

/// Elementwise |a - b| <= abs_tol + rel_tol * |b|.
inline bool approx_equal(Tensor3 const& a, Tensor3 const& b, double abs_tol = 1e-10, double rel_tol = 1e-8) {
    if (!same_extents(a, b))
        return false;
    for (std::size_t p = 0; p < a.size(); ++p)
        if (std::abs(a.data()[p] - b.data()[p]) > abs_tol + rel_tol * std::abs(b.data()[p]))
            return false;
    return true;
}

/// (A x_3 M)_{i,j,:} = M vec(a_ij). M may be rectangular (n3' x n3).
inline Tensor3 mode3_product(Tensor3 const& a, Matrix const& m) {
    if (static_cast<std::size_t>(m.cols()) != a.n3())
        throw DimensionError("mode3_product: matrix has " + std::to_string(m.cols()) + " columns, tensor has n3 = " +
                             std::to_string(a.n3()));
    detail::require_finite(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())), "mode3_product");
    Matrix out = a.tube_matrix() * m.transpose();
    return Tensor3::from_tube_matrix(a.n1(), a.n2(), out);
}

/// C_{:,:,k} = A_{:,:,k} B_{:,:,k}
inline Tensor3 facewise_product(Tensor3 const& a, Tensor3 const& b) {
    if (a.n2() != b.n1() || a.n3() != b.n3())
        throw DimensionError("facewise_product: " + a.extents() + " and " + b.extents() + " are not conformable");
    std::vector<Matrix> slices(a.n3());
    for (std::size_t k = 0; k < a.n3(); ++k)
        slices[k] = a.slice(k) * b.slice(k);
    return Tensor3::from_slices(slices);
}

/// Tensor whose every frontal slice is the n x n identity.
inline Tensor3 facewise_identity(std::size_t n, std::size_t n3) {
    return Tensor3::generate(n, n, n3, [](std::size_t i, std::size_t j, std::size_t) { return i == j ? 1.0 : 0.0; });
}

/// Block-diagonal n1n3 x n2n3 matrix with the frontal slices in order.
inline Matrix bdiag(Tensor3 const& a) {
    auto const r = static_cast<Eigen::Index>(a.n1());
    auto const c = static_cast<Eigen::Index>(a.n2());
    Matrix out = Matrix::Zero(r * static_cast<Eigen::Index>(a.n3()), c * static_cast<Eigen::Index>(a.n3()));
    for (std::size_t k = 0; k < a.n3(); ++k)
        out.block(static_cast<Eigen::Index>(k) * r, static_cast<Eigen::Index>(k) * c, r, c) = a.slice(k);
    return out;
}

/// n1 x n2 grid of n3 x n3 diagonal blocks diag(M vec(a_ij)).
inline Matrix mat_m(Tensor3 const& a, Matrix const& m) {
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.cols()) != a.n3())
        throw DimensionError("mat_M: transform must be " + std::to_string(a.n3()) + "x" + std::to_string(a.n3()));
    auto const n3 = static_cast<Eigen::Index>(a.n3());
    Matrix hat = a.tube_matrix() * m.transpose();
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(a.n1()) * n3, static_cast<Eigen::Index>(a.n2()) * n3);
    for (std::size_t i = 0; i < a.n1(); ++i)
        for (std::size_t j = 0; j < a.n2(); ++j) {
            auto const row = static_cast<Eigen::Index>(i * a.n2() + j);
            for (Eigen::Index k = 0; k < n3; ++k)
                out(static_cast<Eigen::Index>(i) * n3 + k, static_cast<Eigen::Index>(j) * n3 + k) = hat(row, k);
        }
    return out;
}

/// <A, B> = sum_{ijk} A_ijk B_ijk
inline double inner_product(Tensor3 const& a, Tensor3 const& b) {
    detail::require_same_extents(a, b, "inner_product");
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        s += a.data()[p] * b.data()[p];
    return s;
}

inline double frobenius_norm(Tensor3 const& a) { return std::sqrt(inner_product(a, a)); }

/// Transposes every frontal slice; extents become (n2, n1, n3).
inline Tensor3 facewise_transpose(Tensor3 const& a) {
    return Tensor3::generate(a.n2(), a.n1(), a.n3(),
                             [&](std::size_t i, std::size_t j, std::size_t k) { return a(j, i, k); });
}

/// Splits a length n*n3 vector into n consecutive blocks; block i becomes tube (i, 0).
inline Tensor3 fold(std::span<const double> v, std::size_t n3) {
    if (n3 == 0 || v.empty() || v.size() % n3 != 0)
        throw DimensionError("fold: length " + std::to_string(v.size()) + " is not a positive multiple of " +
                             std::to_string(n3));
    std::size_t const n = v.size() / n3;
    return Tensor3::generate(n, 1, n3, [&](std::size_t i, std::size_t, std::size_t k) { return v[i * n3 + k]; });
}

/// Row scan of the tubes of A: (a_11, a_12, ..., a_{n1 n2}), each tube contributing n3 entries.
inline std::vector<double> unfold(Tensor3 const& a) {
    std::vector<double> out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.n1(); ++i)
        for (std::size_t j = 0; j < a.n2(); ++j)
            for (std::size_t k = 0; k < a.n3(); ++k)
                out.push_back(a(i, j, k));
    return out;
}

/// The n3 x (n1 n2) mode-3 unfolding; row k is frontal slice k flattened row-major.
inline Matrix mode3_unfolding(Tensor3 const& a) { return a.tube_matrix().transpose(); }

} // namespace tsdp
