#pragma once

// The transform matrix M: named families (identity, orthonormal DCT-II,
// orthonormal Haar, data-dependent U3^T, seeded random orthogonal) and
// user-supplied invertible matrices.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "random.hpp"
#include "tensor.hpp"

namespace tsdp {

enum class TransformKind { identity, dct, haar, data_dependent, random, user };

inline std::string_view to_string(TransformKind kind) {
    switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::dct: return "dct";
    case TransformKind::haar: return "haar";
    case TransformKind::data_dependent: return "data";
    case TransformKind::random: return "random";
    case TransformKind::user: return "user";
    }
    return "unknown";
}

inline TransformKind parse_transform_kind(std::string_view name) {
    if (name == "identity") return TransformKind::identity;
    if (name == "dct") return TransformKind::dct;
    if (name == "haar") return TransformKind::haar;
    if (name == "data") return TransformKind::data_dependent;
    if (name == "random") return TransformKind::random;
    if (name == "user" || name == "file") return TransformKind::user;
    throw InvalidArgument("unknown transform kind '" + std::string(name) + "'");
}

inline constexpr double default_ortho_tol = 1e-10;
inline constexpr double max_condition = 1e12;

struct InvertibilityReport {
    double condition = std::numeric_limits<double>::infinity();
    bool invertible = false;
};

struct OrthogonalityReport {
    double defect = std::numeric_limits<double>::infinity(); ///< max |M^T M - I|
    bool orthogonal = false;
};

inline void require_square(Matrix const& m, char const* what) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

/// 2-norm condition number from singular values; infinite when singular.
inline InvertibilityReport verify_invertible(Matrix const& m, double max_cond = max_condition) {
    require_square(m, "verify_invertible");
    Eigen::JacobiSVD<Matrix> svd(m);
    auto const& s = svd.singularValues();
    InvertibilityReport r;
    double const smin = s[s.size() - 1];
    r.condition = smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
    r.invertible = std::isfinite(r.condition) && r.condition < max_cond;
    return r;
}

inline OrthogonalityReport verify_orthogonal(Matrix const& m, double tol = default_ortho_tol) {
    require_square(m, "verify_orthogonal");
    OrthogonalityReport r;
    r.defect = (m.transpose() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
    r.orthogonal = r.defect <= tol;
    return r;
}

/// An invertible n3 x n3 transform M together with its inverse.
class OrthoTransform {
public:
    /// Wraps a matrix. Kinds other than `user` must be orthogonal within ortho_tol.
    OrthoTransform(Matrix m, TransformKind kind, double ortho_tol = default_ortho_tol,
                   std::optional<std::uint64_t> seed = std::nullopt)
        : m_(std::move(m)), kind_(kind), ortho_tol_(ortho_tol), seed_(seed) {
        require_square(m_, "OrthoTransform");
        detail::require_finite(std::span<const double>(m_.data(), static_cast<std::size_t>(m_.size())),
                               "OrthoTransform");
        auto const inv = verify_invertible(m_);
        if (!inv.invertible)
            throw InvalidArgument("OrthoTransform: matrix is singular or ill-conditioned (condition " +
                                  std::to_string(inv.condition) + ")");
        condition_ = inv.condition;
        auto const orth = verify_orthogonal(m_, ortho_tol_);
        orthogonal_ = orth.orthogonal;
        ortho_defect_ = orth.defect;
        if (kind_ != TransformKind::user && !orthogonal_)
            throw InvalidArgument("OrthoTransform: " + std::string(to_string(kind_)) +
                                  " transform is not orthogonal (defect " + std::to_string(orth.defect) + ")");
        inverse_ = orthogonal_ ? Matrix(m_.transpose()) : Matrix(m_.fullPivLu().inverse());
    }

    Matrix const& matrix() const noexcept { return m_; }
    Matrix const& inverse() const noexcept { return inverse_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    TransformKind kind() const noexcept { return kind_; }
    double ortho_tol() const noexcept { return ortho_tol_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }
    bool is_orthogonal() const noexcept { return orthogonal_; }
    double ortho_defect() const noexcept { return ortho_defect_; }
    double condition() const noexcept { return condition_; }

private:
    Matrix m_;
    Matrix inverse_;
    TransformKind kind_;
    double ortho_tol_;
    std::optional<std::uint64_t> seed_;
    bool orthogonal_ = false;
    double ortho_defect_ = 0.0;
    double condition_ = 1.0;
};

namespace detail {

inline Matrix dct_matrix(std::size_t n) {
    auto const nn = static_cast<Eigen::Index>(n);
    Matrix m(nn, nn);
    double const s0 = std::sqrt(1.0 / static_cast<double>(n));
    double const s = std::sqrt(2.0 / static_cast<double>(n));
    for (Eigen::Index k = 0; k < nn; ++k)
        for (Eigen::Index j = 0; j < nn; ++j)
            m(k, j) = (k == 0 ? s0 : s) *
                      std::cos(std::numbers::pi * static_cast<double>((2 * j + 1) * k) / (2.0 * static_cast<double>(n)));
    return m;
}

/// Recursive Haar matrix [H_{n/2} (x) (1, 1); I_{n/2} (x) (1, -1)] with rows normalized.
inline Matrix haar_matrix(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw InvalidArgument("haar transform requires n3 to be a power of two, got " + std::to_string(n));
    Matrix h = Matrix::Ones(1, 1);
    for (Eigen::Index size = 1; static_cast<std::size_t>(size) < n; size *= 2) {
        Matrix next = Matrix::Zero(2 * size, 2 * size);
        for (Eigen::Index i = 0; i < size; ++i)
            for (Eigen::Index j = 0; j < size; ++j) {
                next(i, 2 * j) = h(i, j);
                next(i, 2 * j + 1) = h(i, j);
            }
        for (Eigen::Index i = 0; i < size; ++i) {
            next(size + i, 2 * i) = 1.0;
            next(size + i, 2 * i + 1) = -1.0;
        }
        h = std::move(next);
    }
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        h.row(i) /= h.row(i).norm();
    return h;
}

/// Q factor of a Householder QR of a seeded Gaussian matrix, columns signed so diag(R) > 0.
inline Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix g = rng.normal_matrix(n, n);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (r(j, j) < 0.0)
            q.col(j) = -q.col(j);
    return q;
}

} // namespace detail

struct TransformOptions {
    std::optional<std::uint64_t> seed; ///< required for random
    double ortho_tol = default_ortho_tol;
};

/// Builds a named orthogonal transform of size n3.
inline OrthoTransform build_transform(TransformKind kind, std::size_t n3, TransformOptions const& opts = {}) {
    if (n3 == 0)
        throw InvalidArgument("build_transform: n3 must be positive");
    switch (kind) {
    case TransformKind::identity:
        return OrthoTransform(Matrix::Identity(static_cast<Eigen::Index>(n3), static_cast<Eigen::Index>(n3)), kind,
                              opts.ortho_tol);
    case TransformKind::dct: return OrthoTransform(detail::dct_matrix(n3), kind, opts.ortho_tol);
    case TransformKind::haar: return OrthoTransform(detail::haar_matrix(n3), kind, opts.ortho_tol);
    case TransformKind::random:
        if (!opts.seed)
            throw InvalidArgument("random transform requires a seed");
        return OrthoTransform(detail::random_orthogonal(n3, *opts.seed), kind, opts.ortho_tol, opts.seed);
    case TransformKind::data_dependent:
        throw InvalidArgument("data transform needs a tensor; use build_data_dependent");
    case TransformKind::user: throw InvalidArgument("user transform needs a matrix; construct OrthoTransform directly");
    }
    throw InvalidArgument("unknown transform kind");
}

/// M = U3^T, U3 the full left-singular factor of the mode-3 unfolding of Y.
/// Each row is signed so that its largest-magnitude entry is positive.
inline OrthoTransform build_data_dependent(Tensor3 const& y, double ortho_tol = default_ortho_tol) {
    if (max_abs(y) == 0.0)
        throw InvalidArgument("build_data_dependent: tensor is identically zero");
    Matrix unfolding = mode3_unfolding(y);
    Eigen::JacobiSVD<Matrix> svd(unfolding, Eigen::ComputeFullU);
    Matrix m = svd.matrixU().transpose();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index arg = 0;
        m.row(i).cwiseAbs().maxCoeff(&arg);
        if (m(i, arg) < 0.0)
            m.row(i) = -m.row(i);
    }
    return OrthoTransform(std::move(m), TransformKind::data_dependent, ortho_tol);
}

} // namespace tsdp
