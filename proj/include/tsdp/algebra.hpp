#pragma once

// The tubal ring R_M and the *M-product on tensors: products, identity,
// transpose, SVD, rank, tube-valued determinants and principal minors.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "parallel.hpp"
#include "tensor.hpp"
#include "transform.hpp"

namespace tsdp {

/// Fixes the transform M that parameterizes the *M-product.
class StarMContext {
public:
    explicit StarMContext(OrthoTransform transform) : transform_(std::move(transform)) {}

    OrthoTransform const& transform() const noexcept { return transform_; }
    Matrix const& m() const noexcept { return transform_.matrix(); }
    Matrix const& m_inv() const noexcept { return transform_.inverse(); }
    std::size_t n3() const noexcept { return transform_.size(); }
    bool is_orthogonal() const noexcept { return transform_.is_orthogonal(); }

    /// A x_3 M
    Tensor3 forward(Tensor3 const& a) const {
        require_n3(a, "forward");
        return mode3_product(a, m());
    }

    /// A x_3 M^{-1}
    Tensor3 inverse(Tensor3 const& a_hat) const {
        require_n3(a_hat, "inverse");
        return mode3_product(a_hat, m_inv());
    }

    Vector forward(Tube const& a) const {
        require_n3(a.size(), "forward");
        return m() * a.values();
    }

    Tube inverse(Vector const& a_hat) const {
        require_n3(static_cast<std::size_t>(a_hat.size()), "inverse");
        return Tube(m_inv() * a_hat);
    }

    void require_n3(Tensor3 const& a, char const* op) const { require_n3(a.n3(), op); }

    void require_n3(std::size_t n3, char const* op) const {
        if (n3 != this->n3())
            throw DimensionError(std::string(op) + ": tube length " + std::to_string(n3) +
                                 " does not match transform size " + std::to_string(this->n3()));
    }

    void require_orthogonal(char const* op) const {
        if (!is_orthogonal())
            throw NotOrthogonal(std::string(op) + ": requires an orthogonal transform (defect " +
                                std::to_string(transform_.ortho_defect()) + ")");
    }

private:
    OrthoTransform transform_;
};

/// Slices of A x_3 M, materialized as column-major matrices.
inline std::vector<Matrix> transformed_slices(StarMContext const& ctx, Tensor3 const& a) {
    Tensor3 const hat = ctx.forward(a);
    std::vector<Matrix> out(hat.n3());
    for (std::size_t k = 0; k < hat.n3(); ++k)
        out[k] = hat.slice(k);
    return out;
}

/// Inverse of transformed_slices: the spatial tensor whose transform has these slices.
inline Tensor3 from_transformed_slices(StarMContext const& ctx, std::span<const Matrix> slices) {
    return ctx.inverse(Tensor3::from_slices(slices));
}

/// C = A *M B via the transform domain: facewise product of A x_3 M and B x_3 M, pulled back by M^{-1}.
inline Tensor3 starm_product(StarMContext const& ctx, Tensor3 const& a, Tensor3 const& b) {
    ctx.require_n3(a, "starm_product");
    ctx.require_n3(b, "starm_product");
    if (a.n2() != b.n1())
        throw DimensionError("starm_product: " + a.extents() + " and " + b.extents() + " are not conformable");
    return ctx.inverse(facewise_product(ctx.forward(a), ctx.forward(b)));
}

inline Tube starm_product(StarMContext const& ctx, Tube const& a, Tube const& b) {
    Vector const prod = ctx.forward(a).cwiseProduct(ctx.forward(b));
    return ctx.inverse(prod);
}

/// e_M = tube(M^{-1} 1)
inline Tube identity_tube(StarMContext const& ctx) {
    return ctx.inverse(Vector::Ones(static_cast<Eigen::Index>(ctx.n3())));
}

/// I_M: e_M on the diagonal, zero tubes elsewhere.
inline Tensor3 identity_tensor(StarMContext const& ctx, std::size_t n) {
    Tube const e = identity_tube(ctx);
    return Tensor3::generate(n, n, ctx.n3(), [&](std::size_t i, std::size_t j, std::size_t k) {
        return i == j ? e[k] : 0.0;
    });
}

/// The matrix T with T vec(x) = vec(a *M x), i.e. M^{-1} diag(M vec(a)) M.
inline Matrix tube_mult_matrix(StarMContext const& ctx, Tube const& a) {
    return ctx.m_inv() * ctx.forward(a).asDiagonal() * ctx.m();
}

/// (I_n1 (x) M^{-1}) mat_M(A) (I_n2 (x) M): block (i, j) is the multiplication
/// matrix of tube a_ij. It maps the tube-stacked vectorization of X to that of
/// A *M X; for orthogonal M, M^{-1} = M^T.
inline Matrix matrix_representative(StarMContext const& ctx, Tensor3 const& a) {
    ctx.require_n3(a, "matrix_representative");
    auto const n3 = static_cast<Eigen::Index>(a.n3());
    Matrix out(static_cast<Eigen::Index>(a.n1()) * n3, static_cast<Eigen::Index>(a.n2()) * n3);
    for (std::size_t i = 0; i < a.n1(); ++i)
        for (std::size_t j = 0; j < a.n2(); ++j)
            out.block(static_cast<Eigen::Index>(i) * n3, static_cast<Eigen::Index>(j) * n3, n3, n3) =
                tube_mult_matrix(ctx, a.tube(i, j));
    return out;
}

struct SquareVerdict {
    std::optional<Tube> root;             ///< x with x *M x = a when a is a square
    std::optional<std::size_t> offending; ///< first transformed entry below -tol otherwise

    bool is_square() const noexcept { return root.has_value(); }
};

/// a is a square iff M vec(a) is entrywise nonnegative. Entries in [-tol, 0) are clamped to zero.
inline SquareVerdict is_square_tube(StarMContext const& ctx, Tube const& a, double tol = 1e-10) {
    Vector hat = ctx.forward(a);
    for (Eigen::Index k = 0; k < hat.size(); ++k) {
        if (hat[k] < -tol)
            return {std::nullopt, static_cast<std::size_t>(k)};
        hat[k] = std::sqrt(std::max(hat[k], 0.0));
    }
    return {ctx.inverse(hat), std::nullopt};
}

/// A = U *M S *M V^T with f-diagonal S.
struct StarMSVD {
    Tensor3 u;
    Tensor3 s;
    Tensor3 v;
    std::size_t rank = 0;
    std::vector<double> singular_tube_norms; ///< Euclidean norms of S_{i,i,:}, nonincreasing
};

inline constexpr double default_tube_tol = 1e-10;

namespace detail {

/// Counts tubes whose norm exceeds tube_tol times the first (largest) one.
inline std::size_t count_nonzero_tubes(std::span<const double> norms, double tube_tol) {
    if (norms.empty() || norms.front() == 0.0)
        return 0;
    return static_cast<std::size_t>(
        std::count_if(norms.begin(), norms.end(), [&](double v) { return v > tube_tol * norms.front(); }));
}

inline bool slice_is_symmetric_psd(Matrix const& s, Eigen::SelfAdjointEigenSolver<Matrix>& eig) {
    if (s.rows() != s.cols())
        return false;
    double const scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        return false;
    eig.compute(s);
    return eig.info() == Eigen::Success && eig.eigenvalues()[0] >= -1e-12 * scale;
}

} // namespace detail

/// Facewise SVD in the transform domain. Symmetric PSD slices use their
/// eigendecomposition so that U = V on those slices.
inline StarMSVD starm_svd(StarMContext const& ctx, Tensor3 const& a, double tube_tol = default_tube_tol,
                          std::size_t threads = 1) {
    ctx.require_orthogonal("starm_svd");
    ctx.require_n3(a, "starm_svd");
    auto const slices = transformed_slices(ctx, a);
    auto const n1 = static_cast<Eigen::Index>(a.n1());
    auto const n2 = static_cast<Eigen::Index>(a.n2());
    Eigen::Index const p = std::min(n1, n2);
    std::vector<Matrix> us(slices.size()), ss(slices.size()), vs(slices.size());
    parallel_for(slices.size(), threads, [&](std::size_t k) {
        Matrix const& s = slices[k];
        Eigen::SelfAdjointEigenSolver<Matrix> eig;
        ss[k] = Matrix::Zero(n1, n2);
        if (detail::slice_is_symmetric_psd(s, eig)) {
            // ascending eigenvalues -> descending singular values
            Matrix q = eig.eigenvectors().rowwise().reverse();
            Vector lam = eig.eigenvalues().reverse();
            for (Eigen::Index i = 0; i < p; ++i)
                ss[k](i, i) = std::max(lam[i], 0.0);
            us[k] = q;
            vs[k] = q;
        } else {
            Eigen::JacobiSVD<Matrix> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
            for (Eigen::Index i = 0; i < p; ++i)
                ss[k](i, i) = svd.singularValues()[i];
            us[k] = svd.matrixU();
            vs[k] = svd.matrixV();
        }
    });
    StarMSVD out{from_transformed_slices(ctx, us), from_transformed_slices(ctx, ss),
                 from_transformed_slices(ctx, vs), 0, {}};
    out.singular_tube_norms.resize(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        double sq = 0.0;
        for (auto const& s : ss)
            sq += s(i, i) * s(i, i);
        out.singular_tube_norms[static_cast<std::size_t>(i)] = std::sqrt(sq);
    }
    out.rank = detail::count_nonzero_tubes(out.singular_tube_norms, tube_tol);
    return out;
}

/// Number of singular tubes with norm above tube_tol times the largest one.
inline std::size_t starm_rank(StarMContext const& ctx, Tensor3 const& a, double tube_tol = default_tube_tol) {
    return starm_svd(ctx, a, tube_tol).rank;
}

/// Tube determinant via facewise determinants: M^{-1} (det A_hat_1, ..., det A_hat_n3).
inline Tube det_m(StarMContext const& ctx, Tensor3 const& a) {
    if (a.n1() != a.n2())
        throw DimensionError("det_M: tensor must be square in its first two modes, got " + a.extents());
    ctx.require_n3(a, "det_M");
    auto const slices = transformed_slices(ctx, a);
    Vector dets(static_cast<Eigen::Index>(slices.size()));
    for (std::size_t k = 0; k < slices.size(); ++k)
        dets[static_cast<Eigen::Index>(k)] = slices[k].partialPivLu().determinant();
    return ctx.inverse(dets);
}

/// Tube determinant as the signed permutation sum of *M products of tubes. Factorial cost; n <= 6.
inline Tube det_m_oracle(StarMContext const& ctx, Tensor3 const& a) {
    if (a.n1() != a.n2())
        throw DimensionError("det_M_oracle: tensor must be square in its first two modes, got " + a.extents());
    if (a.n1() > 6)
        throw InvalidArgument("det_M_oracle: permutation sum restricted to n <= 6");
    ctx.require_n3(a, "det_M_oracle");
    std::size_t const n = a.n1();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(a.n3()));
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (perm[i] > perm[j])
                    ++inversions;
        Tube term = a.tube(0, perm[0]);
        for (std::size_t i = 1; i < n; ++i)
            term = starm_product(ctx, term, a.tube(i, perm[i]));
        acc += (inversions % 2 == 0 ? 1.0 : -1.0) * term.values();
    } while (std::next_permutation(perm.begin(), perm.end()));
    return Tube(std::move(acc));
}

/// det_M of the subtensor on rows and columns J (0-based, strictly increasing).
inline Tube principal_minor(StarMContext const& ctx, Tensor3 const& a, std::span<const std::size_t> j) {
    if (a.n1() != a.n2())
        throw DimensionError("principal_minor: tensor must be square, got " + a.extents());
    if (j.empty())
        throw InvalidArgument("principal_minor: empty index set");
    for (std::size_t p = 0; p < j.size(); ++p) {
        if (j[p] >= a.n1())
            throw InvalidArgument("principal_minor: index " + std::to_string(j[p]) + " out of range");
        if (p > 0 && j[p] <= j[p - 1])
            throw InvalidArgument("principal_minor: indices must be strictly increasing");
    }
    return det_m(ctx, a.subtensor(j, j));
}

/// Q^T *M Q and Q *M Q^T both within tol of I_M (max-abs).
inline bool is_orthogonal_tensor(StarMContext const& ctx, Tensor3 const& q, double tol = 1e-8) {
    if (q.n1() != q.n2())
        return false;
    Tensor3 const id = identity_tensor(ctx, q.n1());
    Tensor3 const qt = facewise_transpose(q);
    return max_abs_diff(starm_product(ctx, qt, q), id) <= tol && max_abs_diff(starm_product(ctx, q, qt), id) <= tol;
}

/// Checks (a *M b) x_3 M = (a x_3 M) *I (b x_3 M) for a claimed product.
inline bool algebra_hom_check(StarMContext const& ctx, Tube const& a, Tube const& b, Tube const& product,
                              double tol = 1e-10) {
    Vector const lhs = ctx.forward(product);
    Vector const rhs = ctx.forward(a).cwiseProduct(ctx.forward(b));
    return (lhs - rhs).cwiseAbs().maxCoeff() <= tol * (1.0 + rhs.cwiseAbs().maxCoeff());
}

inline bool algebra_hom_check(StarMContext const& ctx, Tube const& a, Tube const& b, double tol = 1e-10) {
    return algebra_hom_check(ctx, a, b, starm_product(ctx, a, b), tol);
}

} // namespace tsdp
