#pragma once

// Group representations acting on tubes: which multiplication maps T_a
// commute with rho(g), the subspace W_rho of such tubes, and the linear
// constraints that restrict an M-SDP variable to tubes in W_rho.
//
// All checks run over generators only. Diagonal and block-diagonal matrices
// are closed under products and inverses, and so is the commutant of a set of
// matrices, so a property verified on generators holds on the whole group.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "algebra.hpp"
#include "random.hpp"
#include "sdp.hpp"

namespace tsdp {

/// rho given by the images of a generating set.
class GroupRep {
public:
    explicit GroupRep(std::vector<Matrix> generators) : generators_(std::move(generators)) {
        if (generators_.empty())
            throw InvalidArgument("GroupRep: at least one generator is required");
        n3_ = static_cast<std::size_t>(generators_.front().rows());
        orthogonal_ = true;
        for (std::size_t g = 0; g < generators_.size(); ++g) {
            auto const& r = generators_[g];
            if (static_cast<std::size_t>(r.rows()) != n3_ || r.rows() != r.cols())
                throw DimensionError("GroupRep: generator " + std::to_string(g) + " is not " + std::to_string(n3_) +
                                     "x" + std::to_string(n3_));
            if (!verify_invertible(r).invertible)
                throw InvalidArgument("GroupRep: generator " + std::to_string(g) + " is singular");
            orthogonal_ = orthogonal_ && verify_orthogonal(r).orthogonal;
        }
    }

    std::size_t n3() const noexcept { return n3_; }
    std::vector<Matrix> const& generators() const noexcept { return generators_; }
    bool is_orthogonal() const noexcept { return orthogonal_; }

private:
    std::vector<Matrix> generators_;
    std::size_t n3_ = 0;
    bool orthogonal_ = false;
};

/// Block sizes d_1, ..., d_m of the symmetry-adapted basis. A real
/// two-dimensional block standing for a pair of complex irreducibles is one
/// entry d_i = 2.
struct IrrepDims {
    std::vector<std::size_t> dims;

    std::size_t total() const { return std::accumulate(dims.begin(), dims.end(), std::size_t{0}); }

    void validate(std::size_t n3) const {
        if (dims.empty() || std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end())
            throw InvalidArgument("IrrepDims: block sizes must be positive");
        if (total() != n3)
            throw InvalidArgument("IrrepDims: block sizes sum to " + std::to_string(total()) + ", expected " +
                                  std::to_string(n3));
    }
};

/// Orthonormal basis of W_rho, one tube per column.
struct EquivariantSubspace {
    Matrix basis;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(basis.cols()); }
    std::size_t n3() const noexcept { return static_cast<std::size_t>(basis.rows()); }
    Tube tube(std::size_t i) const { return Tube(basis.col(static_cast<Eigen::Index>(i))); }
    Matrix projector() const { return basis * basis.transpose(); }

    /// Orthonormal basis of the Euclidean orthogonal complement.
    Matrix complement() const {
        auto const n = basis.rows();
        if (basis.cols() == n)
            return Matrix(n, 0);
        Eigen::JacobiSVD<Matrix> svd(Matrix::Identity(n, n) - projector(), Eigen::ComputeFullU);
        return svd.matrixU().leftCols(n - basis.cols());
    }
};

struct EquivarianceReport {
    bool all_equivariant = true;
    std::vector<double> off_diagonal; ///< max off-diagonal |M rho(g) M^{-1}| per generator
};

namespace detail {

inline Matrix conjugate(Matrix const& m, Matrix const& r) { return m * r * m.inverse(); }

inline void require_rep_size(GroupRep const& rep, Matrix const& m, char const* op) {
    require_square(m, op);
    if (static_cast<std::size_t>(m.rows()) != rep.n3())
        throw DimensionError(std::string(op) + ": representation acts on dimension " + std::to_string(rep.n3()) +
                             " but M is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline std::vector<std::size_t> block_of(IrrepDims const& dims) {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < dims.dims.size(); ++b)
        out.insert(out.end(), dims.dims[b], b);
    return out;
}

} // namespace detail

/// Every T_a is rho-equivariant iff M rho(g) M^{-1} is diagonal for every generator g.
inline EquivarianceReport check_all_tubes_equivariant(GroupRep const& rep, Matrix const& m, double tol = 1e-8) {
    detail::require_rep_size(rep, m, "check_all_tubes_equivariant");
    EquivarianceReport out;
    for (auto const& r : rep.generators()) {
        Matrix c = detail::conjugate(m, r);
        double const scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        c.diagonal().setZero();
        double const off = c.cwiseAbs().maxCoeff();
        out.off_diagonal.push_back(off);
        if (off > tol * scale)
            out.all_equivariant = false;
    }
    return out;
}

/// Checks that every M rho(g) M^{-1} is block-diagonal with block sizes dims.
inline void validate_symmetry_adapted(GroupRep const& rep, Matrix const& m, IrrepDims const& dims,
                                      double tol = 1e-8) {
    detail::require_rep_size(rep, m, "validate_symmetry_adapted");
    dims.validate(rep.n3());
    auto const block = detail::block_of(dims);
    for (std::size_t g = 0; g < rep.generators().size(); ++g) {
        Matrix const c = detail::conjugate(m, rep.generators()[g]);
        double const scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j < c.cols(); ++j)
                if (block[static_cast<std::size_t>(i)] != block[static_cast<std::size_t>(j)] &&
                    std::abs(c(i, j)) > tol * scale)
                    throw PreconditionError("equivariant_subspace: M rho(g) M^-1 for generator " + std::to_string(g) +
                                            " is not block-diagonal with the given dims (entry " +
                                            std::to_string(i + 1) + "," + std::to_string(j + 1) + " = " +
                                            std::to_string(c(i, j)) + ")");
    }
}

/// W_rho = {a : M vec(a) = V c}, V the n3 x m matrix of stacked ones-vectors of
/// lengths d_1, ..., d_m, from the null space of [M | -V].
inline EquivariantSubspace equivariant_subspace(GroupRep const& rep, Matrix const& m, IrrepDims const& dims,
                                                double tol = 1e-10) {
    validate_symmetry_adapted(rep, m, dims);
    auto const n3 = m.rows();
    auto const blocks = static_cast<Eigen::Index>(dims.dims.size());
    Matrix v = Matrix::Zero(n3, blocks);
    auto const block = detail::block_of(dims);
    for (Eigen::Index i = 0; i < n3; ++i)
        v(i, static_cast<Eigen::Index>(block[static_cast<std::size_t>(i)])) = 1.0;
    Matrix aug(n3, n3 + blocks);
    aug << m, -v;
    Eigen::JacobiSVD<Matrix> svd(aug, Eigen::ComputeFullV);
    auto const& s = svd.singularValues();
    double const cutoff = tol * (s.size() > 0 ? s[0] : 0.0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s[rank] > cutoff)
        ++rank;
    Matrix const kernel = svd.matrixV().rightCols(aug.cols() - rank);
    Matrix const a_part = kernel.topRows(n3);
    Eigen::JacobiSVD<Matrix> orth(a_part, Eigen::ComputeThinU);
    auto const& so = orth.singularValues();
    Eigen::Index dim = 0;
    while (dim < so.size() && so[dim] > tol * std::max(1.0, so.size() > 0 ? so[0] : 0.0))
        ++dim;
    return EquivariantSubspace{orth.matrixU().leftCols(dim)};
}

/// ||a - proj_W(a)|| <= tol (1 + ||a||)
inline bool tube_in_subspace(EquivariantSubspace const& w, Tube const& a, double tol = 1e-8) {
    if (a.size() != w.n3())
        throw DimensionError("tube_in_subspace: tube length " + std::to_string(a.size()) + " but W_rho lives in R^" +
                             std::to_string(w.n3()));
    Vector const residual = a.values() - w.basis * (w.basis.transpose() * a.values());
    return residual.norm() <= tol * (1.0 + a.norm());
}

/// Direct test of a *M (rho(g) x) = rho(g) (a *M x) on random tubes x.
inline bool verify_tube_equivariance(GroupRep const& rep, StarMContext const& ctx, Tube const& a,
                                     std::size_t trials = 8, double tol = 1e-9, std::uint64_t seed = 0) {
    if (rep.n3() != ctx.n3() || a.size() != ctx.n3())
        throw DimensionError("verify_tube_equivariance: representation, transform and tube sizes differ");
    Matrix const t = tube_mult_matrix(ctx, a);
    double const scale = 1.0 + t.norm();
    Rng rng(seed);
    for (auto const& r : rep.generators())
        for (std::size_t trial = 0; trial < trials; ++trial) {
            Tube const x(rng.normal_vector(ctx.n3()));
            Vector const lhs = starm_product(ctx, a, Tube(r * x.values())).values();
            Vector const rhs = r * starm_product(ctx, a, x).values();
            if ((lhs - rhs).norm() > tol * scale * (1.0 + r.norm()) * x.norm())
                return false;
        }
    return true;
}

/// Constraints <A, X> = 0 forcing every tube of a symmetric n x n x n3 tensor X
/// into W_rho: one per position i <= j and per basis vector of W_rho's complement.
inline std::vector<TensorConstraint> invariant_constraints(EquivariantSubspace const& w, std::size_t n) {
    if (n == 0)
        throw InvalidArgument("invariant_constraints: n must be positive");
    Matrix const perp = w.complement();
    std::vector<TensorConstraint> out;
    std::size_t const n3 = w.n3();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            for (Eigen::Index c = 0; c < perp.cols(); ++c) {
                double const weight = i == j ? 1.0 : 0.5;
                auto a = Tensor3::generate(n, n, n3, [&](std::size_t r, std::size_t s, std::size_t k) {
                    bool const hit = (r == i && s == j) || (r == j && s == i);
                    return hit ? weight * perp(static_cast<Eigen::Index>(k), c) : 0.0;
                });
                out.push_back({std::move(a), 0.0});
            }
    return out;
}

/// (I_n (x) rho(g))^T rep(X) (I_n (x) rho(g)) = rep(X) for every generator.
inline bool verify_invariant_msdp(GroupRep const& rep, StarMContext const& ctx, Tensor3 const& x, double tol = 1e-8) {
    if (rep.n3() != ctx.n3())
        throw DimensionError("verify_invariant_msdp: representation and transform sizes differ");
    Matrix const r = matrix_representative(ctx, x);
    auto const n3 = static_cast<Eigen::Index>(ctx.n3());
    double const scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    for (auto const& g : rep.generators()) {
        for (Eigen::Index bi = 0; bi < static_cast<Eigen::Index>(x.n1()); ++bi)
            for (Eigen::Index bj = 0; bj < static_cast<Eigen::Index>(x.n2()); ++bj) {
                auto const block = r.block(bi * n3, bj * n3, n3, n3);
                if ((g.transpose() * block * g - block).cwiseAbs().maxCoeff() > tol * scale)
                    return false;
            }
    }
    return true;
}

} // namespace tsdp
