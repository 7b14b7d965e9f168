#pragma once

// M-SOS certificates for quadratic forms f(xi) = xi^T Q xi, where xi groups
// the N = m n3 variables into m tubes of length n3. The Gram matrix of a
// quadratic form is unique, so f is M-SOS exactly when every n3 x n3 block
// Q_ij is a tube multiplication matrix (M Q_ij M^T diagonal) and Q is PSD.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "equivariance.hpp"
#include "random.hpp"
#include "semidefinite.hpp"

namespace tsdp {

struct QuadraticForm {
    std::size_t m = 0;  ///< number of variable groups
    std::size_t n3 = 0; ///< group size
    Matrix gram;        ///< symmetric N x N, N = m n3

    std::size_t variables() const noexcept { return m * n3; }

    void validate() const {
        if (m == 0 || n3 == 0)
            throw InvalidArgument("QuadraticForm: m and n3 must be positive");
        auto const n = static_cast<Eigen::Index>(variables());
        if (gram.rows() != n || gram.cols() != n)
            throw DimensionError("QuadraticForm: Gram matrix must be " + std::to_string(n) + "x" + std::to_string(n));
        double const scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
        if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw PreconditionError("QuadraticForm: Gram matrix is not symmetric");
    }

    double operator()(std::span<const double> xi) const {
        if (xi.size() != variables())
            throw DimensionError("QuadraticForm: expected " + std::to_string(variables()) + " variables, got " +
                                 std::to_string(xi.size()));
        Eigen::Map<const Vector> v(xi.data(), static_cast<Eigen::Index>(xi.size()));
        return v.dot(gram * v);
    }
};

enum class MSOSFailureKind { off_diagonal, negative_eigenvalue };

struct MSOSFailure {
    MSOSFailureKind kind;
    std::size_t block_i = 0; ///< 0-based block indices (off_diagonal)
    std::size_t block_j = 0;
    double magnitude = 0.0; ///< largest |off-diagonal| of M Q_ij M^T, or the least eigenvalue of Q
};

struct MSOSVerdict {
    bool is_msos = false;
    std::optional<Tensor3> gram_tensor;
    std::optional<MSOSFailure> failure;
    std::optional<std::pair<std::size_t, std::size_t>> tube_outside_subspace; ///< msos_with_subspace only
};

/// f(x) = <X, Q *M X> with X = fold(x).
inline double evaluate_msos(StarMContext const& ctx, Tensor3 const& q, std::span<const double> x) {
    if (q.n1() != q.n2())
        throw DimensionError("evaluate_msos: Gram tensor must be square, got " + q.extents());
    ctx.require_n3(q, "evaluate_msos");
    if (x.size() != q.n1() * q.n3())
        throw DimensionError("evaluate_msos: expected " + std::to_string(q.n1() * q.n3()) + " variables, got " +
                             std::to_string(x.size()));
    Tensor3 const xt = fold(x, q.n3());
    return inner_product(xt, starm_product(ctx, q, xt));
}

/// Decides M-SOS for a quadratic form and, on success, returns its Gram tensor
/// with tubes q_ij = M^T diag(M Q_ij M^T).
inline MSOSVerdict msos_certify(StarMContext const& ctx, QuadraticForm const& f, double tol = 1e-8,
                                std::size_t verify_trials = 100, std::uint64_t seed = 0) {
    ctx.require_orthogonal("msos_certify");
    f.validate();
    ctx.require_n3(f.n3, "msos_certify");
    auto const n3 = static_cast<Eigen::Index>(f.n3);
    MSOSVerdict out;
    std::vector<Tube> tubes;
    double worst_excess = 0.0;
    for (std::size_t i = 0; i < f.m; ++i)
        for (std::size_t j = 0; j < f.m; ++j) {
            Matrix const block = f.gram.block(static_cast<Eigen::Index>(i) * n3, static_cast<Eigen::Index>(j) * n3, n3, n3);
            Matrix conj = ctx.m() * block * ctx.m().transpose();
            Vector const diag = conj.diagonal();
            conj.diagonal().setZero();
            double const off = conj.cwiseAbs().maxCoeff();
            double const allowed = tol * (1.0 + Eigen::JacobiSVD<Matrix>(block).singularValues()[0]);
            if (off > allowed && off - allowed > worst_excess) {
                worst_excess = off - allowed;
                out.failure = MSOSFailure{MSOSFailureKind::off_diagonal, i, j, off};
            }
            tubes.push_back(Tube(ctx.m().transpose() * diag));
        }
    if (out.failure)
        return out;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(f.gram, Eigen::EigenvaluesOnly);
    double const lmin = eig.eigenvalues()[0];
    double const scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (lmin < -tol * scale) {
        out.failure = MSOSFailure{MSOSFailureKind::negative_eigenvalue, 0, 0, lmin};
        return out;
    }
    Tensor3 q = Tensor3::from_tubes(f.m, f.m, tubes);
    Rng rng(seed);
    for (std::size_t t = 0; t < verify_trials; ++t) {
        Vector const x = rng.normal_vector(f.variables());
        std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
        double const direct = f(xs);
        double const via_tensor = evaluate_msos(ctx, q, xs);
        if (std::abs(direct - via_tensor) > 1e-8 * (1.0 + std::abs(direct)) * scale)
            throw NumericalError("msos_certify: Gram tensor does not reproduce the form (" + std::to_string(direct) +
                                 " vs " + std::to_string(via_tensor) + ")");
    }
    out.is_msos = true;
    out.gram_tensor = std::move(q);
    return out;
}

/// Randomized test of f((I_m (x) rho(g)) x) = f(x) for every generator.
inline bool check_invariance(GroupRep const& rep, QuadraticForm const& f, std::size_t trials = 16, double tol = 1e-9,
                             std::uint64_t seed = 0) {
    f.validate();
    if (rep.n3() != f.n3)
        throw DimensionError("check_invariance: representation acts on dimension " + std::to_string(rep.n3()) +
                             " but the form groups variables in blocks of " + std::to_string(f.n3));
    auto const n3 = static_cast<Eigen::Index>(f.n3);
    double const scale = std::max(1.0, f.gram.cwiseAbs().maxCoeff());
    Rng rng(seed);
    for (auto const& g : rep.generators())
        for (std::size_t t = 0; t < trials; ++t) {
            Vector const x = rng.normal_vector(f.variables());
            Vector gx(x.size());
            for (std::size_t b = 0; b < f.m; ++b)
                gx.segment(static_cast<Eigen::Index>(b) * n3, n3) = g * x.segment(static_cast<Eigen::Index>(b) * n3, n3);
            double const fx = x.dot(f.gram * x);
            double const fgx = gx.dot(f.gram * gx);
            if (std::abs(fx - fgx) > tol * scale * (1.0 + x.squaredNorm()))
                return false;
        }
    return true;
}

/// msos_certify plus the requirement that every Gram tube lies in W_rho.
inline MSOSVerdict msos_with_subspace(StarMContext const& ctx, QuadraticForm const& f, EquivariantSubspace const& w,
                                      double tol = 1e-8) {
    if (w.n3() != f.n3)
        throw DimensionError("msos_with_subspace: W_rho lives in R^" + std::to_string(w.n3()) + " but n3 = " +
                             std::to_string(f.n3));
    MSOSVerdict out = msos_certify(ctx, f, tol);
    if (!out.is_msos)
        return out;
    for (std::size_t i = 0; i < f.m; ++i)
        for (std::size_t j = 0; j < f.m; ++j)
            if (!tube_in_subspace(w, out.gram_tensor->tube(i, j), tol)) {
                out.is_msos = false;
                out.tube_outside_subspace = std::pair{i, j};
                return out;
            }
    return out;
}

} // namespace tsdp
