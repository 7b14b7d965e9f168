#pragma once

// Membership in the *M-PSD cone and its equivalent characterizations:
// transformed slices, the nn3 x nn3 matrix representative, squares of
// principal minors, plus the square-root factorization and eigentube checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "algebra.hpp"
#include "random.hpp"

namespace tsdp {

inline constexpr double default_psd_tol = 1e-8;

/// (A + A^T) / 2 with the facewise transpose.
inline Tensor3 symmetrize(Tensor3 const& a) { return 0.5 * (a + facewise_transpose(a)); }

inline double symmetry_defect(Tensor3 const& a) {
    if (a.n1() != a.n2())
        throw DimensionError("symmetry_defect: tensor must be square, got " + a.extents());
    return max_abs_diff(a, facewise_transpose(a));
}

namespace detail {

inline void require_symmetric(Tensor3 const& a, double tol, char const* op) {
    if (a.n1() != a.n2())
        throw DimensionError(std::string(op) + ": tensor must be square, got " + a.extents());
    double const defect = symmetry_defect(a);
    if (defect > tol)
        throw PreconditionError(std::string(op) + ": tensor is not symmetric (defect " + std::to_string(defect) + ")");
}

inline double spectral_norm_symmetric(Vector const& eigenvalues) {
    return eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
}

} // namespace detail

struct PSDWitness {
    std::size_t slice;
    Vector eigenvector; ///< x with x^T A_hat_k x < 0
};

struct PSDVerdict {
    bool is_psd = false;
    std::vector<double> min_eigenvalue_per_slice;
    std::optional<PSDWitness> witness;
};

/// A symmetric tensor is *M-PSD iff every slice of A x_3 M is PSD. A slice
/// passes when its least eigenvalue is >= -tol * max(1, ||A_hat_k||_2).
inline PSDVerdict is_psd(StarMContext const& ctx, Tensor3 const& a, double tol = default_psd_tol) {
    ctx.require_orthogonal("is_psd");
    ctx.require_n3(a, "is_psd");
    detail::require_symmetric(a, tol, "is_psd");
    auto const slices = transformed_slices(ctx, a);
    PSDVerdict out;
    out.is_psd = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        Matrix const sym = 0.5 * (slices[k] + slices[k].transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
        double const lmin = eig.eigenvalues()[0];
        out.min_eigenvalue_per_slice.push_back(lmin);
        double const threshold = -tol * std::max(1.0, detail::spectral_norm_symmetric(eig.eigenvalues()));
        if (lmin < threshold) {
            out.is_psd = false;
            double const margin = lmin - threshold;
            if (!out.witness || margin < worst) {
                worst = margin;
                out.witness = PSDWitness{k, eig.eigenvectors().col(0)};
            }
        }
    }
    return out;
}

/// Spatial n x 1 x n3 tensor X with <X, A *M X> = x^T A_hat_k x < 0, built from a failure witness.
inline Tensor3 witness_tensor(StarMContext const& ctx, PSDWitness const& w) {
    auto const n = static_cast<std::size_t>(w.eigenvector.size());
    Tensor3 const hat = Tensor3::generate(n, 1, ctx.n3(), [&](std::size_t i, std::size_t, std::size_t k) {
        return k == w.slice ? w.eigenvector[static_cast<Eigen::Index>(i)] : 0.0;
    });
    return ctx.inverse(hat);
}

/// Eigenvalue test on the nn3 x nn3 matrix representative. Must agree with is_psd.
inline bool is_psd_via_matrix_rep(StarMContext const& ctx, Tensor3 const& a, double tol = default_psd_tol) {
    ctx.require_orthogonal("is_psd_via_matrix_rep");
    detail::require_symmetric(a, tol, "is_psd_via_matrix_rep");
    Matrix rep = matrix_representative(ctx, a);
    rep = 0.5 * (rep + rep.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(rep, Eigen::EigenvaluesOnly);
    double const scale = std::max(1.0, detail::spectral_norm_symmetric(eig.eigenvalues()));
    return eig.eigenvalues()[0] >= -tol * scale;
}

/// B with A = B *M B^T and r = rank_M(A) lateral slices, or no factor when r = 0.
struct PSDFactor {
    std::size_t rank = 0;
    std::optional<Tensor3> b;
};

/// Square root of a *M-PSD tensor: B = U *M D with D the square roots of the
/// eigenvalue tubes, truncated to the *M-rank.
inline PSDFactor psd_square_root(StarMContext const& ctx, Tensor3 const& a, double tol = default_psd_tol,
                                 double tube_tol = default_tube_tol) {
    auto const verdict = is_psd(ctx, a, tol);
    if (!verdict.is_psd)
        throw PreconditionError("psd_square_root: tensor is not *M-PSD (slice " +
                                std::to_string(verdict.witness->slice) + " has a negative eigenvalue)");
    auto const slices = transformed_slices(ctx, a);
    auto const n = static_cast<Eigen::Index>(a.n1());
    std::vector<Matrix> vectors(slices.size());
    std::vector<Vector> values(slices.size());
    std::vector<double> tube_norms(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < slices.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (slices[k] + slices[k].transpose()));
        vectors[k] = eig.eigenvectors().rowwise().reverse();
        values[k] = eig.eigenvalues().reverse().cwiseMax(0.0);
        for (Eigen::Index i = 0; i < n; ++i)
            tube_norms[static_cast<std::size_t>(i)] += values[k][i] * values[k][i];
    }
    for (auto& v : tube_norms)
        v = std::sqrt(v);
    PSDFactor out;
    out.rank = detail::count_nonzero_tubes(tube_norms, tube_tol);
    if (out.rank == 0)
        return out;
    auto const r = static_cast<Eigen::Index>(out.rank);
    std::vector<Matrix> b_hat(slices.size());
    for (std::size_t k = 0; k < slices.size(); ++k)
        b_hat[k] = vectors[k].leftCols(r) * values[k].head(r).cwiseSqrt().asDiagonal();
    out.b = from_transformed_slices(ctx, b_hat);
    return out;
}

struct MinorsReport {
    bool all_squares = true;
    std::size_t minors_checked = 0;
    std::vector<std::vector<std::size_t>> failing; ///< 0-based index sets J whose minor is not a square
};

inline constexpr std::size_t max_minors_order = 12;

/// Checks that det_M(A_{J,J}) is a square for every nonempty J. Equivalent to
/// *M-PSD for symmetric A; exponential in n.
inline MinorsReport minors_certificate(StarMContext const& ctx, Tensor3 const& a, double tol = default_psd_tol) {
    ctx.require_orthogonal("minors_certificate");
    detail::require_symmetric(a, tol, "minors_certificate");
    std::size_t const n = a.n1();
    if (n > max_minors_order)
        throw InvalidArgument("minors_certificate: n = " + std::to_string(n) + " exceeds the limit of " +
                              std::to_string(max_minors_order));
    double scale = 1.0;
    for (auto const& s : transformed_slices(ctx, a)) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
        scale = std::max(scale, detail::spectral_norm_symmetric(eig.eigenvalues()));
    }
    MinorsReport out;
    std::vector<std::size_t> j;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        j.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i))
                j.push_back(i);
        // A slice eigenvalue perturbed by -tol*scale moves an order-|J| minor by about that times scale^(|J|-1).
        double const minor_tol = tol * std::pow(scale, static_cast<double>(j.size()));
        ++out.minors_checked;
        if (!is_square_tube(ctx, principal_minor(ctx, a, j), minor_tol).is_square()) {
            out.all_squares = false;
            out.failing.push_back(j);
        }
    }
    return out;
}

struct EigentubeReport {
    bool satisfies = false;          ///< A *M X = lambda *M X within tol
    bool all_slices_nonzero = false; ///< every slice of X x_3 M has norm > tol
    bool lambda_is_square = false;
    bool implication_holds = true;   ///< PSD and satisfies and all nonzero => square
};

inline EigentubeReport eigentube_check(StarMContext const& ctx, Tensor3 const& a, Tube const& lambda,
                                       Tensor3 const& x, double tol = 1e-10) {
    if (x.n2() != 1 || x.n1() != a.n2())
        throw DimensionError("eigentube_check: X must be " + std::to_string(a.n2()) + "x1xn3, got " + x.extents());
    EigentubeReport out;
    Tensor3 const lhs = starm_product(ctx, a, x);
    Tensor3 const rhs = starm_product(ctx, x, Tensor3::from_tube(lambda));
    out.satisfies = max_abs_diff(lhs, rhs) <= tol * (1.0 + max_abs(rhs));
    Tensor3 const x_hat = ctx.forward(x);
    out.all_slices_nonzero = true;
    for (std::size_t k = 0; k < x_hat.n3(); ++k)
        if (x_hat.slice(k).norm() <= tol)
            out.all_slices_nonzero = false;
    out.lambda_is_square = is_square_tube(ctx, lambda, tol).is_square();
    bool const psd = a.n1() == a.n2() && ctx.is_orthogonal() && symmetry_defect(a) <= default_psd_tol &&
                     is_psd(ctx, a).is_psd;
    if (psd && out.satisfies && out.all_slices_nonzero)
        out.implication_holds = out.lambda_is_square;
    return out;
}

struct SamplingVerdict {
    bool member = true;
    std::optional<Tensor3> witness; ///< X with <X, A *M X> < 0
};

/// One-sided falsifier for <X, A *M X> >= 0. Tries the least eigenvector of
/// every transformed slice first, then `trials` Gaussian lateral slices.
inline SamplingVerdict cone_membership_random_quadratic(StarMContext const& ctx, Tensor3 const& a,
                                                        std::size_t trials, std::uint64_t seed = 0,
                                                        double tol = default_psd_tol) {
    ctx.require_orthogonal("cone_membership_random_quadratic");
    detail::require_symmetric(a, tol, "cone_membership_random_quadratic");
    std::size_t const n = a.n1();
    auto const slices = transformed_slices(ctx, a);
    double scale = 1.0;
    for (auto const& s : slices)
        scale = std::max(scale, s.norm());
    auto violates = [&](Tensor3 const& x) {
        double const q = inner_product(x, starm_product(ctx, a, x));
        return q < -tol * scale * inner_product(x, x);
    };
    for (std::size_t k = 0; k < slices.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (slices[k] + slices[k].transpose()));
        Tensor3 const x = witness_tensor(ctx, PSDWitness{k, eig.eigenvectors().col(0)});
        if (violates(x))
            return {false, x};
    }
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        Tensor3 const x = rng.normal_tensor(n, 1, ctx.n3());
        if (violates(x))
            return {false, x};
    }
    return {true, std::nullopt};
}

} // namespace tsdp
