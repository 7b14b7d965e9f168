#pragma once

// M-nuclear norm, computed directly and as an M-SDP, and tensor completion
// under tubal masks by one nuclear-norm SDP per transformed slice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "random.hpp"
#include "sdp.hpp"
#include "semidefinite.hpp"

namespace tsdp {

/// Sum over transformed slices of the matrix nuclear norm.
inline double m_nuclear_norm(StarMContext const& ctx, Tensor3 const& a) {
    ctx.require_orthogonal("m_nuclear_norm");
    double total = 0.0;
    for (auto const& s : transformed_slices(ctx, a))
        if (s.size() > 0)
            total += Eigen::JacobiSVD<Matrix>(s).singularValues().sum();
    return total;
}

namespace detail {

/// <E, X> = X(i, n1 + j) for symmetric X.
inline Matrix off_block_selector(std::size_t n1, std::size_t n2, std::size_t i, std::size_t j) {
    auto const n = static_cast<Eigen::Index>(n1 + n2);
    Matrix e = Matrix::Zero(n, n);
    auto const r = static_cast<Eigen::Index>(i);
    auto const c = static_cast<Eigen::Index>(n1 + j);
    e(r, c) = 0.5;
    e(c, r) = 0.5;
    return e;
}

} // namespace detail

/// min 1/2 <I, [W1 A; A^T W2]> over *M-PSD block tensors with the off-diagonal
/// block pinned to A. Every pin lives on one transformed slice, so the sliced
/// route applies.
inline SDPSolution<Tensor3> nuclear_norm_msdp(StarMContext const& ctx, Tensor3 const& a, SolverConfig const& cfg = {}) {
    ctx.require_orthogonal("nuclear_norm_via_msdp");
    ctx.require_n3(a, "nuclear_norm_via_msdp");
    std::size_t const n1 = a.n1();
    std::size_t const n2 = a.n2();
    std::size_t const n = n1 + n2;
    std::size_t const n3 = ctx.n3();
    MSDPProblem p{ctx, 0.5 * identity_tensor(ctx, n), {}, Sense::min};
    auto const a_hat = transformed_slices(ctx, a);
    for (std::size_t k = 0; k < n3; ++k)
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                std::vector<Matrix> slices(n3, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
                slices[k] = detail::off_block_selector(n1, n2, i, j);
                Tensor3 con = from_transformed_slices(ctx, slices);
                p.constraints.push_back({symmetrize(con), a_hat[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
            }
    return solve_msdp_sliced(p, cfg);
}

inline double nuclear_norm_via_msdp(StarMContext const& ctx, Tensor3 const& a, SolverConfig const& cfg = {}) {
    auto const sol = nuclear_norm_msdp(ctx, a, cfg);
    if (sol.status == SolveStatus::infeasible_suspected || sol.status == SolveStatus::unbounded_suspected)
        throw NumericalError("nuclear_norm_via_msdp: solver reported " + std::string(to_string(sol.status)));
    return sol.objective;
}

using TubalMask = std::vector<std::pair<std::size_t, std::size_t>>;

struct CompletionTask {
    Tensor3 y;
    TubalMask omega; ///< observed (i, j), 0-based
    OrthoTransform transform;
};

struct CompletionResult {
    Tensor3 a;
    double m_nuclear = 0.0;
    std::vector<SolveStatus> per_slice_status;
    std::vector<double> slice_objectives;
    std::optional<double> fit;        ///< relative max-norm error against the ground truth
    double constraint_residual = 0.0; ///< max |A_ijk - Y_ijk| over observed tubes
    std::size_t iterations = 0;       ///< largest per-slice iteration count
};

inline void validate_mask(TubalMask const& omega, std::size_t n1, std::size_t n2) {
    if (omega.empty())
        throw InvalidArgument("tubal mask is empty");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto const& [i, j] : omega) {
        if (i >= n1 || j >= n2)
            throw InvalidArgument("tubal mask entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                  ") is outside " + std::to_string(n1) + "x" + std::to_string(n2));
        if (!seen.emplace(i, j).second)
            throw InvalidArgument("tubal mask entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                  ") is repeated");
    }
}

/// ||A - Y||_max / ||Y||_max
inline double relative_error_max(Tensor3 const& a, Tensor3 const& y) {
    detail::require_same_extents(a, y, "relative_error_max");
    double const denom = max_abs(y);
    if (denom == 0.0)
        throw InvalidArgument("relative_error_max: reference tensor is zero");
    return max_abs_diff(a, y) / denom;
}

/// relative_error_max restricted to each frontal slice.
inline std::vector<double> per_slice_relative_error(Tensor3 const& a, Tensor3 const& y) {
    detail::require_same_extents(a, y, "per_slice_relative_error");
    std::vector<double> out;
    for (std::size_t k = 0; k < y.n3(); ++k) {
        Matrix const yk = y.slice(k);
        double const denom = yk.cwiseAbs().maxCoeff();
        if (denom == 0.0)
            throw InvalidArgument("per_slice_relative_error: slice " + std::to_string(k + 1) + " of the reference is zero");
        out.push_back((Matrix(a.slice(k)) - yk).cwiseAbs().maxCoeff() / denom);
    }
    return out;
}

inline CompletionResult complete_tensor(CompletionTask const& task, SolverConfig const& cfg = {},
                                        std::optional<Tensor3> const& truth = std::nullopt) {
    StarMContext const ctx(task.transform);
    ctx.require_orthogonal("complete_tensor");
    ctx.require_n3(task.y, "complete_tensor");
    std::size_t const n1 = task.y.n1();
    std::size_t const n2 = task.y.n2();
    std::size_t const n3 = ctx.n3();
    validate_mask(task.omega, n1, n2);
    if (truth)
        detail::require_same_extents(*truth, task.y, "complete_tensor");

    std::vector<Vector> observed_hat;
    observed_hat.reserve(task.omega.size());
    for (auto const& [i, j] : task.omega)
        observed_hat.push_back(ctx.forward(task.y.tube(i, j)));

    auto const n = static_cast<Eigen::Index>(n1 + n2);
    std::vector<SDPSolution<Matrix>> solutions(n3);
    parallel_for(n3, cfg.threads, [&](std::size_t k) {
        MatrixSDP p{n1 + n2, 0.5 * Matrix::Identity(n, n), {}, Sense::min};
        for (std::size_t t = 0; t < task.omega.size(); ++t) {
            auto const [i, j] = task.omega[t];
            p.constraints.push_back(
                {detail::off_block_selector(n1, n2, i, j), observed_hat[t][static_cast<Eigen::Index>(k)]});
        }
        solutions[k] = solve_matrix_sdp(p, cfg);
    });

    CompletionResult out{Tensor3::zeros(n1, n2, n3), 0.0, {}, {}, std::nullopt, 0.0, 0};
    std::vector<Matrix> a_hat(n3);
    for (std::size_t k = 0; k < n3; ++k) {
        a_hat[k] = solutions[k].x.topRightCorner(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2));
        out.per_slice_status.push_back(solutions[k].status);
        out.slice_objectives.push_back(solutions[k].objective);
        out.iterations = std::max(out.iterations, solutions[k].iterations);
    }
    out.a = from_transformed_slices(ctx, a_hat);
    for (auto const& [i, j] : task.omega)
        out.constraint_residual =
            std::max(out.constraint_residual, (out.a.tube(i, j).values() - task.y.tube(i, j).values()).cwiseAbs().maxCoeff());
    out.m_nuclear = m_nuclear_norm(ctx, out.a);
    if (truth)
        out.fit = relative_error_max(out.a, *truth);
    return out;
}

/// B *M C with Gaussian B (n1 x r x n3) and C (r x n2 x n3).
inline Tensor3 make_synthetic_low_rank(StarMContext const& ctx, std::size_t n1, std::size_t n2, std::size_t r,
                                       std::uint64_t seed) {
    if (n1 == 0 || n2 == 0)
        throw InvalidArgument("make_synthetic_low_rank: extents must be positive");
    if (r > std::min(n1, n2))
        throw InvalidArgument("make_synthetic_low_rank: rank " + std::to_string(r) + " exceeds min(n1, n2) = " +
                              std::to_string(std::min(n1, n2)));
    if (r == 0)
        return Tensor3::zeros(n1, n2, ctx.n3());
    Rng rng(seed);
    Tensor3 const b = rng.normal_tensor(n1, r, ctx.n3());
    Tensor3 const c = rng.normal_tensor(r, n2, ctx.n3());
    return starm_product(ctx, b, c);
}

/// `count` distinct tubes of an n1 x n2 grid chosen uniformly, in row-major order.
inline TubalMask random_tubal_mask(std::size_t n1, std::size_t n2, std::size_t count, std::uint64_t seed) {
    std::size_t const total = n1 * n2;
    if (count == 0 || count > total)
        throw InvalidArgument("random_tubal_mask: count must lie in [1, " + std::to_string(total) + "]");
    std::vector<std::size_t> idx(total);
    for (std::size_t t = 0; t < total; ++t)
        idx[t] = t;
    Rng rng(seed);
    for (std::size_t t = 0; t < count; ++t)
        std::swap(idx[t], idx[t + rng.index(total - t)]);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
    TubalMask out;
    for (std::size_t t = 0; t < count; ++t)
        out.emplace_back(idx[t] / n2, idx[t] % n2);
    return out;
}

} // namespace tsdp
