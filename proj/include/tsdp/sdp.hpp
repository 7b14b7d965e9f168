#pragma once

// Semidefinite programming.
//
// solve_matrix_sdp handles one matrix variable; solve_msdp_general and
// solve_msdp_sliced handle M-SDPs over *M-PSD tensors. All three share one
// first-order engine working on block-diagonal variables:
//
//   minimize <C, X>  s.t.  <A_l, X> = b_l,  X = diag(X_1, ..., X_p) PSD
//
// solved by ADMM on the splitting X (affine) = Z (PSD cone):
//
//   X <- projection of Z - U - C/rho onto {A x = b}   (cached Cholesky of A A^T)
//   Z <- PSD projection of  alpha X + (1 - alpha) Z + U  (eigenvalue clamping per block)
//   U <- U + alpha X + (1 - alpha) Z_old - Z
//
// The multiplier of the affine step gives the dual y, and S = -rho U is an
// exactly PSD dual slack, so residuals and the duality gap are measured on an
// exactly PSD primal/dual pair.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "algebra.hpp"
#include "parallel.hpp"

namespace tsdp {

enum class Sense { max, min };

enum class SolveStatus { optimal, max_iters, infeasible_suspected, unbounded_suspected };

inline std::string_view to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible_suspected: return "infeasible_suspected";
    case SolveStatus::unbounded_suspected: return "unbounded_suspected";
    }
    return "unknown";
}

inline std::string_view to_string(Sense s) { return s == Sense::max ? "max" : "min"; }

/// Worst of two statuses: infeasible > unbounded > max_iters > optimal.
inline SolveStatus worse(SolveStatus a, SolveStatus b) {
    auto rank = [](SolveStatus s) {
        switch (s) {
        case SolveStatus::optimal: return 0;
        case SolveStatus::max_iters: return 1;
        case SolveStatus::unbounded_suspected: return 2;
        case SolveStatus::infeasible_suspected: return 3;
        }
        return 3;
    };
    return rank(a) >= rank(b) ? a : b;
}

struct SolverConfig {
    double eps_rel = 1e-6;
    double eps_abs = 1e-8;
    std::size_t max_iters = 50000;
    double over_relaxation = 1.5; ///< alpha in (0, 2)
    bool scaling = true;          ///< Ruiz equilibration plus row/cost normalization
    double rho = 1.0;             ///< initial penalty
    bool adaptive_rho = true;
    std::size_t check_every = 10;
    std::size_t threads = 1; ///< used by the sliced M-SDP route

    void validate() const {
        if (!(eps_rel > 0.0) || !(eps_abs > 0.0))
            throw InvalidArgument("SolverConfig: tolerances must be positive");
        if (!(over_relaxation > 0.0 && over_relaxation < 2.0))
            throw InvalidArgument("SolverConfig: over_relaxation must lie in (0, 2)");
        if (!(rho > 0.0))
            throw InvalidArgument("SolverConfig: rho must be positive");
        if (max_iters == 0 || check_every == 0)
            throw InvalidArgument("SolverConfig: max_iters and check_every must be positive");
    }
};

/// Relative residuals of a returned iterate.
struct Residuals {
    double primal = std::numeric_limits<double>::infinity(); ///< max_l |<A_l,X> - b_l| / (1 + |b_l|)
    double dual = std::numeric_limits<double>::infinity();   ///< ||C - sum y_l A_l - S||_F / (1 + ||C||_F)
    double gap = std::numeric_limits<double>::infinity();    ///< |p - d| / (1 + |p| + |d|)
};

template <typename X>
struct SDPSolution {
    SDPSolution() = default;
    explicit SDPSolution(X primal) : x(std::move(primal)) {}

    X x;
    double objective = 0.0;
    double dual_objective = 0.0;
    SolveStatus status = SolveStatus::max_iters;
    Residuals residuals;
    std::size_t iterations = 0;
    std::vector<SolveStatus> slice_status; ///< per-slice statuses for the sliced route
};

struct MatrixConstraint {
    Matrix a;
    double b = 0.0;
};

struct MatrixSDP {
    std::size_t dim = 0;
    Matrix cost;
    std::vector<MatrixConstraint> constraints;
    Sense sense = Sense::max;
};

struct TensorConstraint {
    Tensor3 a;
    double b = 0.0;
};

struct MSDPProblem {
    StarMContext ctx;
    Tensor3 cost;
    std::vector<TensorConstraint> constraints;
    Sense sense = Sense::max;
};

namespace detail {

inline bool is_symmetric(Matrix const& m, double tol = 1e-12) {
    if (m.rows() != m.cols())
        return false;
    double const scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline Eigen::Index svec_size(Eigen::Index d) { return d * (d + 1) / 2; }

/// Packs the upper triangle column by column, off-diagonal entries times sqrt 2,
/// so that svec(A) . svec(B) = <A, B> for symmetric A, B.
inline void svec_into(Matrix const& m, double* out) {
    double const r2 = std::sqrt(2.0);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
            out[p++] = i == j ? m(i, j) : r2 * 0.5 * (m(i, j) + m(j, i));
}

inline Matrix smat(double const* v, Eigen::Index d) {
    double const r2 = std::sqrt(2.0);
    Matrix m(d, d);
    Eigen::Index p = 0;
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
            double const x = v[p++];
            if (i == j)
                m(i, i) = x;
            else
                m(i, j) = m(j, i) = x / r2;
        }
    return m;
}

/// A constraint row touching a subset of the blocks.
struct BlockRow {
    std::vector<std::pair<std::size_t, Matrix>> parts;
    double b = 0.0;
};

/// minimize sum_k <C_k, X_k> s.t. sum_k <A_lk, X_k> = b_l, every X_k PSD.
struct BlockSDP {
    std::vector<Eigen::Index> dims;
    std::vector<Matrix> cost;
    std::vector<BlockRow> rows;
};

struct BlockSolution {
    std::vector<Matrix> z;
    double objective = 0.0; ///< min-sense <C, Z>
    double dual_objective = 0.0;
    SolveStatus status = SolveStatus::max_iters;
    Residuals residuals;
    std::size_t iterations = 0;
};

class BlockLayout {
public:
    explicit BlockLayout(std::vector<Eigen::Index> dims) : dims_(std::move(dims)) {
        offsets_.push_back(0);
        for (auto d : dims_)
            offsets_.push_back(offsets_.back() + svec_size(d));
    }

    Eigen::Index total() const { return offsets_.back(); }
    std::size_t blocks() const { return dims_.size(); }
    Eigen::Index dim(std::size_t k) const { return dims_[k]; }
    Eigen::Index offset(std::size_t k) const { return offsets_[k]; }

    Vector pack(std::vector<Matrix> const& blocks) const {
        Vector v(total());
        for (std::size_t k = 0; k < blocks.size(); ++k)
            svec_into(blocks[k], v.data() + offsets_[k]);
        return v;
    }

    std::vector<Matrix> unpack(Vector const& v) const {
        std::vector<Matrix> out(dims_.size());
        for (std::size_t k = 0; k < dims_.size(); ++k)
            out[k] = smat(v.data() + offsets_[k], dims_[k]);
        return out;
    }

    Vector pack_row(BlockRow const& row) const {
        Vector v = Vector::Zero(total());
        for (auto const& [k, a] : row.parts)
            svec_into(a, v.data() + offsets_[k]);
        return v;
    }

private:
    std::vector<Eigen::Index> dims_;
    std::vector<Eigen::Index> offsets_;
};

inline Vector project_psd_packed(BlockLayout const& layout, Vector const& v) {
    Vector out(v.size());
    for (std::size_t k = 0; k < layout.blocks(); ++k) {
        Eigen::Index const d = layout.dim(k);
        if (d == 0)
            continue;
        Matrix const m = smat(v.data() + layout.offset(k), d);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
        Vector const lam = eig.eigenvalues().cwiseMax(0.0);
        Matrix const p = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
        svec_into(p, out.data() + layout.offset(k));
    }
    return out;
}

inline double min_eigenvalue_packed(BlockLayout const& layout, Vector const& v) {
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < layout.blocks(); ++k) {
        if (layout.dim(k) == 0)
            continue;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(smat(v.data() + layout.offset(k), layout.dim(k)),
                                                  Eigen::EigenvaluesOnly);
        lmin = std::min(lmin, eig.eigenvalues()[0]);
    }
    return lmin;
}

/// Symmetric diagonal (Ruiz) equilibration per block: X = D X' D.
inline std::vector<Vector> ruiz_scaling(BlockSDP const& p, int passes = 10) {
    std::vector<Vector> d(p.dims.size());
    for (std::size_t k = 0; k < p.dims.size(); ++k)
        d[k] = Vector::Ones(p.dims[k]);
    for (int pass = 0; pass < passes; ++pass) {
        bool changed = false;
        for (std::size_t k = 0; k < p.dims.size(); ++k) {
            Vector rowmax = Vector::Zero(p.dims[k]);
            auto accumulate = [&](Matrix const& m) {
                Matrix const scaled = d[k].asDiagonal() * m * d[k].asDiagonal();
                rowmax = rowmax.cwiseMax(scaled.cwiseAbs().rowwise().maxCoeff());
            };
            accumulate(p.cost[k]);
            for (auto const& row : p.rows)
                for (auto const& [blk, a] : row.parts)
                    if (blk == k)
                        accumulate(a);
            for (Eigen::Index i = 0; i < p.dims[k]; ++i) {
                if (rowmax[i] <= 0.0)
                    continue;
                double const f = 1.0 / std::sqrt(rowmax[i]);
                if (std::abs(f - 1.0) > 0.05)
                    changed = true;
                d[k][i] = std::clamp(d[k][i] * f, 1e-4, 1e4);
            }
        }
        if (!changed)
            break;
    }
    return d;
}

/// Drops linearly dependent rows; flags rows whose b contradicts the kept ones.
struct Presolve {
    std::vector<std::size_t> kept;
    bool inconsistent = false;
};

inline Presolve presolve_rows(Matrix const& a, Vector const& b) {
    Presolve out;
    if (a.rows() == 0)
        return out;
    Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
    double const scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    qr.setThreshold(1e-10 * scale * std::sqrt(static_cast<double>(a.cols())) / scale);
    Eigen::Index const rank = qr.rank();
    auto const& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < rank; ++i)
        out.kept.push_back(static_cast<std::size_t>(perm[i]));
    std::sort(out.kept.begin(), out.kept.end());
    if (static_cast<Eigen::Index>(out.kept.size()) == a.rows())
        return out;
    Matrix ak(static_cast<Eigen::Index>(out.kept.size()), a.cols());
    Vector bk(static_cast<Eigen::Index>(out.kept.size()));
    for (std::size_t i = 0; i < out.kept.size(); ++i) {
        ak.row(static_cast<Eigen::Index>(i)) = a.row(static_cast<Eigen::Index>(out.kept[i]));
        bk[static_cast<Eigen::Index>(i)] = b[static_cast<Eigen::Index>(out.kept[i])];
    }
    Eigen::ColPivHouseholderQR<Matrix> kept_qr(ak.transpose());
    for (Eigen::Index l = 0; l < a.rows(); ++l) {
        if (std::binary_search(out.kept.begin(), out.kept.end(), static_cast<std::size_t>(l)))
            continue;
        Vector const w = out.kept.empty() ? Vector() : Vector(kept_qr.solve(Vector(a.row(l).transpose())));
        double const implied = out.kept.empty() ? 0.0 : w.dot(bk);
        if (std::abs(implied - b[l]) > 1e-8 * (1.0 + std::abs(b[l])))
            out.inconsistent = true;
    }
    return out;
}

inline double residual_score(Residuals const& r) { return std::max({r.primal, r.dual, r.gap}); }

/// The ADMM engine. Cost and constraints are in min sense.
inline BlockSolution solve_block_sdp(BlockSDP const& problem, SolverConfig const& cfg) {
    cfg.validate();
    BlockLayout const layout(problem.dims);
    auto const nrows = static_cast<Eigen::Index>(problem.rows.size());
    BlockSolution out;

    // Original data, packed, for residual reporting.
    Vector const c0 = layout.pack(problem.cost);
    Matrix a0(nrows, layout.total());
    Vector b0(nrows);
    for (Eigen::Index l = 0; l < nrows; ++l) {
        a0.row(l) = layout.pack_row(problem.rows[static_cast<std::size_t>(l)]).transpose();
        b0[l] = problem.rows[static_cast<std::size_t>(l)].b;
    }
    double const c0_norm = c0.norm();

    auto zero_solution = [&](SolveStatus status) {
        out.z.clear();
        for (auto d : problem.dims)
            out.z.push_back(Matrix::Zero(d, d));
        out.status = status;
        return out;
    };

    Presolve const pre = presolve_rows(a0, b0);
    if (pre.inconsistent)
        return zero_solution(SolveStatus::infeasible_suspected);

    if (pre.kept.empty()) {
        // No (independent) constraints: X = 0 is optimal iff C is PSD, otherwise unbounded below.
        for (std::size_t l = 0; l < static_cast<std::size_t>(nrows); ++l)
            if (std::abs(b0[static_cast<Eigen::Index>(l)]) > 1e-12)
                return zero_solution(SolveStatus::infeasible_suspected);
        double const lmin = min_eigenvalue_packed(layout, c0);
        bool const bounded = !(lmin < -cfg.eps_abs * std::max(1.0, c0_norm));
        zero_solution(bounded ? SolveStatus::optimal : SolveStatus::unbounded_suspected);
        out.objective = bounded ? 0.0 : -std::numeric_limits<double>::infinity();
        out.residuals = bounded ? Residuals{0.0, 0.0, 0.0} : Residuals{};
        return out;
    }

    // Scaled problem: X = D X' D, rows divided by their norms, cost divided by sigma_c.
    std::vector<Vector> d(problem.dims.size());
    for (std::size_t k = 0; k < problem.dims.size(); ++k)
        d[k] = Vector::Ones(problem.dims[k]);
    if (cfg.scaling)
        d = ruiz_scaling(problem);
    auto congruence = [&](std::size_t k, Matrix const& m) -> Matrix {
        return d[k].asDiagonal() * m * d[k].asDiagonal();
    };
    std::vector<Matrix> cost_s(problem.cost.size());
    for (std::size_t k = 0; k < problem.cost.size(); ++k)
        cost_s[k] = congruence(k, problem.cost[k]);
    Vector c = layout.pack(cost_s);
    double sigma_c = 1.0;
    if (cfg.scaling && c.norm() > 0.0)
        sigma_c = c.norm();
    c /= sigma_c;

    auto const m = static_cast<Eigen::Index>(pre.kept.size());
    Matrix a(m, layout.total());
    Vector b(m);
    Vector row_scale(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        BlockRow row = problem.rows[pre.kept[static_cast<std::size_t>(i)]];
        for (auto& [k, part] : row.parts)
            part = congruence(k, part);
        a.row(i) = layout.pack_row(row).transpose();
        double const nrm = cfg.scaling ? a.row(i).norm() : 1.0;
        row_scale[i] = nrm > 0.0 ? nrm : 1.0;
        a.row(i) /= row_scale[i];
        b[i] = row.b / row_scale[i];
    }
    Eigen::LLT<Matrix> const kkt(a * a.transpose());
    if (kkt.info() != Eigen::Success)
        throw NumericalError("solve_block_sdp: constraint Gram matrix is not positive definite after presolve");

    // Unscaling maps.
    auto unscale_primal = [&](Vector const& v) {
        auto blocks = layout.unpack(v);
        for (std::size_t k = 0; k < blocks.size(); ++k)
            blocks[k] = congruence(k, blocks[k]);
        return blocks;
    };
    auto unscale_slack = [&](Vector const& v) {
        auto blocks = layout.unpack(v);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            Vector const inv = d[k].cwiseInverse();
            blocks[k] = sigma_c * (inv.asDiagonal() * blocks[k] * inv.asDiagonal());
        }
        return blocks;
    };
    // y over all original rows (dropped rows get 0).
    auto unscale_dual = [&](Vector const& nu) {
        Vector y = Vector::Zero(nrows);
        for (Eigen::Index i = 0; i < m; ++i)
            y[static_cast<Eigen::Index>(pre.kept[static_cast<std::size_t>(i)])] = sigma_c * nu[i] / row_scale[i];
        return y;
    };

    struct Evaluation {
        Residuals r;
        double pobj = 0.0;
        double dobj = 0.0;
        std::vector<Matrix> z;
        Vector y;
    };
    auto evaluate = [&](Vector const& z_s, Vector const& u_s, Vector const& nu, double rho) {
        Evaluation e;
        e.z = unscale_primal(z_s);
        Vector const z = layout.pack(e.z);
        Vector const s = layout.pack(unscale_slack(-rho * u_s));
        e.y = unscale_dual(nu);
        Vector const az = a0 * z;
        e.r.primal = 0.0;
        for (Eigen::Index l = 0; l < nrows; ++l)
            e.r.primal = std::max(e.r.primal, std::abs(az[l] - b0[l]) / (1.0 + std::abs(b0[l])));
        e.r.dual = (c0 - a0.transpose() * e.y - s).norm() / (1.0 + c0_norm);
        e.pobj = c0.dot(z);
        e.dobj = b0.dot(e.y);
        e.r.gap = std::abs(e.pobj - e.dobj) / (1.0 + std::abs(e.pobj) + std::abs(e.dobj));
        return e;
    };
    auto converged = [&](Residuals const& r) {
        return r.primal <= cfg.eps_rel && r.dual <= cfg.eps_rel && r.gap <= cfg.eps_rel;
    };

    double rho = cfg.rho;
    double const alpha = cfg.over_relaxation;
    Vector z = Vector::Zero(layout.total());
    Vector u = Vector::Zero(layout.total());
    Vector nu = Vector::Zero(m);

    Evaluation best;
    double best_score = std::numeric_limits<double>::infinity();

    // Certificate tracking for infeasibility / unboundedness.
    std::size_t const window = 500;
    Vector nu_mark = nu;
    Vector z_mark = z;

    std::size_t it = 0;
    for (it = 1; it <= cfg.max_iters; ++it) {
        Vector const v = z - u - c / rho;
        Vector const lambda = kkt.solve(b - a * v);
        Vector const x = v + a.transpose() * lambda;
        nu = rho * lambda;
        Vector const x_relaxed = alpha * x + (1.0 - alpha) * z;
        Vector const z_old = z;
        z = project_psd_packed(layout, x_relaxed + u);
        u += x_relaxed - z;

        if (it % cfg.check_every != 0 && it != cfg.max_iters)
            continue;

        Evaluation e = evaluate(z, u, nu, rho);
        double const score = residual_score(e.r);
        if (score < best_score) {
            best_score = score;
            best = e;
        }
        if (converged(e.r)) {
            best = std::move(e);
            out.status = SolveStatus::optimal;
            break;
        }

        if (it % window == 0 && it >= 2 * window) {
            // Growth directions of y and Z over the last window.
            Vector const dnu = nu - nu_mark;
            Vector const dz = z - z_mark;
            double const ynorm = e.y.norm();
            if (ynorm > 1e4 * (1.0 + c0_norm) && dnu.norm() > 0.0) {
                // Primal infeasibility: direction dy with -A^T dy PSD and b^T dy > 0.
                Vector const dy = unscale_dual(dnu).normalized();
                Vector const slack = -(a0.transpose() * dy);
                double const lmin = min_eigenvalue_packed(layout, slack);
                if (lmin >= -1e-4 * std::max(1.0, slack.norm()) && b0.dot(dy) > 1e-6)
                    return zero_solution(SolveStatus::infeasible_suspected);
            }
            double const znorm = z.norm();
            if (znorm > 1e4 * (1.0 + b0.norm()) && dz.norm() > 0.0) {
                // Dual infeasibility: direction dZ PSD with A dZ = 0 and <C, dZ> < 0.
                Vector const dir = layout.pack(unscale_primal(dz)).normalized();
                if ((a0 * dir).cwiseAbs().maxCoeff() <= 1e-4 && c0.dot(dir) < -1e-6 * std::max(1.0, c0_norm) &&
                    min_eigenvalue_packed(layout, dir) >= -1e-4) {
                    out.z = unscale_primal(z);
                    out.status = SolveStatus::unbounded_suspected;
                    out.objective = -std::numeric_limits<double>::infinity();
                    out.iterations = it;
                    return out;
                }
            }
            nu_mark = nu;
            z_mark = z;
        }

        if (cfg.adaptive_rho && it % 50 == 0) {
            double const ratio = std::sqrt(std::max(e.r.primal, 1e-16) / std::max(e.r.dual, 1e-16));
            if (ratio > 5.0 || ratio < 0.2) {
                double const new_rho = std::clamp(rho * ratio, 1e-6, 1e6);
                u *= rho / new_rho;
                rho = new_rho;
            }
        }
    }

    out.iterations = std::min(it, cfg.max_iters);
    if (out.status != SolveStatus::optimal)
        out.status = SolveStatus::max_iters;
    out.z = std::move(best.z);
    out.objective = best.pobj;
    out.dual_objective = best.dobj;
    out.residuals = best.r;
    return out;
}

inline double symmetry_scale_tol(Matrix const& m) { return 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()); }

} // namespace detail

/// Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues to zero.
inline Matrix project_psd(Matrix const& s) {
    if (!detail::is_symmetric(s, 1e-10))
        throw PreconditionError("project_psd: input is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
}

inline void validate(MatrixSDP const& p) {
    auto const n = static_cast<Eigen::Index>(p.dim);
    if (n == 0)
        throw InvalidArgument("MatrixSDP: dimension must be positive");
    if (p.cost.rows() != n || p.cost.cols() != n)
        throw DimensionError("MatrixSDP: cost must be " + std::to_string(n) + "x" + std::to_string(n));
    if (!detail::is_symmetric(p.cost))
        throw PreconditionError("MatrixSDP: cost is not symmetric");
    for (std::size_t l = 0; l < p.constraints.size(); ++l) {
        auto const& a = p.constraints[l].a;
        if (a.rows() != n || a.cols() != n)
            throw DimensionError("MatrixSDP: constraint " + std::to_string(l) + " has the wrong shape");
        if (!detail::is_symmetric(a))
            throw PreconditionError("MatrixSDP: constraint " + std::to_string(l) + " is not symmetric");
        if (!std::isfinite(p.constraints[l].b))
            throw InvalidArgument("MatrixSDP: constraint " + std::to_string(l) + " has a non-finite right-hand side");
    }
}

namespace detail {

inline SDPSolution<Matrix> finish_matrix(BlockSolution&& s, Sense sense) {
    SDPSolution<Matrix> out;
    out.x = std::move(s.z.front());
    double const sign = sense == Sense::max ? -1.0 : 1.0;
    out.objective = sign * s.objective;
    out.dual_objective = sign * s.dual_objective;
    out.status = s.status;
    out.residuals = s.residuals;
    out.iterations = s.iterations;
    return out;
}

inline BlockSDP to_block(MatrixSDP const& p) {
    double const sign = p.sense == Sense::max ? -1.0 : 1.0;
    BlockSDP bp;
    bp.dims = {static_cast<Eigen::Index>(p.dim)};
    bp.cost = {sign * p.cost};
    for (auto const& con : p.constraints)
        bp.rows.push_back(BlockRow{{{0, con.a}}, con.b});
    return bp;
}

} // namespace detail

/// Solves max/min <C, X> s.t. <A_l, X> = b_l, X PSD.
inline SDPSolution<Matrix> solve_matrix_sdp(MatrixSDP const& p, SolverConfig const& cfg = {}) {
    validate(p);
    return detail::finish_matrix(detail::solve_block_sdp(detail::to_block(p), cfg), p.sense);
}

inline void validate(MSDPProblem const& p) {
    p.ctx.require_orthogonal("M-SDP");
    auto const check = [&](Tensor3 const& t, std::string const& what) {
        if (t.n1() != p.cost.n1() || t.n2() != p.cost.n1() || t.n3() != p.ctx.n3())
            throw DimensionError("M-SDP: " + what + " has extents " + t.extents());
        double const tol = 1e-12 * std::max(1.0, max_abs(t));
        if (max_abs_diff(t, facewise_transpose(t)) > tol)
            throw PreconditionError("M-SDP: " + what + " is not symmetric");
    };
    check(p.cost, "cost");
    for (std::size_t l = 0; l < p.constraints.size(); ++l) {
        check(p.constraints[l].a, "constraint " + std::to_string(l));
        if (!std::isfinite(p.constraints[l].b))
            throw InvalidArgument("M-SDP: constraint " + std::to_string(l) + " has a non-finite right-hand side");
    }
}

namespace detail {

inline std::vector<Matrix> symmetric_slices(StarMContext const& ctx, Tensor3 const& t) {
    auto slices = transformed_slices(ctx, t);
    for (auto& s : slices)
        s = (0.5 * (s + s.transpose())).eval();
    return slices;
}

inline double slice_max_abs(Matrix const& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

} // namespace detail

/// One block-diagonal SDP over bdiag(X_hat): constraints may couple slices.
inline SDPSolution<Tensor3> solve_msdp_general(MSDPProblem const& p, SolverConfig const& cfg = {}) {
    validate(p);
    double const sign = p.sense == Sense::max ? -1.0 : 1.0;
    std::size_t const n3 = p.ctx.n3();
    auto const n = static_cast<Eigen::Index>(p.cost.n1());
    detail::BlockSDP bp;
    bp.dims.assign(n3, n);
    for (auto& s : detail::symmetric_slices(p.ctx, p.cost))
        bp.cost.push_back(sign * s);
    for (auto const& con : p.constraints) {
        detail::BlockRow row;
        row.b = con.b;
        auto const slices = detail::symmetric_slices(p.ctx, con.a);
        for (std::size_t k = 0; k < n3; ++k)
            if (detail::slice_max_abs(slices[k]) > 0.0)
                row.parts.emplace_back(k, slices[k]);
        bp.rows.push_back(std::move(row));
    }
    auto sol = detail::solve_block_sdp(bp, cfg);
    SDPSolution<Tensor3> out(from_transformed_slices(p.ctx, sol.z));
    out.objective = sign * sol.objective;
    out.dual_objective = sign * sol.dual_objective;
    out.status = sol.status;
    out.residuals = sol.residuals;
    out.iterations = sol.iterations;
    return out;
}

/// Index of the single nonzero transformed slice of each constraint tensor,
/// or PreconditionError if some constraint touches zero or several slices.
inline std::vector<std::size_t> constraint_slice_indices(MSDPProblem const& p) {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < p.constraints.size(); ++l) {
        auto const slices = transformed_slices(p.ctx, p.constraints[l].a);
        double mx = 0.0;
        for (auto const& s : slices)
            mx = std::max(mx, detail::slice_max_abs(s));
        std::vector<std::size_t> nonzero;
        for (std::size_t k = 0; k < slices.size(); ++k)
            if (detail::slice_max_abs(slices[k]) > 1e-12 * mx)
                nonzero.push_back(k);
        if (nonzero.size() != 1)
            throw PreconditionError("solve_msdp_sliced: constraint " + std::to_string(l) + " touches " +
                                    std::to_string(nonzero.size()) +
                                    " transformed slices; use solve_msdp_general instead");
        out.push_back(nonzero.front());
    }
    return out;
}

/// n3 independent n x n SDPs, one per transformed slice. Requires every
/// constraint to live on a single transformed slice.
inline SDPSolution<Tensor3> solve_msdp_sliced(MSDPProblem const& p, SolverConfig const& cfg = {}) {
    validate(p);
    auto const slice_of = constraint_slice_indices(p);
    std::size_t const n3 = p.ctx.n3();
    auto const cost_slices = detail::symmetric_slices(p.ctx, p.cost);
    std::vector<MatrixSDP> subproblems(n3);
    for (std::size_t k = 0; k < n3; ++k)
        subproblems[k] = MatrixSDP{p.cost.n1(), cost_slices[k], {}, p.sense};
    for (std::size_t l = 0; l < p.constraints.size(); ++l) {
        auto const slices = detail::symmetric_slices(p.ctx, p.constraints[l].a);
        subproblems[slice_of[l]].constraints.push_back({slices[slice_of[l]], p.constraints[l].b});
    }
    std::vector<SDPSolution<Matrix>> solutions(n3);
    parallel_for(n3, cfg.threads, [&](std::size_t k) { solutions[k] = solve_matrix_sdp(subproblems[k], cfg); });

    std::vector<Matrix> x_hat(n3);
    SDPSolution<Tensor3> out(Tensor3::zeros(1, 1, 1));
    out.status = SolveStatus::optimal;
    out.residuals = {0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < n3; ++k) {
        auto& s = solutions[k];
        x_hat[k] = std::move(s.x);
        out.objective += s.objective;
        out.dual_objective += s.dual_objective;
        out.status = worse(out.status, s.status);
        out.residuals.primal = std::max(out.residuals.primal, s.residuals.primal);
        out.residuals.dual = std::max(out.residuals.dual, s.residuals.dual);
        out.residuals.gap = std::max(out.residuals.gap, s.residuals.gap);
        out.iterations = std::max(out.iterations, s.iterations);
        out.slice_status.push_back(s.status);
    }
    out.x = from_transformed_slices(p.ctx, x_hat);
    return out;
}

enum class Route { automatic, general, sliced };

inline std::string_view to_string(Route r) {
    switch (r) {
    case Route::automatic: return "auto";
    case Route::general: return "general";
    case Route::sliced: return "sliced";
    }
    return "unknown";
}

/// True when every constraint tensor has exactly one nonzero transformed slice.
inline bool constraints_are_slice_local(MSDPProblem const& p) {
    try {
        constraint_slice_indices(p);
        return true;
    } catch (PreconditionError const&) {
        return false;
    }
}

/// Dispatches to the sliced route when constraints allow it (automatic) or as requested.
inline SDPSolution<Tensor3> solve_msdp(MSDPProblem const& p, SolverConfig const& cfg = {},
                                       Route route = Route::automatic) {
    if (route == Route::general || (route == Route::automatic && !constraints_are_slice_local(p)))
        return solve_msdp_general(p, cfg);
    return solve_msdp_sliced(p, cfg);
}

} // namespace tsdp
