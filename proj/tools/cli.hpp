#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tsdp/tsdp.hpp>

namespace tsdp::cli {

enum ExitCode : int { ok = 0, verdict_false = 1, usage = 2, numerical = 3 };

struct Globals {
    std::uint64_t seed = 0;
    double tol = 1e-8;
    std::size_t max_iters = 50000;
    std::size_t threads = 1;

    SolverConfig solver() const {
        SolverConfig cfg;
        cfg.max_iters = max_iters;
        cfg.threads = threads;
        return cfg;
    }
};

class Printer {
public:
    explicit Printer(std::ostream& out) : out_(out) {}

    void line(std::string const& key, std::string const& value) { out_ << key << ": " << value << '\n'; }
    void line(std::string const& key, char const* value) { line(key, std::string(value)); }
    void line(std::string const& key, std::string_view value) { line(key, std::string(value)); }
    void line(std::string const& key, bool value) { line(key, value ? "true" : "false"); }
    void line(std::string const& key, double value) { line(key, detail::format_double(value)); }
    void line(std::string const& key, std::size_t value) { line(key, std::to_string(value)); }

    template <typename Range>
    void list(std::string const& key, Range const& values) {
        std::string s;
        for (auto v : values)
            s += (s.empty() ? "" : " ") + detail::format_double(static_cast<double>(v));
        line(key, s);
    }

private:
    std::ostream& out_;
};

inline std::vector<double> as_list(Vector const& v) { return {v.data(), v.data() + v.size()}; }

inline std::string status_list(std::vector<SolveStatus> const& s) {
    std::string out;
    for (auto v : s)
        out += (out.empty() ? "" : " ") + std::string(to_string(v));
    return out;
}

inline int status_exit(SolveStatus s) {
    switch (s) {
    case SolveStatus::optimal: return ok;
    case SolveStatus::max_iters: return numerical;
    default: return verdict_false;
    }
}

inline int cmd_psd_check(Globals const& g, Printer& p, std::string const& tensor, std::string const& transform,
                         bool minors) {
    Tensor3 const a = load_tensor(tensor);
    StarMContext const ctx(resolve_transform(parse_transform_spec(transform), a.n3(), &a, g.seed));
    auto const v = is_psd(ctx, a, g.tol);
    p.line("psd", v.is_psd);
    p.list("min_eigenvalue_per_slice", v.min_eigenvalue_per_slice);
    p.line("psd_matrix_rep", is_psd_via_matrix_rep(ctx, a, g.tol));
    if (minors)
        p.line("psd_minors", minors_certificate(ctx, a, g.tol).all_squares);
    if (v.witness) {
        Tensor3 const x = witness_tensor(ctx, *v.witness);
        p.line("witness_slice", v.witness->slice + 1);
        p.list("witness_eigenvector", as_list(v.witness->eigenvector));
        p.list("witness_tensor", x.data());
        p.line("witness_value", inner_product(x, starm_product(ctx, a, x)));
    }
    return v.is_psd ? ok : verdict_false;
}

inline int cmd_solve(Globals const& g, Printer& p, std::string const& problem, std::optional<std::string> transform,
                     std::optional<std::string> route, std::optional<std::string> out) {
    auto const file = load_problem(problem);
    if (!transform)
        transform = file.transform;
    if (!transform)
        throw InvalidArgument("solve: no transform given on the command line or in the problem file");
    Tensor3 const cost = load_tensor(file.cost);
    StarMContext const ctx(resolve_transform(parse_transform_spec(*transform), cost.n3(), &cost, g.seed));
    auto const prob = assemble_problem(file, ctx);
    Route r = route ? parse_route(*route) : file.route;
    if (r == Route::automatic)
        r = constraints_are_slice_local(prob) ? Route::sliced : Route::general;
    auto const sol = solve_msdp(prob, g.solver(), r);
    p.line("route", to_string(r));
    p.line("status", to_string(sol.status));
    p.line("objective", sol.objective);
    p.line("dual_objective", sol.dual_objective);
    p.line("primal_residual", sol.residuals.primal);
    p.line("dual_residual", sol.residuals.dual);
    p.line("gap", sol.residuals.gap);
    p.line("iterations", sol.iterations);
    if (!sol.slice_status.empty())
        p.line("slice_status", status_list(sol.slice_status));
    if (out)
        save_tensor(*out, sol.x);
    return status_exit(sol.status);
}

inline int cmd_equivariance(Globals const& g, Printer& p, std::string const& rep_path, std::string const& transform,
                            std::vector<double> const& tube) {
    auto const file = load_rep(rep_path);
    GroupRep const rep = file.rep();
    StarMContext const ctx(resolve_transform(parse_transform_spec(transform), rep.n3(), nullptr, g.seed));
    auto const report = check_all_tubes_equivariant(rep, ctx.m(), g.tol);
    p.line("generators", rep.generators().size());
    p.line("all_equivariant", report.all_equivariant);
    p.list("off_diagonal", report.off_diagonal);
    std::optional<EquivariantSubspace> w;
    if (file.dims) {
        w = equivariant_subspace(rep, ctx.m(), *file.dims);
        p.line("w_dim", w->dim());
        for (std::size_t i = 0; i < w->dim(); ++i)
            p.list("w_basis_" + std::to_string(i + 1), as_list(w->tube(i).values()));
    }
    if (tube.empty())
        return report.all_equivariant ? ok : verdict_false;
    if (tube.size() != rep.n3())
        throw DimensionError("equivariance: --tube has " + std::to_string(tube.size()) + " entries, expected " +
                             std::to_string(rep.n3()));
    Tube const a(Eigen::Map<const Vector>(tube.data(), static_cast<Eigen::Index>(tube.size())));
    bool const equivariant = verify_tube_equivariance(rep, ctx, a, 8, 1e-9, g.seed);
    p.line("tube_equivariant", equivariant);
    if (w)
        p.line("tube_in_w", tube_in_subspace(*w, a, g.tol));
    return equivariant ? ok : verdict_false;
}

inline int cmd_msos(Globals const& g, Printer& p, std::string const& form, std::string const& transform,
                    std::optional<std::string> rep_path) {
    QuadraticForm const f = load_form(form);
    StarMContext const ctx(resolve_transform(parse_transform_spec(transform), f.n3, nullptr, g.seed));
    MSOSVerdict v;
    std::optional<RepFile> rep;
    if (rep_path)
        rep = load_rep(*rep_path);
    if (rep && rep->dims)
        v = msos_with_subspace(ctx, f, equivariant_subspace(rep->rep(), ctx.m(), *rep->dims), g.tol);
    else
        v = msos_certify(ctx, f, g.tol, 100, g.seed);
    p.line("msos", v.is_msos);
    if (v.failure) {
        bool const off = v.failure->kind == MSOSFailureKind::off_diagonal;
        p.line("failure", off ? "off_diagonal" : "negative_eigenvalue");
        if (off)
            p.line("block", std::to_string(v.failure->block_i + 1) + " " + std::to_string(v.failure->block_j + 1));
        p.line("magnitude", v.failure->magnitude);
    }
    if (v.tube_outside_subspace)
        p.line("tube_outside_w", std::to_string(v.tube_outside_subspace->first + 1) + " " +
                                     std::to_string(v.tube_outside_subspace->second + 1));
    if (v.gram_tensor)
        for (std::size_t i = 0; i < f.m; ++i)
            for (std::size_t j = 0; j < f.m; ++j)
                p.list("gram_tube_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
                       as_list(v.gram_tensor->tube(i, j).values()));
    if (rep)
        p.line("invariant", check_invariance(rep->rep(), f, 16, 1e-9, g.seed));
    return v.is_msos ? ok : verdict_false;
}

inline int cmd_nuclear_norm(Globals const& g, Printer& p, std::string const& tensor, std::string const& transform,
                            bool via_sdp) {
    Tensor3 const a = load_tensor(tensor);
    StarMContext const ctx(resolve_transform(parse_transform_spec(transform), a.n3(), &a, g.seed));
    p.line("nuclear_norm", m_nuclear_norm(ctx, a));
    if (!via_sdp)
        return ok;
    auto const sol = nuclear_norm_msdp(ctx, a, g.solver());
    p.line("nuclear_norm_sdp", sol.objective);
    p.line("status", to_string(sol.status));
    p.line("slice_status", status_list(sol.slice_status));
    return status_exit(sol.status);
}

inline int cmd_complete(Globals const& g, Printer& p, std::string const& tensor, std::string const& mask,
                        std::string const& transform, std::optional<std::string> truth_path,
                        std::optional<std::string> out) {
    Tensor3 const y = load_tensor(tensor);
    auto const m = load_mask(mask);
    if (m.n1 != y.n1() || m.n2 != y.n2())
        throw DimensionError("complete: mask is " + std::to_string(m.n1) + "x" + std::to_string(m.n2) +
                             " but the tensor is " + y.extents());
    std::optional<Tensor3> truth;
    if (truth_path)
        truth = load_tensor(*truth_path);
    auto const t = resolve_transform(parse_transform_spec(transform), y.n3(), &y, g.seed);
    auto const res = complete_tensor({y, m.omega, t}, g.solver(), truth);
    p.line("observed_tubes", m.omega.size());
    p.line("objective", res.m_nuclear);
    p.list("slice_objectives", res.slice_objectives);
    p.line("slice_status", status_list(res.per_slice_status));
    p.line("constraint_residual", res.constraint_residual);
    p.line("iterations", res.iterations);
    if (res.fit) {
        p.line("relative_error_max", *res.fit);
        p.list("per_slice_relative_error", per_slice_relative_error(res.a, *truth));
    }
    if (out)
        save_tensor(*out, res.a);
    SolveStatus worst = SolveStatus::optimal;
    for (auto s : res.per_slice_status)
        worst = worse(worst, s);
    return worst == SolveStatus::optimal ? ok : numerical;
}

inline int cmd_svd(Globals const& g, Printer& p, std::string const& tensor, std::string const& transform,
                   std::optional<std::string> prefix) {
    Tensor3 const a = load_tensor(tensor);
    StarMContext const ctx(resolve_transform(parse_transform_spec(transform), a.n3(), &a, g.seed));
    auto const svd = starm_svd(ctx, a, default_tube_tol, g.threads);
    Tensor3 const back = starm_product(ctx, starm_product(ctx, svd.u, svd.s), facewise_transpose(svd.v));
    p.line("rank", svd.rank);
    p.list("singular_tube_norms", svd.singular_tube_norms);
    p.line("reconstruction_error", frobenius_norm(back - a));
    if (prefix) {
        save_tensor(*prefix + "_u.tsdp", svd.u);
        save_tensor(*prefix + "_s.tsdp", svd.s);
        save_tensor(*prefix + "_v.tsdp", svd.v);
    }
    return ok;
}

inline int cmd_transform_info(Globals const& g, Printer& p, std::string const& transform, std::optional<std::size_t> n3,
                              std::optional<std::string> tensor) {
    auto const spec = parse_transform_spec(transform);
    std::optional<Tensor3> data;
    if (tensor)
        data = load_tensor(*tensor);
    std::size_t const size = n3 ? *n3 : spec.n3 ? *spec.n3 : data ? data->n3() : 0;
    if (size == 0)
        throw InvalidArgument("transform-info: give --n3, a size suffix such as dct:4, or --tensor");
    auto const t = resolve_transform(spec, size, data ? &*data : nullptr, g.seed);
    p.line("kind", to_string(t.kind()));
    p.line("n3", t.size());
    p.line("orthogonal", t.is_orthogonal());
    p.line("ortho_defect", t.ortho_defect());
    p.line("condition", t.condition());
    if (t.seed())
        p.line("seed", std::to_string(*t.seed()));
    for (Eigen::Index i = 0; i < t.matrix().rows(); ++i)
        p.list("row_" + std::to_string(i + 1), as_list(t.matrix().row(i).transpose()));
    return ok;
}

/// Runs the tsdp command line. args excludes the program name.
inline int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tensor semidefinite programming over the *M-product", "tsdp"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for random transforms and randomized checks");
    app.add_option("--tol", g.tol, "Tolerance for PSD, equivariance and M-SOS checks")->check(CLI::PositiveNumber);
    app.add_option("--max-iters", g.max_iters, "SDP iteration limit")->check(CLI::PositiveNumber);
    app.add_option("--threads", g.threads, "Worker threads for slice-parallel work")->check(CLI::PositiveNumber);

    std::string tensor, transform, mask, problem, rep, form;
    std::optional<std::string> out_path, truth, route, prefix, rep_opt, tensor_opt, transform_opt;
    std::optional<std::size_t> n3;
    std::vector<double> tube;
    bool minors = false, via_sdp = false;
    int code = ok;
    Printer p(out);

    auto* psd = app.add_subcommand("psd-check", "Decide *M-PSD membership of a symmetric tensor");
    psd->add_option("--tensor", tensor, "Tensor file")->required();
    psd->add_option("--transform", transform, "Transform spec")->required();
    psd->add_flag("--minors", minors, "Also run the principal-minor certificate");
    psd->callback([&] { code = cmd_psd_check(g, p, tensor, transform, minors); });

    auto* solve = app.add_subcommand("solve", "Solve an M-SDP problem file");
    solve->add_option("--problem", problem, "Problem file")->required();
    solve->add_option("--transform", transform_opt, "Transform spec (overrides the problem file)");
    solve->add_option("--route", route, "auto, general or sliced (overrides the problem file)");
    solve->add_option("--out", out_path, "Write the solution tensor here");
    solve->callback([&] { code = cmd_solve(g, p, problem, transform_opt, route, out_path); });

    auto* eq = app.add_subcommand("equivariance", "Equivariance of tubal multiplication under a representation");
    eq->add_option("--rep", rep, "Representation file")->required();
    eq->add_option("--transform", transform, "Transform spec")->required();
    eq->add_option("--tube", tube, "Tube to test, comma separated")->delimiter(',');
    eq->callback([&] { code = cmd_equivariance(g, p, rep, transform, tube); });

    auto* msos = app.add_subcommand("msos", "Certify a quadratic form as M-SOS");
    msos->add_option("--form", form, "Form file")->required();
    msos->add_option("--transform", transform, "Transform spec")->required();
    msos->add_option("--rep", rep_opt, "Representation file for invariance and W_rho checks");
    msos->callback([&] { code = cmd_msos(g, p, form, transform, rep_opt); });

    auto* nuc = app.add_subcommand("nuclear-norm", "M-nuclear norm of a tensor");
    nuc->add_option("--tensor", tensor, "Tensor file")->required();
    nuc->add_option("--transform", transform, "Transform spec")->required();
    nuc->add_flag("--via-sdp", via_sdp, "Also solve the nuclear-norm M-SDP");
    nuc->callback([&] { code = cmd_nuclear_norm(g, p, tensor, transform, via_sdp); });

    auto* comp = app.add_subcommand("complete", "Complete a tensor from observed tubes");
    comp->add_option("--tensor", tensor, "Observed tensor file")->required();
    comp->add_option("--mask", mask, "Mask file")->required();
    comp->add_option("--transform", transform, "Transform spec")->required();
    comp->add_option("--truth", truth, "Ground-truth tensor for error metrics");
    comp->add_option("--out", out_path, "Write the completed tensor here");
    comp->callback([&] { code = cmd_complete(g, p, tensor, mask, transform, truth, out_path); });

    auto* svd = app.add_subcommand("svd", "*M-SVD and *M-rank of a tensor");
    svd->add_option("--tensor", tensor, "Tensor file")->required();
    svd->add_option("--transform", transform, "Transform spec")->required();
    svd->add_option("--out-prefix", prefix, "Write PREFIX_u.tsdp, PREFIX_s.tsdp, PREFIX_v.tsdp");
    svd->callback([&] { code = cmd_svd(g, p, tensor, transform, prefix); });

    auto* info = app.add_subcommand("transform-info", "Describe a transform matrix");
    info->add_option("--transform", transform, "Transform spec")->required();
    info->add_option("--n3", n3, "Transform size");
    info->add_option("--tensor", tensor_opt, "Tensor for the data transform");
    info->callback([&] { code = cmd_transform_info(g, p, transform, n3, tensor_opt); });

    std::vector<std::string> argv_store{"tsdp"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char const*> argv;
    for (auto const& a : argv_store)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (CLI::CallForHelp const& e) {
        return app.exit(e, out, err);
    } catch (CLI::ParseError const& e) {
        app.exit(e, out, err);
        err << app.help();
        return usage;
    } catch (NumericalError const& e) {
        err << "error: " << e.what() << '\n';
        return numerical;
    } catch (Error const& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }
    return code;
}

} // namespace tsdp::cli
