#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cli.hpp"

using namespace tsdp;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;

    std::map<std::string, std::string> fields() const {
        std::map<std::string, std::string> m;
        std::istringstream in(out);
        for (std::string line; std::getline(in, line);)
            if (auto const c = line.find(": "); c != std::string::npos)
                m[line.substr(0, c)] = line.substr(c + 2);
        return m;
    }
};

Run run(std::vector<std::string> const& args) {
    std::ostringstream out, err;
    int const code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("tsdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }

    std::string path(std::string const& name) const { return (dir_ / name).string(); }

    std::string write_text(std::string const& name, std::string const& text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    std::string write_tensor(std::string const& name, Tensor3 const& a) const {
        save_tensor(path(name), a);
        return path(name);
    }

    std::filesystem::path dir_;
};

Tensor3 region(double x, double y) {
    Matrix a(2, 2), b(2, 2);
    a << x, y, y, 1.0 - x;
    b << 1.0 - x, y, y, x;
    return Tensor3::from_slices({a, b});
}

} // namespace

TEST_F(Cli, NuclearNormIdentity) {
    Matrix s0(2, 2), s1(2, 2);
    s0 << 3, 0, 0, 4;
    s1 << 1, 0, 0, 2;
    auto const t = write_tensor("t.tsdp", Tensor3::from_slices({s0, s1}));
    auto const r = run({"nuclear-norm", "--tensor", t, "--transform", "identity"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.fields().at("nuclear_norm"), "10");
    auto const s = run({"nuclear-norm", "--tensor", t, "--transform", "identity", "--via-sdp"});
    EXPECT_EQ(s.code, 0) << s.err;
    EXPECT_NEAR(std::stod(s.fields().at("nuclear_norm_sdp")), 10.0, 1e-3);
    EXPECT_EQ(s.fields().at("status"), "optimal");
}

TEST_F(Cli, PsdCheckFeasibleRegion) {
    auto const t = write_tensor("r.tsdp", region(0.4, 0.0));
    auto const r = run({"psd-check", "--tensor", t, "--transform", "haar:2", "--minors"});
    EXPECT_EQ(r.code, 1) << r.err;
    auto const f = r.fields();
    EXPECT_EQ(f.at("psd"), "false");
    EXPECT_EQ(f.at("psd_matrix_rep"), "false");
    EXPECT_EQ(f.at("psd_minors"), "false");
    ASSERT_TRUE(f.count("witness_tensor"));
    EXPECT_LT(std::stod(f.at("witness_value")), 0.0);
    auto const id = run({"psd-check", "--tensor", t, "--transform", "identity"});
    EXPECT_EQ(id.code, 0);
    EXPECT_EQ(id.fields().at("psd"), "true");
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({"nuclear-norm", "--bogus"}).code, 2);
    auto const r = run({"--frobnicate"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("psd-check"), std::string::npos);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"nuclear-norm", "--tensor", path("missing.tsdp"), "--transform", "dct"}).code, 2);
    auto const t = write_tensor("t.tsdp", Tensor3::zeros(2, 2, 3));
    EXPECT_EQ(run({"nuclear-norm", "--tensor", t, "--transform", "fourier"}).code, 2);
    EXPECT_EQ(run({"nuclear-norm", "--tensor", t, "--transform", "haar"}).code, 2);
    EXPECT_EQ(run({"--threads", "0", "svd", "--tensor", t, "--transform", "dct"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, SolveProblemFile) {
    auto ctx = StarMContext(build_transform(TransformKind::haar, 2));
    write_tensor("c.tsdp", facewise_identity(2, 2));
    std::vector<Matrix> s(2, Matrix::Zero(2, 2));
    s[0](0, 0) = 1.0;
    write_tensor("a1.tsdp", from_transformed_slices(ctx, s));
    s[0].setZero();
    s[1](1, 1) = 1.0;
    write_tensor("a2.tsdp", from_transformed_slices(ctx, s));
    auto const prob = write_text("p.txt", "sense min\ncost c.tsdp\nconstraint a1.tsdp 1\nconstraint a2.tsdp 2\n"
                                          "transform haar:2\n");
    auto const r = run({"solve", "--problem", prob, "--out", path("x.tsdp")});
    EXPECT_EQ(r.code, 0) << r.err;
    auto const f = r.fields();
    EXPECT_EQ(f.at("route"), "sliced");
    EXPECT_EQ(f.at("status"), "optimal");
    Tensor3 const x = load_tensor(path("x.tsdp"));
    EXPECT_NEAR(std::stod(f.at("objective")), inner_product(facewise_identity(2, 2), x), 1e-6);
    auto const general = run({"solve", "--problem", prob, "--route", "general"});
    EXPECT_EQ(general.fields().at("route"), "general");
    EXPECT_NEAR(std::stod(general.fields().at("objective")), std::stod(f.at("objective")), 1e-4);
    auto const unbounded = write_text("u.txt", "sense max\ncost c.tsdp\nconstraint a1.tsdp 1\ntransform haar:2\n");
    EXPECT_EQ(run({"solve", "--problem", unbounded}).code, 1);
}

TEST_F(Cli, Equivariance) {
    auto const rep = write_text("s3.rep", "n3 3\ndims 1 2\ngenerator\n0 1 0\n1 0 0\n0 0 1\n"
                                          "generator\n0 0 1\n1 0 0\n0 1 0\n");
    auto const m = write_text("m.txt", "1 1 1\n1 -1 0\n1 0 -1\n");
    auto const r = run({"equivariance", "--rep", rep, "--transform", "file:" + m});
    EXPECT_EQ(r.code, 1) << r.err;
    auto const f = r.fields();
    EXPECT_EQ(f.at("all_equivariant"), "false");
    EXPECT_EQ(f.at("w_dim"), "2");
    auto const t = run({"equivariance", "--rep", rep, "--transform", "file:" + m, "--tube", "2,1,1"});
    EXPECT_EQ(t.code, 0) << t.err;
    EXPECT_EQ(t.fields().at("tube_in_w"), "true");
    EXPECT_EQ(t.fields().at("tube_equivariant"), "true");
    EXPECT_EQ(run({"equivariance", "--rep", rep, "--transform", "file:" + m, "--tube", "0,1,0"}).code, 1);
}

TEST_F(Cli, Msos) {
    auto const form = write_text("f.form", "m 1\nn3 3\n1 1 1\n2 0\n2\n");
    auto const m = write_text("m.txt", "1 0 0\n0 0.7071067811865476 0.7071067811865476\n"
                                       "0 0.7071067811865476 -0.7071067811865476\n");
    auto const rep = write_text("s2.rep", "n3 3\ngenerator\n1 0 0\n0 0 1\n0 1 0\n");
    auto const r = run({"msos", "--form", form, "--transform", "file:" + m, "--rep", rep});
    EXPECT_EQ(r.code, 1) << r.err;
    auto const f = r.fields();
    EXPECT_EQ(f.at("msos"), "false");
    EXPECT_EQ(f.at("failure"), "off_diagonal");
    EXPECT_EQ(f.at("block"), "1 1");
    EXPECT_NEAR(std::stod(f.at("magnitude")), std::sqrt(2.0), 1e-9);
    EXPECT_EQ(f.at("invariant"), "true");
    auto const id = write_text("id.form", "m 1\nn3 2\n2 0\n3\n");
    auto const ok = run({"msos", "--form", id, "--transform", "identity"});
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_EQ(ok.fields().at("gram_tube_1_1"), "2 3");
}

TEST_F(Cli, CompleteAndSvd) {
    StarMContext const ctx(build_transform(TransformKind::dct, 3));
    Tensor3 const y = make_synthetic_low_rank(ctx, 3, 3, 1, 4);
    auto const t = write_tensor("y.tsdp", y);
    auto const mask = write_text("m.mask", "size 3 3\n1 1\n1 2\n1 3\n2 1\n2 2\n2 3\n3 1\n3 2\n3 3\n");
    auto const r = run({"complete", "--tensor", t, "--mask", mask, "--transform", "dct", "--truth", t, "--out",
                        path("a.tsdp")});
    EXPECT_EQ(r.code, 0) << r.err;
    auto const f = r.fields();
    EXPECT_LE(std::stod(f.at("relative_error_max")), 1e-5);
    EXPECT_LE(std::stod(f.at("constraint_residual")), 1e-5);
    EXPECT_LE(max_abs_diff(load_tensor(path("a.tsdp")), y), 1e-5);
    auto const bad = write_text("bad.mask", "size 2 3\n1 1\n");
    EXPECT_EQ(run({"complete", "--tensor", t, "--mask", bad, "--transform", "dct"}).code, 2);

    auto const s = run({"svd", "--tensor", t, "--transform", "dct", "--out-prefix", path("y")});
    EXPECT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(s.fields().at("rank"), "1");
    EXPECT_LE(std::stod(s.fields().at("reconstruction_error")), 1e-10);
    EXPECT_TRUE(std::filesystem::exists(path("y_s.tsdp")));
}

TEST_F(Cli, TransformInfo) {
    auto const r = run({"transform-info", "--transform", "haar:2"});
    EXPECT_EQ(r.code, 0) << r.err;
    auto const f = r.fields();
    EXPECT_EQ(f.at("kind"), "haar");
    EXPECT_EQ(f.at("orthogonal"), "true");
    EXPECT_EQ(f.at("row_1"), "0.7071067811865475 0.7071067811865475");
    EXPECT_EQ(run({"transform-info", "--transform", "dct"}).code, 2);
    auto const a = run({"--seed", "3", "transform-info", "--transform", "random", "--n3", "4"});
    auto const b = run({"transform-info", "--transform", "random:3", "--n3", "4"});
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, ThreadCountDoesNotChangeOutput) {
    StarMContext const ctx(build_transform(TransformKind::dct, 4));
    auto const t = write_tensor("y.tsdp", make_synthetic_low_rank(ctx, 4, 4, 1, 8));
    auto const mask = write_text("m.mask", "size 4 4\n1 1\n1 3\n2 2\n2 4\n3 1\n3 2\n4 3\n4 4\n1 2\n");
    std::vector<std::string> args{"complete", "--tensor", t, "--mask", mask, "--transform", "dct"};
    auto one = args, four = args;
    four.insert(four.begin(), {"--threads", "4"});
    EXPECT_EQ(run(one).out, run(four).out);
}

TEST_F(Cli, BinaryExitCodes) {
    auto const t = write_tensor("r.tsdp", region(0.4, 0.0));
    auto status = [](std::string const& cmd) {
        int const s = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    std::string const bin = TSDP_CLI_PATH;
    EXPECT_EQ(status(bin + " psd-check --tensor " + t + " --transform haar:2"), 1);
    EXPECT_EQ(status(bin + " psd-check --tensor " + t + " --transform identity"), 0);
    EXPECT_EQ(status(bin + " --nope"), 2);
}
