#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>

#include <tsdp/equivariance.hpp>
#include <tsdp/random.hpp>

#include "fixtures.hpp"

using namespace tsdp;

namespace {

Matrix s3_expected_projector() {
    Matrix p = Matrix::Zero(3, 3);
    p(0, 0) = 1.0;
    p.block(1, 1, 2, 2).setConstant(0.5);
    return p;
}

} // namespace

TEST(GroupRep, Validation) {
    EXPECT_THROW(GroupRep({}), InvalidArgument);
    EXPECT_THROW(GroupRep({Matrix::Identity(2, 2), Matrix::Identity(3, 3)}), DimensionError);
    EXPECT_THROW(GroupRep({Matrix::Zero(2, 2)}), InvalidArgument);
    EXPECT_TRUE(fixture::s3().is_orthogonal());
    Matrix shear(2, 2);
    shear << 1, 1, 0, 1;
    EXPECT_FALSE(GroupRep({shear}).is_orthogonal());
}

TEST(AllTubes, S2HaarS3Trivial) {
    GroupRep s2({fixture::perm({1, 0})});
    auto h = build_transform(TransformKind::haar, 2).matrix();
    auto r = check_all_tubes_equivariant(s2, h);
    EXPECT_TRUE(r.all_equivariant);
    EXPECT_LE(r.off_diagonal[0], 1e-15);
    Matrix conj = h * s2.generators()[0] * h.transpose();
    EXPECT_NEAR(conj(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(conj(1, 1), -1.0, 1e-15);

    EXPECT_FALSE(check_all_tubes_equivariant(fixture::s3(), fixture::s3_basis()).all_equivariant);

    GroupRep trivial({Matrix::Identity(4, 4), Matrix::Identity(4, 4)});
    EXPECT_TRUE(check_all_tubes_equivariant(trivial, build_transform(TransformKind::dct, 4).matrix()).all_equivariant);
    EXPECT_THROW(check_all_tubes_equivariant(trivial, Matrix::Identity(3, 3)), DimensionError);
}

TEST(Subspace, S3Example) {
    auto w = equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 2}});
    EXPECT_EQ(w.dim(), 2u);
    EXPECT_LE((w.projector() - s3_expected_projector()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((w.basis.transpose() * w.basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    // every basis tube maps into range(V)
    for (std::size_t i = 0; i < w.dim(); ++i) {
        Vector hat = fixture::s3_basis() * w.tube(i).values();
        EXPECT_NEAR(hat[1], hat[2], 1e-12);
    }
    // W_rho depends on M: for the orthogonal basis it is spanned by (1,1,1) and (-1, sqrt3, 1)
    auto wo = equivariant_subspace(fixture::s3(), fixture::s3_orthogonal_basis(), IrrepDims{{1, 2}});
    Matrix span(3, 2);
    span << 1, -1, 1, std::sqrt(3.0), 1, 1;
    Eigen::HouseholderQR<Matrix> qr(span);
    Matrix q = qr.householderQ() * Matrix::Identity(3, 2);
    EXPECT_LE((wo.projector() - q * q.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Subspace, ExtremeDims) {
    GroupRep trivial({Matrix::Identity(4, 4)});
    auto one = equivariant_subspace(trivial, Matrix::Identity(4, 4), IrrepDims{{4}});
    EXPECT_EQ(one.dim(), 1u);
    EXPECT_LE((one.projector() - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff(), 1e-12);
    auto full = equivariant_subspace(trivial, Matrix::Identity(4, 4), IrrepDims{{1, 1, 1, 1}});
    EXPECT_EQ(full.dim(), 4u);
    EXPECT_EQ(full.complement().cols(), 0);
}

TEST(Subspace, RejectsInconsistentDims) {
    EXPECT_THROW(equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 1}}), InvalidArgument);
    EXPECT_THROW(equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 1, 1}}), PreconditionError);
    EXPECT_THROW(equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{2, 1}}), PreconditionError);
    EXPECT_THROW(equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{0, 3}}), InvalidArgument);
}

TEST(Subspace, FullDimensionIffAllTubesEquivariant) {
    GroupRep s2({fixture::perm({1, 0})});
    auto h = build_transform(TransformKind::haar, 2).matrix();
    EXPECT_EQ(equivariant_subspace(s2, h, IrrepDims{{1, 1}}).dim(), 2u);
    EXPECT_EQ(equivariant_subspace(fixture::s2_swap23(), fixture::swap23_basis(), IrrepDims{{1, 1, 1}}).dim(), 3u);
    EXPECT_TRUE(check_all_tubes_equivariant(fixture::s2_swap23(), fixture::swap23_basis()).all_equivariant);
    EXPECT_LT(equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 2}}).dim(), 3u);
    EXPECT_LT(equivariant_subspace(fixture::rotation_block(), Matrix::Identity(3, 3), IrrepDims{{1, 2}}).dim(), 3u);
}

TEST(Membership, S3Tubes) {
    auto w = equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 2}});
    EXPECT_TRUE(tube_in_subspace(w, tube({0.0, 1.0, 1.0})));
    EXPECT_FALSE(tube_in_subspace(w, tube({0.0, 1.0, 0.0})));
    EXPECT_TRUE(tube_in_subspace(w, Tube::zeros(3)));
    EXPECT_TRUE(tube_in_subspace(w, Tube(w.tube(0).values() + Vector::Constant(3, 1e-14))));
    EXPECT_THROW(tube_in_subspace(w, Tube::zeros(2)), DimensionError);
}

TEST(DirectEquivariance, S3Examples) {
    auto rep = fixture::s3();
    auto ctx = fixture::user_ctx(fixture::s3_basis());
    EXPECT_TRUE(verify_tube_equivariance(rep, ctx, tube({0.0, 1.0, 1.0})));
    // T_a for a = (0, 1, 1) is multiplication by 11^T - I
    Matrix expected = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
    EXPECT_LE((tube_mult_matrix(ctx, tube({0.0, 1.0, 1.0})) - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(verify_tube_equivariance(rep, ctx, identity_tube(ctx)));
    EXPECT_LE((tube_mult_matrix(ctx, identity_tube(ctx)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_FALSE(verify_tube_equivariance(rep, ctx, tube({0.0, 1.0, 0.0})));
}

TEST(DirectEquivariance, AgreesWithMembershipAcrossFixtures) {
    struct Case {
        GroupRep rep;
        Matrix m;
        IrrepDims dims;
    };
    std::vector<Case> cases{
        {GroupRep({fixture::perm({1, 0})}), build_transform(TransformKind::haar, 2).matrix(), {{1, 1}}},
        {fixture::s3(), fixture::s3_basis(), {{1, 2}}},
        {fixture::s3(), fixture::s3_orthogonal_basis(), {{1, 2}}},
        {fixture::rotation_block(), Matrix::Identity(3, 3), {{1, 2}}},
        {GroupRep({Matrix::Identity(3, 3)}), build_transform(TransformKind::dct, 3).matrix(), {{1, 1, 1}}},
    };
    Rng rng(1);
    for (auto const& c : cases) {
        auto ctx = fixture::user_ctx(c.m);
        auto w = equivariant_subspace(c.rep, c.m, c.dims);
        for (int t = 0; t < 200; ++t) {
            Vector a = t % 2 == 0 ? Vector(w.basis * rng.normal_vector(w.dim())) : rng.normal_vector(w.n3());
            Tube ta(a);
            EXPECT_EQ(verify_tube_equivariance(c.rep, ctx, ta, 4, 1e-9, static_cast<std::uint64_t>(t)),
                      tube_in_subspace(w, ta));
        }
    }
}

TEST(Constraints, CountsAndComplement) {
    GroupRep trivial({Matrix::Identity(3, 3)});
    auto full = equivariant_subspace(trivial, Matrix::Identity(3, 3), IrrepDims{{1, 1, 1}});
    EXPECT_TRUE(invariant_constraints(full, 3).empty());

    auto w = equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 2}});
    auto one = invariant_constraints(w, 1);
    ASSERT_EQ(one.size(), 1u);
    Vector u = one[0].a.tube(0, 0).values();
    EXPECT_NEAR(std::abs(u[1] + u[2]), 0.0, 1e-12);
    EXPECT_NEAR(u[0], 0.0, 1e-12);
    EXPECT_GT(std::abs(u[1]), 0.1);
    EXPECT_EQ(invariant_constraints(w, 3).size(), 6u);
    EXPECT_THROW(invariant_constraints(w, 0), InvalidArgument);
}

TEST(Constraints, SolutionSetIsTubesInSubspace) {
    auto w = equivariant_subspace(fixture::s3(), fixture::s3_basis(), IrrepDims{{1, 2}});
    std::size_t const n = 3, n3 = 3;
    auto cons = invariant_constraints(w, n);
    for (auto const& c : cons)
        EXPECT_EQ(max_abs_diff(c.a, facewise_transpose(c.a)), 0.0);

    // rows act on the upper-triangular tubes of a symmetric tensor
    Matrix system(static_cast<Eigen::Index>(cons.size()), static_cast<Eigen::Index>(n * (n + 1) / 2 * n3));
    for (std::size_t r = 0; r < cons.size(); ++r) {
        Eigen::Index col = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                for (std::size_t k = 0; k < n3; ++k)
                    system(static_cast<Eigen::Index>(r), col++) =
                        (i == j ? 1.0 : 2.0) * cons[r].a(i, j, k);
    }
    Eigen::FullPivLU<Matrix> lu(system);
    EXPECT_EQ(static_cast<std::size_t>(lu.rank()), cons.size());
    EXPECT_EQ(static_cast<std::size_t>(system.cols() - lu.rank()), n * (n + 1) / 2 * w.dim());

    Rng rng(2);
    std::vector<Tube> tubes;
    Matrix coeff = rng.normal_matrix(n * n, w.dim());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t const lo = std::min(i, j), hi = std::max(i, j);
            tubes.push_back(Tube(w.basis * coeff.row(static_cast<Eigen::Index>(lo * n + hi)).transpose()));
        }
    auto x = Tensor3::from_tubes(n, n, tubes);
    for (auto const& c : cons)
        EXPECT_LE(std::abs(inner_product(c.a, x)), 1e-12);
}

TEST(InvariantMsdp, S2FamilyAndS3) {
    GroupRep s2({fixture::perm({1, 0})});
    StarMContext h(build_transform(TransformKind::haar, 2));
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        double x1 = rng.normal(), y1 = rng.normal(), x2 = rng.normal(), y2 = rng.normal();
        Matrix a(2, 2), b(2, 2);
        a << x1, 1, 1, y1;
        b << x2, 1, 1, y2;
        EXPECT_TRUE(verify_invariant_msdp(s2, h, Tensor3::from_slices({a, b})));
    }

    auto rep = fixture::s3();
    auto ctx = fixture::user_ctx(fixture::s3_basis());
    auto w = equivariant_subspace(rep, fixture::s3_basis(), IrrepDims{{1, 2}});
    std::vector<Tube> tubes;
    Matrix coeff = rng.normal_matrix(4, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            tubes.push_back(Tube(w.basis * coeff.row(std::min(i, j) * 2 + std::max(i, j)).transpose()));
    auto inside = Tensor3::from_tubes(2, 2, tubes);
    EXPECT_TRUE(verify_invariant_msdp(rep, ctx, inside));
    tubes[0] = Tube(rng.normal_vector(3));
    EXPECT_FALSE(verify_invariant_msdp(rep, ctx, Tensor3::from_tubes(2, 2, tubes)));
}
