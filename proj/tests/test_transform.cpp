#include <gtest/gtest.h>

#include <cmath>

#include <tsdp/random.hpp>
#include <tsdp/transform.hpp>

using namespace tsdp;

TEST(Build, IdentityHaarDct) {
    auto id = build_transform(TransformKind::identity, 4);
    EXPECT_EQ(id.matrix(), Matrix::Identity(4, 4));

    auto h = build_transform(TransformKind::haar, 2);
    double const r = 1.0 / std::sqrt(2.0);
    Matrix expected(2, 2);
    expected << r, r, r, -r;
    EXPECT_LE((h.matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);

    auto d = build_transform(TransformKind::dct, 8);
    EXPECT_LE(verify_orthogonal(d.matrix()).defect, 1e-12);
    // first DCT-II row is the constant direction
    for (Eigen::Index j = 0; j < 8; ++j)
        EXPECT_NEAR(d.matrix()(0, j), 1.0 / std::sqrt(8.0), 1e-15);
    // entry formula
    EXPECT_NEAR(d.matrix()(3, 5), 0.5 * std::cos(M_PI * 11.0 * 3.0 / 16.0), 1e-15);
}

TEST(Build, HaarLargerAndRejectsNonPowerOfTwo) {
    auto h = build_transform(TransformKind::haar, 8);
    EXPECT_LE(h.ortho_defect(), 1e-12);
    EXPECT_THROW(build_transform(TransformKind::haar, 6), InvalidArgument);
    EXPECT_THROW(build_transform(TransformKind::random, 4), InvalidArgument);
    EXPECT_THROW(build_transform(TransformKind::data_dependent, 4), InvalidArgument);
    EXPECT_THROW(parse_transform_kind("fourier"), InvalidArgument);
}

TEST(Build, RandomIsDeterministicPerSeed) {
    TransformOptions opts;
    opts.seed = 42;
    auto a = build_transform(TransformKind::random, 5, opts);
    auto b = build_transform(TransformKind::random, 5, opts);
    EXPECT_EQ(a.matrix(), b.matrix());
    EXPECT_EQ(a.seed(), 42u);
    opts.seed = 43;
    auto c = build_transform(TransformKind::random, 5, opts);
    EXPECT_GT((a.matrix() - c.matrix()).cwiseAbs().maxCoeff(), 1e-3);
    EXPECT_LE(a.ortho_defect(), 1e-10);
}

TEST(Build, AllNamedKindsOrthogonal) {
    TransformOptions opts;
    opts.seed = 7;
    for (std::size_t n : {1u, 2u, 4u, 8u, 16u})
        for (auto kind : {TransformKind::identity, TransformKind::dct, TransformKind::haar, TransformKind::random}) {
            auto t = build_transform(kind, n, opts);
            EXPECT_TRUE(verify_orthogonal(t.matrix()).orthogonal) << to_string(kind) << " " << n;
        }
}

TEST(DataDependent, ConstantSlicesAndOrthogonality) {
    Rng rng(11);
    Matrix slice = rng.normal_matrix(3, 2);
    auto y = Tensor3::from_slices({slice, slice, slice, slice});
    auto t = build_data_dependent(y);
    for (Eigen::Index j = 0; j < 4; ++j)
        EXPECT_NEAR(t.matrix()(0, j), 0.5, 1e-12);
    EXPECT_EQ(t.kind(), TransformKind::data_dependent);

    auto random_y = rng.normal_tensor(4, 3, 6);
    EXPECT_LE(build_data_dependent(random_y).ortho_defect(), 1e-10);

    auto one = build_data_dependent(rng.normal_tensor(2, 2, 1));
    EXPECT_NEAR(std::abs(one.matrix()(0, 0)), 1.0, 1e-15);
    EXPECT_THROW(build_data_dependent(Tensor3::zeros(2, 2, 3)), InvalidArgument);
}

TEST(Verify, Reports) {
    auto r = verify_invertible(Matrix::Identity(3, 3));
    EXPECT_TRUE(r.invertible);
    EXPECT_NEAR(r.condition, 1.0, 1e-15);
    EXPECT_TRUE(verify_orthogonal(Matrix::Identity(3, 3)).orthogonal);

    Matrix s3(3, 3);
    s3 << 1, 1, 1, 1, -1, 0, 1, 0, -1;
    EXPECT_TRUE(verify_invertible(s3).invertible);
    EXPECT_FALSE(verify_orthogonal(s3).orthogonal);

    Matrix singular(2, 2);
    singular << 1, 2, 2, 4;
    EXPECT_FALSE(verify_invertible(singular).invertible);
    EXPECT_THROW(verify_orthogonal(Matrix::Zero(2, 3)), DimensionError);
}

TEST(OrthoTransform, UserMatricesMayBeNonOrthogonal) {
    Matrix s3(3, 3);
    s3 << 1, 1, 1, 1, -1, 0, 1, 0, -1;
    OrthoTransform t(s3, TransformKind::user);
    EXPECT_FALSE(t.is_orthogonal());
    EXPECT_LE((t.matrix() * t.inverse() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(OrthoTransform(s3, TransformKind::dct), InvalidArgument);
    Matrix singular(2, 2);
    singular << 1, 2, 2, 4;
    EXPECT_THROW(OrthoTransform(singular, TransformKind::user), InvalidArgument);
}
