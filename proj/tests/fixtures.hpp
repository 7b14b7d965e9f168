#pragma once

// Small representations and transforms shared by several test files.

#include <cmath>
#include <vector>

#include <tsdp/algebra.hpp>
#include <tsdp/equivariance.hpp>

namespace fixture {

using tsdp::Matrix;

inline Matrix perm(std::vector<int> const& image) {
    auto const n = static_cast<Eigen::Index>(image.size());
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        p(image[static_cast<std::size_t>(i)], i) = 1.0;
    return p;
}

/// Permutation representation of S3 by a transposition and a 3-cycle.
inline tsdp::GroupRep s3() {
    Matrix sigma(3, 3), tau(3, 3);
    sigma << 0, 1, 0, 1, 0, 0, 0, 0, 1;
    tau << 0, 0, 1, 1, 0, 0, 0, 1, 0;
    return tsdp::GroupRep({sigma, tau});
}

/// Non-orthogonal symmetry-adapted basis for S3: rows (1,1,1), (1,-1,0), (1,0,-1).
inline Matrix s3_basis() {
    Matrix m(3, 3);
    m << 1, 1, 1, 1, -1, 0, 1, 0, -1;
    return m;
}

/// Orthogonal symmetry-adapted basis for S3.
inline Matrix s3_orthogonal_basis() {
    double const a = 1.0 / std::sqrt(3.0), b = 1.0 / std::sqrt(2.0), c = 1.0 / std::sqrt(6.0);
    Matrix m(3, 3);
    m << -a, -a, -a, b, 0, -b, c, -2 * c, c;
    return m;
}

/// S2 acting on R^3 by swapping the last two coordinates.
inline tsdp::GroupRep s2_swap23() {
    Matrix s(3, 3);
    s << 1, 0, 0, 0, 0, 1, 0, 1, 0;
    return tsdp::GroupRep({s});
}

/// [[1, 0, 0], [0, a, a], [0, a, -a]] with a = 1/sqrt 2.
inline Matrix swap23_basis() {
    double const a = 1.0 / std::sqrt(2.0);
    Matrix m(3, 3);
    m << 1, 0, 0, 0, a, a, 0, a, -a;
    return m;
}

/// Rotation by a quarter turn in the last two coordinates of R^3.
inline tsdp::GroupRep rotation_block() {
    Matrix r(3, 3);
    r << 1, 0, 0, 0, 0, -1, 0, 1, 0;
    return tsdp::GroupRep({r});
}

inline tsdp::StarMContext user_ctx(Matrix const& m) {
    return tsdp::StarMContext(tsdp::OrthoTransform(m, tsdp::TransformKind::user));
}

} // namespace fixture
