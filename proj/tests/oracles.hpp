#pragma once

// Reference implementations used only by the tests. They follow the
// definitions entry by entry and never call the library's transform-domain
// code paths.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include <tsdp/tensor.hpp>

namespace oracle {

using tsdp::Matrix;
using tsdp::Tensor3;
using tsdp::Vector;

inline Tensor3 mode3(Tensor3 const& a, Matrix const& m) {
    return Tensor3::generate(a.n1(), a.n2(), static_cast<std::size_t>(m.rows()),
                             [&](std::size_t i, std::size_t j, std::size_t k) {
                                 double s = 0.0;
                                 for (std::size_t l = 0; l < a.n3(); ++l)
                                     s += m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) * a(i, j, l);
                                 return s;
                             });
}

/// a *M b for tubes given as vectors: M^{-1}((M a) .* (M b)) with an explicit inverse.
inline Vector tube_product(Vector const& a, Vector const& b, Matrix const& m) {
    Matrix const inv = m.inverse();
    Vector const ah = m * a;
    Vector const bh = m * b;
    Vector prod(ah.size());
    for (Eigen::Index k = 0; k < ah.size(); ++k)
        prod[k] = ah[k] * bh[k];
    return inv * prod;
}

/// C_ij = sum_l a_il *M b_lj over tubes.
inline Tensor3 starm(Tensor3 const& a, Tensor3 const& b, Matrix const& m) {
    std::size_t const n3 = a.n3();
    std::vector<double> data(a.n1() * b.n2() * n3, 0.0);
    for (std::size_t i = 0; i < a.n1(); ++i)
        for (std::size_t j = 0; j < b.n2(); ++j) {
            Vector acc = Vector::Zero(static_cast<Eigen::Index>(n3));
            for (std::size_t l = 0; l < a.n2(); ++l) {
                Vector x(static_cast<Eigen::Index>(n3)), y(static_cast<Eigen::Index>(n3));
                for (std::size_t k = 0; k < n3; ++k) {
                    x[static_cast<Eigen::Index>(k)] = a(i, l, k);
                    y[static_cast<Eigen::Index>(k)] = b(l, j, k);
                }
                acc += tube_product(x, y, m);
            }
            for (std::size_t k = 0; k < n3; ++k)
                data[(k * a.n1() + i) * b.n2() + j] = acc[static_cast<Eigen::Index>(k)];
        }
    return Tensor3(a.n1(), b.n2(), n3, std::move(data));
}

inline double inner(Tensor3 const& a, Tensor3 const& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.n1(); ++i)
        for (std::size_t j = 0; j < a.n2(); ++j)
            for (std::size_t k = 0; k < a.n3(); ++k)
                s += a(i, j, k) * b(i, j, k);
    return s;
}

inline Tensor3 transpose(Tensor3 const& a) {
    return Tensor3::generate(a.n2(), a.n1(), a.n3(), [&](std::size_t i, std::size_t j, std::size_t k) { return a(j, i, k); });
}

/// Symmetric random tensor (A + A^T) / 2.
inline Tensor3 symmetric(Tensor3 const& a) {
    return Tensor3::generate(a.n1(), a.n1(), a.n3(),
                             [&](std::size_t i, std::size_t j, std::size_t k) { return 0.5 * (a(i, j, k) + a(j, i, k)); });
}

/// Slices of A x_3 M computed entrywise.
inline std::vector<Matrix> slices_of(Tensor3 const& a, Matrix const& m) {
    Tensor3 const hat = mode3(a, m);
    std::vector<Matrix> out(hat.n3(), Matrix(static_cast<Eigen::Index>(a.n1()), static_cast<Eigen::Index>(a.n2())));
    for (std::size_t k = 0; k < hat.n3(); ++k)
        for (std::size_t i = 0; i < a.n1(); ++i)
            for (std::size_t j = 0; j < a.n2(); ++j)
                out[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hat(i, j, k);
    return out;
}

/// Sum of singular values of every transformed slice.
inline double nuclear_norm(Tensor3 const& a, Matrix const& m) {
    double s = 0.0;
    for (auto const& sl : slices_of(a, m))
        s += Eigen::JacobiSVD<Matrix>(sl).singularValues().sum();
    return s;
}

/// PSD by Cholesky of the shifted slice: A_hat_k + shift I is positive definite for every k.
inline bool psd_by_cholesky(Tensor3 const& a, Matrix const& m, double shift) {
    for (auto const& sl : slices_of(a, m)) {
        Matrix const s = 0.5 * (sl + sl.transpose()) + shift * Matrix::Identity(sl.rows(), sl.cols());
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success)
            return false;
    }
    return true;
}

} // namespace oracle
