#pragma once

// Portable seeded random numbers.
//
// The seed -> value map is part of the compatibility contract (random
// transforms, synthetic fixtures), so nothing here goes through
// std::*_distribution, whose output is implementation-defined.
//
//   engine   std::mt19937_64 seeded with the user seed
//   uniform  (u >> 11) * 2^-53, in [0, 1)
//   normal   Box-Muller on two uniforms u1, u2 (u1 mapped to (0, 1]):
//            r = sqrt(-2 ln u1), first draw r cos(2 pi u2), second r sin(2 pi u2)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

#include "tensor.hpp"

namespace tsdp {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double normal() {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double const u1 = 1.0 - uniform();
        double const u2 = uniform();
        double const r = std::sqrt(-2.0 * std::log(u1));
        double const theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        return r * std::cos(theta);
    }

    /// Matrix filled row-major with standard normals.
    Matrix normal_matrix(std::size_t rows, std::size_t cols) {
        Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = normal();
        return m;
    }

    Vector normal_vector(std::size_t n) {
        Vector v(static_cast<Eigen::Index>(n));
        for (auto& x : v)
            x = normal();
        return v;
    }

    /// Tensor filled in canonical storage order with standard normals.
    Tensor3 normal_tensor(std::size_t n1, std::size_t n2, std::size_t n3) {
        std::vector<double> data(n1 * n2 * n3);
        for (auto& x : data)
            x = normal();
        return Tensor3(n1, n2, n3, std::move(data));
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

} // namespace tsdp
