#pragma once

// Unscrambled Sobol sequence in up to 16 dimensions, 32-bit resolution.
//
// Direction numbers: Joe & Kuo, "new-joe-kuo-6.21201" table
// (https://web.maths.unsw.edu.au/~fkuo/sobol/), rows for dimensions 2..16.
// These are the same numbers SciPy's qmc.Sobol ships; tests/test_sampling.cpp
// pins points produced by scipy.stats.qmc.Sobol(d=16, scramble=False, bits=32).

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"

namespace casmart {

inline constexpr int sobol_max_dim = 16;
inline constexpr int sobol_bits = 32;

namespace detail {

struct SobolPolynomial {
    unsigned degree;
    unsigned coefficients; // interior coefficients a
    std::array<std::uint32_t, 6> initial; // m_1..m_degree
};

inline constexpr std::array<SobolPolynomial, sobol_max_dim - 1> sobol_table{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
}};

using SobolDirections = std::array<std::array<std::uint32_t, sobol_bits>, sobol_max_dim>;

inline const SobolDirections& sobol_directions()
{
    static const SobolDirections table = [] {
        SobolDirections v{};
        for (int k = 0; k < sobol_bits; ++k)
            v[0][k] = std::uint32_t{1} << (sobol_bits - 1 - k);
        for (int j = 1; j < sobol_max_dim; ++j) {
            const auto& p = sobol_table[static_cast<std::size_t>(j - 1)];
            const int s = static_cast<int>(p.degree);
            for (int k = 0; k < s; ++k)
                v[j][k] = p.initial[static_cast<std::size_t>(k)] << (sobol_bits - 1 - k);
            for (int k = s; k < sobol_bits; ++k) {
                std::uint32_t value = v[j][k - s] ^ (v[j][k - s] >> s);
                for (int i = 1; i < s; ++i)
                    if ((p.coefficients >> (s - 1 - i)) & 1u)
                        value ^= v[j][k - i];
                v[j][k] = value;
            }
        }
        return v;
    }();
    return table;
}

} // namespace detail

/// Raw 32-bit integer coordinates of Sobol point `index`, computed directly
/// from the Gray code of the index.
inline std::array<std::uint32_t, sobol_max_dim> sobol_integer_point(std::uint64_t index, int dim)
{
    const auto& v = detail::sobol_directions();
    const std::uint64_t gray = index ^ (index >> 1);
    std::array<std::uint32_t, sobol_max_dim> x{};
    for (int k = 0; k < sobol_bits; ++k) {
        if (!((gray >> k) & 1u))
            continue;
        for (int j = 0; j < dim; ++j)
            x[static_cast<std::size_t>(j)] ^= v[j][k];
    }
    return x;
}

/// Points skip, skip+1, ..., skip+n-1 of the sequence in [0, 1)^dim, as rows.
inline Eigen::MatrixXd sobol_unit(int dim, std::size_t n, std::uint64_t skip)
{
    if (dim < 1 || dim > sobol_max_dim)
        throw CapabilityError("sobol: dimension " + std::to_string(dim) +
                              " outside the provisioned range 1.." + std::to_string(sobol_max_dim));
    if (skip + n > (std::uint64_t{1} << sobol_bits))
        throw CapabilityError("sobol: index range exceeds 2^32");
    constexpr double scale = 1.0 / 4294967296.0;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = sobol_integer_point(skip + i, dim);
        for (int j = 0; j < dim; ++j)
            out(static_cast<Eigen::Index>(i), j) = static_cast<double>(p[static_cast<std::size_t>(j)]) * scale;
    }
    return out;
}

} // namespace casmart
