// Shared helpers for the test suites: seeded random matrix factories.
#pragma once

#include <random>

#include "laplearn/matcore.hpp"

namespace testutil {

using laplearn::Complex;
using laplearn::ComplexMatrix;
using laplearn::Index;
using laplearn::RealMatrix;

inline double uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gauss(std::mt19937_64& rng) {
    double u1 = uniform(rng);
    while (u1 <= 0.0) u1 = uniform(rng);
    const double u2 = uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline RealMatrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    RealMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

inline RealMatrix random_spd(Index p, std::mt19937_64& rng, double ridge = 0.5) {
    RealMatrix a = random_matrix(p, p, rng);
    RealMatrix m = a * a.transpose() / static_cast<double>(p);
    m.diagonal().array() += ridge;
    return m;
}

inline ComplexMatrix random_complex_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return m;
}

inline ComplexMatrix random_hermitian_pd(Index p, std::mt19937_64& rng, double ridge = 0.5) {
    ComplexMatrix a = random_complex_matrix(p, p, rng);
    ComplexMatrix m = a * a.adjoint() / static_cast<double>(p);
    m.diagonal().array() += Complex(ridge, 0.0);
    return 0.5 * (m + m.adjoint().eval());
}

inline laplearn::RealMatrix random_symmetric(Index p, std::mt19937_64& rng) {
    RealMatrix a = random_matrix(p, p, rng);
    return 0.5 * (a + a.transpose()).eval();
}

}  // namespace testutil
