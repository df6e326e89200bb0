#pragma once

// Shared generators for the test suites: seeded random Hermitian operators,
// random unitaries, Pauli matrices and frequently used Gibbs probabilities.

#include <cmath>
#include <random>
#include <vector>

#include "xft/operators.hpp"

namespace xft_test {

using xft::complex;
using xft::ComplexOperator;
using xft::HermitianOperator;

inline ComplexOperator pauli_x() {
    ComplexOperator op(2);
    op.at(0, 1) = 1.0;
    op.at(1, 0) = 1.0;
    return op;
}

inline ComplexOperator pauli_y() {
    ComplexOperator op(2);
    op.at(0, 1) = complex(0.0, -1.0);
    op.at(1, 0) = complex(0.0, 1.0);
    return op;
}

inline HermitianOperator random_hermitian(int dim, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    ComplexOperator op(dim);
    for (int i = 0; i < dim; ++i) {
        op.at(i, i) = normal(rng);
        for (int j = i + 1; j < dim; ++j) {
            const complex z(normal(rng), normal(rng));
            op.at(i, j) = z;
            op.at(j, i) = std::conj(z);
        }
    }
    return HermitianOperator(std::move(op));
}

inline ComplexOperator random_unitary(int dim, std::mt19937_64& rng) {
    return xft::expm_i(random_hermitian(dim, rng), 1.0);
}

// Gibbs probabilities for a two-level system with gap 1.
inline double gibbs_p0(double beta) { return 1.0 / (1.0 + std::exp(-beta)); }
inline double gibbs_p1(double beta) { return std::exp(-beta) / (1.0 + std::exp(-beta)); }

} // namespace xft_test
