#pragma once

// Dense complex linear algebra for small (desk-scale) quantum systems:
// tensor products, partial traces, Hermitian eigendecomposition, spectral
// unitary exponentials and von Neumann entropy. Units: hbar = k_B = 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xft/errors.hpp"

namespace xft {

using complex = std::complex<double>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kEigenClipTol = 1e-12;

// Square complex matrix, row-major, value semantics.
class ComplexOperator {
  public:
    explicit ComplexOperator(int dim) : dim_(dim), entries_(checked_size(dim)) {}

    ComplexOperator(int dim, std::vector<complex> entries) : dim_(dim), entries_(std::move(entries)) {
        if (entries_.size() != checked_size(dim))
            throw DimensionError("entry count does not match dim^2");
    }

    static ComplexOperator identity(int dim) {
        ComplexOperator op(dim);
        for (int i = 0; i < dim; ++i) op.at(i, i) = 1.0;
        return op;
    }

    static ComplexOperator diagonal(std::span<const double> values) {
        ComplexOperator op(static_cast<int>(values.size()));
        for (int i = 0; i < op.dim(); ++i) op.at(i, i) = values[static_cast<std::size_t>(i)];
        return op;
    }

    int dim() const { return dim_; }

    complex& at(int i, int j) { return entries_[static_cast<std::size_t>(i) * dim_ + j]; }
    const complex& at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * dim_ + j]; }

    std::span<const complex> entries() const { return entries_; }
    std::span<complex> entries() { return entries_; }

    complex trace() const {
        complex t = 0.0;
        for (int i = 0; i < dim_; ++i) t += at(i, i);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (const complex& z : entries_) m = std::max(m, std::abs(z));
        return m;
    }

    ComplexOperator adjoint() const {
        ComplexOperator out(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) out.at(i, j) = std::conj(at(j, i));
        return out;
    }

    ComplexOperator transpose() const {
        ComplexOperator out(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) out.at(i, j) = at(j, i);
        return out;
    }

    ComplexOperator conjugate() const {
        ComplexOperator out(dim_);
        for (std::size_t k = 0; k < entries_.size(); ++k) out.entries_[k] = std::conj(entries_[k]);
        return out;
    }

    double hermiticity_defect() const {
        double m = 0.0;
        for (int i = 0; i < dim_; ++i)
            for (int j = i; j < dim_; ++j) m = std::max(m, std::abs(at(i, j) - std::conj(at(j, i))));
        return m;
    }

    friend ComplexOperator operator+(const ComplexOperator& a, const ComplexOperator& b) {
        check_same_dim(a, b);
        ComplexOperator out(a.dim_);
        for (std::size_t k = 0; k < a.entries_.size(); ++k) out.entries_[k] = a.entries_[k] + b.entries_[k];
        return out;
    }

    friend ComplexOperator operator-(const ComplexOperator& a, const ComplexOperator& b) {
        check_same_dim(a, b);
        ComplexOperator out(a.dim_);
        for (std::size_t k = 0; k < a.entries_.size(); ++k) out.entries_[k] = a.entries_[k] - b.entries_[k];
        return out;
    }

    friend ComplexOperator operator*(const ComplexOperator& a, const ComplexOperator& b) {
        check_same_dim(a, b);
        const int n = a.dim_;
        ComplexOperator out(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const complex aik = a.at(i, k);
                if (aik == complex{}) continue;
                for (int j = 0; j < n; ++j) out.at(i, j) += aik * b.at(k, j);
            }
        }
        return out;
    }

    friend ComplexOperator operator*(complex s, const ComplexOperator& a) {
        ComplexOperator out(a.dim_);
        for (std::size_t k = 0; k < a.entries_.size(); ++k) out.entries_[k] = s * a.entries_[k];
        return out;
    }

    friend ComplexOperator operator*(const ComplexOperator& a, complex s) { return s * a; }

  private:
    static std::size_t checked_size(int dim) {
        if (dim < 1) throw DimensionError("operator dimension must be >= 1");
        return static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
    }

    static void check_same_dim(const ComplexOperator& a, const ComplexOperator& b) {
        if (a.dim_ != b.dim_) throw DimensionError("operator dimensions differ");
    }

    int dim_;
    std::vector<complex> entries_;
};

inline double max_abs_diff(const ComplexOperator& a, const ComplexOperator& b) {
    if (a.dim() != b.dim()) throw DimensionError("operator dimensions differ");
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a.at(i, j) - b.at(i, j)));
    return m;
}

inline double unitarity_defect(const ComplexOperator& u) {
    return max_abs_diff(u.adjoint() * u, ComplexOperator::identity(u.dim()));
}

// Self-adjoint operator; validated at construction.
class HermitianOperator : public ComplexOperator {
  public:
    explicit HermitianOperator(ComplexOperator op) : ComplexOperator(std::move(op)) {
        const double defect = hermiticity_defect();
        if (defect > kHermitianTol)
            throw NumericalError("operator is not self-adjoint (defect " + std::to_string(defect) + ")");
    }

    static HermitianOperator from_diagonal(std::span<const double> values) {
        return HermitianOperator(ComplexOperator::diagonal(values));
    }
};

struct EighResult {
    std::vector<double> eigenvalues; // ascending
    ComplexOperator eigenvectors;    // orthonormal columns, column k pairs with eigenvalues[k]
};

// Cyclic Jacobi with unitary plane rotations. Quadratic convergence; fine for
// the dimensions this library targets (<= a few hundred).
inline EighResult eigh(const ComplexOperator& h) {
    const int n = h.dim();
    if (h.hermiticity_defect() > kHermitianTol) throw NumericalError("eigh requires a self-adjoint input");

    ComplexOperator a = h;
    ComplexOperator v = ComplexOperator::identity(n);

    const double scale = std::max(a.max_abs(), 1e-300);
    const double off_tol = 1e-15 * scale;

    const int max_sweeps = 100;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off_max = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off_max = std::max(off_max, std::abs(a.at(p, q)));
        if (off_max <= off_tol) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const complex apq = a.at(p, q);
                const double mag = std::abs(apq);
                if (mag <= off_tol * 1e-2) continue;

                const complex phase = apq / mag;
                const double tau = (a.at(q, q).real() - a.at(p, p).real()) / (2.0 * mag);
                const double sign = tau >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const complex sp = s * phase;

                // A <- U^dag A U with U = [[c, s*phase], [-s*conj(phase), c]]
                for (int r = 0; r < n; ++r) {
                    const complex arp = a.at(r, p);
                    const complex arq = a.at(r, q);
                    a.at(r, p) = c * arp - std::conj(sp) * arq;
                    a.at(r, q) = sp * arp + c * arq;
                }
                for (int r = 0; r < n; ++r) {
                    const complex apr = a.at(p, r);
                    const complex aqr = a.at(q, r);
                    a.at(p, r) = c * apr - sp * aqr;
                    a.at(q, r) = std::conj(sp) * apr + c * aqr;
                }
                for (int r = 0; r < n; ++r) {
                    const complex vrp = v.at(r, p);
                    const complex vrq = v.at(r, q);
                    v.at(r, p) = c * vrp - std::conj(sp) * vrq;
                    v.at(r, q) = sp * vrp + c * vrq;
                }
            }
        }
    }
    if (sweep == max_sweeps) throw NumericalError("Jacobi eigensolver did not converge");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](int i, int j) { return a.at(i, i).real() < a.at(j, j).real(); });

    EighResult result{std::vector<double>(static_cast<std::size_t>(n)), ComplexOperator(n)};
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        result.eigenvalues[static_cast<std::size_t>(k)] = a.at(src, src).real();
        for (int r = 0; r < n; ++r) result.eigenvectors.at(r, k) = v.at(r, src);
    }
    return result;
}

// Positive unit-trace operator; validated at construction.
class DensityMatrix : public HermitianOperator {
  public:
    explicit DensityMatrix(ComplexOperator op) : HermitianOperator(std::move(op)) {
        const double tr = trace().real();
        if (std::abs(tr - 1.0) > 1e-12)
            throw NumericalError("density matrix trace " + std::to_string(tr) + " != 1");
        const auto eig = eigh(*this);
        if (eig.eigenvalues.front() < -kEigenClipTol)
            throw NumericalError("density matrix has eigenvalue " +
                                 std::to_string(eig.eigenvalues.front()) + " < 0");
    }

    static DensityMatrix from_diagonal(std::span<const double> pmf) {
        return DensityMatrix(ComplexOperator::diagonal(pmf));
    }
};

inline ComplexOperator kron(const ComplexOperator& a, const ComplexOperator& b) {
    const int da = a.dim();
    const int db = b.dim();
    ComplexOperator out(da * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j) {
            const complex aij = a.at(i, j);
            if (aij == complex{}) continue;
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l) out.at(i * db + k, j * db + l) = aij * b.at(k, l);
        }
    return out;
}

enum class Subsystem { A, B };

inline DensityMatrix partial_trace(const DensityMatrix& rho, int dim_a, int dim_b, Subsystem keep) {
    if (dim_a < 1 || dim_b < 1 || rho.dim() != dim_a * dim_b)
        throw DimensionError("partial_trace: dim(rho) != dim_a * dim_b");
    if (keep == Subsystem::A) {
        ComplexOperator out(dim_a);
        for (int i = 0; i < dim_a; ++i)
            for (int j = 0; j < dim_a; ++j) {
                complex acc = 0.0;
                for (int k = 0; k < dim_b; ++k) acc += rho.at(i * dim_b + k, j * dim_b + k);
                out.at(i, j) = acc;
            }
        return DensityMatrix(std::move(out));
    }
    ComplexOperator out(dim_b);
    for (int k = 0; k < dim_b; ++k)
        for (int l = 0; l < dim_b; ++l) {
            complex acc = 0.0;
            for (int i = 0; i < dim_a; ++i) acc += rho.at(i * dim_b + k, i * dim_b + l);
            out.at(k, l) = acc;
        }
    return DensityMatrix(std::move(out));
}

// exp(-i H t) computed spectrally, so the result is unitary up to eigensolver noise.
inline ComplexOperator expm_i(const HermitianOperator& h, double t) {
    const int n = h.dim();
    const EighResult eig = eigh(h);
    std::vector<complex> phases(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double angle = -eig.eigenvalues[static_cast<std::size_t>(k)] * t;
        phases[static_cast<std::size_t>(k)] = complex(std::cos(angle), std::sin(angle));
    }
    const ComplexOperator& v = eig.eigenvectors;
    ComplexOperator out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            complex acc = 0.0;
            for (int k = 0; k < n; ++k) acc += v.at(i, k) * phases[static_cast<std::size_t>(k)] * std::conj(v.at(j, k));
            out.at(i, j) = acc;
        }
    return out;
}

// -sum lambda ln lambda in nats, with 0 ln 0 := 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    const EighResult eig = eigh(rho);
    double s = 0.0;
    for (double lambda : eig.eigenvalues) {
        if (lambda < -kEigenClipTol || lambda > 1.0 + kEigenClipTol)
            throw NumericalError("entropy: eigenvalue " + std::to_string(lambda) + " outside [0,1]");
        const double p = std::clamp(lambda, 0.0, 1.0);
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

} // namespace xft
