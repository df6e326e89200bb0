#pragma once

// Time-reversal operator (basis permutation composed with complex
// conjugation), generation of time-reversal-invariant interactions, and
// unitary evolution. Strict-mode interactions commute with H_A + H_B by
// construction (block diagonal over total-energy shells); mean-conserving
// interactions are accepted by rejection sampling against the target state.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xft/errors.hpp"
#include "xft/frame.hpp"
#include "xft/operators.hpp"

namespace xft {

inline constexpr double kShellTol = 1e-9;

// Anti-unitary Theta = (basis permutation) o (complex conjugation).
struct TimeReversal {
    std::vector<int> permutation; // involution on product-basis indices

    int image(int flat_index) const { return permutation[static_cast<std::size_t>(flat_index)]; }

    bool is_identity() const {
        for (std::size_t k = 0; k < permutation.size(); ++k)
            if (permutation[k] != static_cast<int>(k)) return false;
        return true;
    }

    // Theta A Theta^dag = P conj(A) P^T
    ComplexOperator conjugate_operator(const ComplexOperator& a) const {
        const int n = a.dim();
        ComplexOperator out(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out.at(image(i), image(j)) = std::conj(a.at(i, j));
        return out;
    }
};

inline TimeReversal identity_reversal(int dim_total) {
    TimeReversal theta;
    theta.permutation.resize(static_cast<std::size_t>(dim_total));
    for (int k = 0; k < dim_total; ++k) theta.permutation[static_cast<std::size_t>(k)] = k;
    return theta;
}

// Validates involution and subsystem-energy preservation, so that
// H_A Theta|phi,chi> = E_phi Theta|phi,chi> (and likewise for B).
inline TimeReversal make_time_reversal(std::vector<int> permutation, const SystemFrame& frame) {
    const int n = frame.dim_total();
    if (permutation.empty()) return identity_reversal(n);
    if (static_cast<int>(permutation.size()) != n)
        throw InvalidSymmetryError("permutation length != product dimension");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int k = 0; k < n; ++k) {
        const int p = permutation[static_cast<std::size_t>(k)];
        if (p < 0 || p >= n) throw InvalidSymmetryError("permutation entry out of range");
        if (seen[static_cast<std::size_t>(p)]) throw InvalidSymmetryError("permutation is not a bijection");
        seen[static_cast<std::size_t>(p)] = true;
    }
    for (int k = 0; k < n; ++k) {
        if (permutation[static_cast<std::size_t>(permutation[static_cast<std::size_t>(k)])] != k)
            throw InvalidSymmetryError("time-reversal permutation must be an involution");
        const int p = permutation[static_cast<std::size_t>(k)];
        if (std::abs(frame.energy_a(frame.phi_of(k)) - frame.energy_a(frame.phi_of(p))) > 1e-12 ||
            std::abs(frame.energy_b(frame.chi_of(k)) - frame.energy_b(frame.chi_of(p))) > 1e-12)
            throw InvalidSymmetryError("permutation must preserve subsystem energies");
    }
    return TimeReversal{std::move(permutation)};
}

enum class InteractionMode { strict, mean_conserving };

inline const char* to_string(InteractionMode mode) {
    return mode == InteractionMode::strict ? "strict" : "mean_conserving";
}

struct InteractionSpec {
    InteractionMode mode = InteractionMode::strict;
    double t = 1.0;          // evolution duration
    double strength = 0.0;   // max-norm of H_int
    std::uint64_t seed = 0;
    double mean_tol = -1.0;  // mean-conserving acceptance; <0 selects the default
    bool swap_preset = false; // deterministic resonant exchange coupling instead of a random draw
    int retry_cap = 1000;
};

namespace detail {

// Box-Muller over mt19937_64; std::normal_distribution is implementation
// defined, this is not.
inline double standard_normal(std::mt19937_64& rng) {
    double u1 = 0.0;
    do {
        u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Indices grouped by total energy, chaining gaps <= tol; shells come out
// sorted by energy, members ascending.
inline std::vector<std::vector<int>> total_energy_shells(const SystemFrame& frame, double tol = kShellTol) {
    const int n = frame.dim_total();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(), [&frame](int i, int j) {
        return frame.total_energy(i) < frame.total_energy(j);
    });
    std::vector<std::vector<int>> shells;
    for (int k = 0; k < n; ++k) {
        const int idx = order[static_cast<std::size_t>(k)];
        if (shells.empty() ||
            frame.total_energy(idx) - frame.total_energy(shells.back().back()) > tol)
            shells.emplace_back();
        shells.back().push_back(idx);
    }
    for (auto& shell : shells) std::sort(shell.begin(), shell.end());
    return shells;
}

inline void symmetrize_under(const TimeReversal& theta, ComplexOperator& h) {
    if (theta.is_identity()) return;
    const int n = h.dim();
    ComplexOperator mapped(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mapped.at(theta.image(i), theta.image(j)) = h.at(i, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h.at(i, j) = 0.5 * (h.at(i, j) + mapped.at(i, j));
}

inline void rescale_to_max(ComplexOperator& h, double strength) {
    const double m = h.max_abs();
    if (m <= 0.0) return;
    const double s = strength / m;
    for (complex& z : h.entries()) z *= s;
}

} // namespace detail

// One draw of a real symmetric interaction, self-adjoint under Theta and
// scaled to max|entry| = strength. Strict mode restricts support to
// total-energy shells, which makes [H_int, H_A + H_B] = 0.
inline HermitianOperator random_trs_hamiltonian(const InteractionSpec& spec, const SystemFrame& frame,
                                                const TimeReversal& theta, std::mt19937_64& rng) {
    const int n = frame.dim_total();
    ComplexOperator h(n);
    if (spec.strength > 0.0) {
        if (spec.mode == InteractionMode::strict) {
            for (const auto& shell : detail::total_energy_shells(frame)) {
                for (std::size_t a = 0; a < shell.size(); ++a)
                    for (std::size_t b = a; b < shell.size(); ++b) {
                        const double g = detail::standard_normal(rng);
                        h.at(shell[a], shell[b]) = g;
                        h.at(shell[b], shell[a]) = g;
                    }
            }
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    const double g = detail::standard_normal(rng);
                    h.at(i, j) = g;
                    h.at(j, i) = g;
                }
        }
        detail::symmetrize_under(theta, h);
        detail::rescale_to_max(h, spec.strength);
    }
    return HermitianOperator(std::move(h));
}

// Resonant exchange coupling |phi,chi><chi,phi| of strength pi/(2t): at time t
// the transition probabilities realize a SWAP. Requires equal spectra.
inline HermitianOperator swap_interaction(const InteractionSpec& spec, const SystemFrame& frame) {
    if (frame.dim_a() != frame.dim_b())
        throw ValidationError("swap interaction requires equal subsystem dimensions");
    for (int k = 0; k < frame.dim_a(); ++k)
        if (std::abs(frame.energy_a(k) - frame.energy_b(k)) > 1e-12)
            throw ValidationError("swap interaction requires equal subsystem spectra");
    if (!(spec.t > 0.0)) throw ValidationError("swap interaction requires t > 0");
    const double g = 1.5707963267948966 / spec.t; // pi/2 / t
    const int d = frame.dim_a();
    ComplexOperator h(frame.dim_total());
    for (int phi = 0; phi < d; ++phi)
        for (int chi = 0; chi < d; ++chi) {
            if (phi == chi) continue;
            h.at(frame.flat(phi, chi), frame.flat(chi, phi)) = g;
        }
    return HermitianOperator(std::move(h));
}

namespace detail {

// exp(-i (H_free + H_int) t); strict interactions are integrated shell by
// shell so cross-shell amplitudes are exactly zero.
inline ComplexOperator evolution_unitary(const HermitianOperator& h_int, const SystemFrame& frame, double t,
                                         bool strict) {
    const int n = frame.dim_total();
    ComplexOperator u(n);
    if (strict) {
        for (const auto& shell : total_energy_shells(frame)) {
            const int m = static_cast<int>(shell.size());
            ComplexOperator block(m);
            for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) block.at(a, b) = h_int.at(shell[static_cast<std::size_t>(a)],
                                                                      shell[static_cast<std::size_t>(b)]);
                block.at(a, a) += frame.total_energy(shell[static_cast<std::size_t>(a)]);
            }
            const ComplexOperator ub = expm_i(HermitianOperator(std::move(block)), t);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    u.at(shell[static_cast<std::size_t>(a)], shell[static_cast<std::size_t>(b)]) = ub.at(a, b);
        }
        return u;
    }
    ComplexOperator h = h_int;
    for (int k = 0; k < n; ++k) h.at(k, k) += frame.total_energy(k);
    return expm_i(HermitianOperator(std::move(h)), t);
}

// Project onto the time-reversal-symmetric manifold U = P U^T P. The exact
// result is a fixed point; this removes rounding skew so twin transition
// probabilities match bitwise.
inline void enforce_trs(ComplexOperator& u, const TimeReversal& theta) {
    const int n = u.dim();
    ComplexOperator mapped(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mapped.at(theta.image(j), theta.image(i)) = u.at(i, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) u.at(i, j) = 0.5 * (u.at(i, j) + mapped.at(i, j));
}

} // namespace detail

struct Dynamics {
    HermitianOperator h_int;
    ComplexOperator u;
    int retries = 0;            // mean-conserving draws rejected before acceptance
    double mean_energy_drift = 0.0;
};

inline double check_energy_conservation(const DensityMatrix& rho, const ComplexOperator& u,
                                        const SystemFrame& frame);

// Full dynamics generation: draw H_int, build U, enforce the TRS fixed point.
// In mean-conserving mode, redraw until |tr[(U rho U^dag - rho)(H_A + H_B)]|
// <= mean_tol (default 1e-6 * max total energy), up to retry_cap draws.
inline Dynamics generate_dynamics(const InteractionSpec& spec, const SystemFrame& frame,
                                  const TimeReversal& theta, const DensityMatrix& rho) {
    std::mt19937_64 rng(spec.seed);

    if (spec.swap_preset) {
        HermitianOperator h_int = swap_interaction(spec, frame);
        ComplexOperator u = detail::evolution_unitary(h_int, frame, spec.t, true);
        detail::enforce_trs(u, theta);
        Dynamics dyn{std::move(h_int), std::move(u)};
        dyn.mean_energy_drift = check_energy_conservation(rho, dyn.u, frame);
        return dyn;
    }

    if (spec.mode == InteractionMode::strict) {
        HermitianOperator h_int = random_trs_hamiltonian(spec, frame, theta, rng);
        ComplexOperator u = detail::evolution_unitary(h_int, frame, spec.t, true);
        detail::enforce_trs(u, theta);
        Dynamics dyn{std::move(h_int), std::move(u)};
        dyn.mean_energy_drift = check_energy_conservation(rho, dyn.u, frame);
        return dyn;
    }

    double max_total = 0.0;
    for (int k = 0; k < frame.dim_total(); ++k) max_total = std::max(max_total, std::abs(frame.total_energy(k)));
    const double tol = spec.mean_tol >= 0.0 ? spec.mean_tol : 1e-6 * std::max(max_total, 1e-300);

    for (int attempt = 0; attempt <= spec.retry_cap; ++attempt) {
        HermitianOperator h_int = random_trs_hamiltonian(spec, frame, theta, rng);
        ComplexOperator u = detail::evolution_unitary(h_int, frame, spec.t, false);
        detail::enforce_trs(u, theta);
        const double drift = check_energy_conservation(rho, u, frame);
        if (drift <= tol) {
            Dynamics dyn{std::move(h_int), std::move(u)};
            dyn.retries = attempt;
            dyn.mean_energy_drift = drift;
            return dyn;
        }
    }
    throw GenerationError("mean-conserving interaction not found within " +
                          std::to_string(spec.retry_cap) + " retries (mean_tol " + std::to_string(tol) + ")");
}

inline DensityMatrix evolve(const ComplexOperator& u, const DensityMatrix& rho) {
    const double defect = unitarity_defect(u);
    if (defect > kUnitaryTol)
        throw NonUnitaryError("evolve: unitarity defect " + std::to_string(defect));
    ComplexOperator out = u * rho * u.adjoint();
    const int n = out.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const complex m = 0.5 * (out.at(i, j) + std::conj(out.at(j, i)));
            out.at(i, j) = m;
            out.at(j, i) = std::conj(m);
        }
    return DensityMatrix(std::move(out));
}

// max-norm of U - Theta^dag U^dag Theta (zero for time-reversal-symmetric U).
inline double check_trs(const ComplexOperator& u, const TimeReversal& theta) {
    const int n = u.dim();
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m = std::max(m, std::abs(u.at(i, j) - u.at(theta.image(j), theta.image(i))));
    return m;
}

// max over basis pairs of | |<f|U|i>|^2 - |<i*|U|f*>|^2 |.
inline double transition_symmetry_deviation(const ComplexOperator& u, const TimeReversal& theta) {
    const int n = u.dim();
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int f = 0; f < n; ++f) {
            const double forward = std::norm(u.at(f, i));
            const double reversed = std::norm(u.at(theta.image(i), theta.image(f)));
            m = std::max(m, std::abs(forward - reversed));
        }
    return m;
}

// |tr[(U rho U^dag - rho)(H_A + H_B)]| evaluated in the product energy basis.
inline double check_energy_conservation(const DensityMatrix& rho, const ComplexOperator& u,
                                        const SystemFrame& frame) {
    const int n = frame.dim_total();
    if (rho.dim() != n || u.dim() != n) throw DimensionError("check_energy_conservation: dimension mismatch");
    const DensityMatrix evolved = evolve(u, rho);
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
        acc += frame.total_energy(k) * (evolved.at(k, k).real() - rho.at(k, k).real());
    return std::abs(acc);
}

} // namespace xft
