#pragma once

// Gibbs states and correlated joint states with exactly thermal marginals:
// product, classically coupled (comonotone), thermofield pure, and convex
// interpolations between product and a correlated reference.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "xft/errors.hpp"
#include "xft/frame.hpp"
#include "xft/operators.hpp"

namespace xft {

inline constexpr double kBetaSpreadCap = 700.0;
inline constexpr double kMarginalTol = 1e-10;

// Subsystem Hamiltonian + inverse temperature, with the spectral data and
// Gibbs pmf cached. pmf[k] pairs with energies[k] (ascending).
struct ThermalSpec {
    HermitianOperator h;
    double beta = 0.0;
    std::vector<double> energies;
    ComplexOperator basis;
    std::vector<double> pmf;
    double partition_fn = 0.0;
    double log_partition_fn = 0.0;

    int dim() const { return h.dim(); }
    double temperature() const { return 1.0 / beta; }
};

inline ThermalSpec make_thermal_spec(HermitianOperator h, double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw RangeError("beta must be finite and >= 0");
    EighResult eig = eigh(h);
    const double e_min = eig.eigenvalues.front();
    const double e_max = eig.eigenvalues.back();
    if (beta * (e_max - e_min) > kBetaSpreadCap)
        throw RangeError("beta * spectral spread exceeds " + std::to_string(kBetaSpreadCap) +
                         "; shift the spectrum (E -> E + c leaves the Gibbs state unchanged)");

    const std::size_t n = eig.eigenvalues.size();
    std::vector<double> pmf(n);
    double z_shifted = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        pmf[k] = std::exp(-beta * (eig.eigenvalues[k] - e_min));
        z_shifted += pmf[k];
    }
    for (double& p : pmf) p /= z_shifted;

    ThermalSpec spec{std::move(h), beta, std::move(eig.eigenvalues), std::move(eig.eigenvectors),
                     std::move(pmf), 0.0, 0.0};
    spec.log_partition_fn = std::log(z_shifted) - beta * e_min;
    spec.partition_fn = std::exp(spec.log_partition_fn);
    return spec;
}

enum class StateFamily { product, classical_coupled, thermofield_pure, interpolated };

inline const char* to_string(StateFamily family) {
    switch (family) {
        case StateFamily::product: return "product";
        case StateFamily::classical_coupled: return "classical_coupled";
        case StateFamily::thermofield_pure: return "thermofield_pure";
        case StateFamily::interpolated: return "interpolated";
    }
    return "?";
}

struct JointStateSpec {
    StateFamily family = StateFamily::product;
    double lambda = 0.0; // correlation strength for classical_coupled / interpolated
    ThermalSpec spec_a;
    ThermalSpec spec_b;
};

inline SystemFrame frame_of(const JointStateSpec& spec) {
    return SystemFrame{spec.spec_a.energies, spec.spec_b.energies};
}

// rho = exp(-beta H)/Z, diagonal in the eigenbasis of H.
inline DensityMatrix gibbs_state(const ThermalSpec& spec) {
    const int n = spec.dim();
    const ComplexOperator& v = spec.basis;
    ComplexOperator out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            complex acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += v.at(i, k) * spec.pmf[static_cast<std::size_t>(k)] * std::conj(v.at(j, k));
            out.at(i, j) = acc;
        }
    // symmetrize away rounding skew before validation
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const complex m = 0.5 * (out.at(i, j) + std::conj(out.at(j, i)));
            out.at(i, j) = m;
            out.at(j, i) = std::conj(m);
        }
    return DensityMatrix(std::move(out));
}

inline DensityMatrix product_state(const DensityMatrix& rho_a, const DensityMatrix& rho_b) {
    return DensityMatrix(kron(rho_a, rho_b));
}

namespace detail {

// Comonotone coupling: sort both pmfs descending (ties by ascending index),
// run the north-west-corner rule, then map back to original labels. Marginals
// equal the inputs by construction.
inline std::vector<double> comonotone_coupling(const std::vector<double>& p, const std::vector<double>& r) {
    const int m = static_cast<int>(p.size());
    const int n = static_cast<int>(r.size());
    std::vector<int> order_p(static_cast<std::size_t>(m)), order_r(static_cast<std::size_t>(n));
    std::iota(order_p.begin(), order_p.end(), 0);
    std::iota(order_r.begin(), order_r.end(), 0);
    std::stable_sort(order_p.begin(), order_p.end(),
                     [&p](int i, int j) { return p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(j)]; });
    std::stable_sort(order_r.begin(), order_r.end(),
                     [&r](int i, int j) { return r[static_cast<std::size_t>(i)] > r[static_cast<std::size_t>(j)]; });

    std::vector<double> coupling(static_cast<std::size_t>(m) * n, 0.0);
    int i = 0, j = 0;
    double rem_p = p[static_cast<std::size_t>(order_p[0])];
    double rem_r = r[static_cast<std::size_t>(order_r[0])];
    while (i < m && j < n) {
        const double mass = std::min(rem_p, rem_r);
        coupling[static_cast<std::size_t>(order_p[static_cast<std::size_t>(i)]) * n +
                 order_r[static_cast<std::size_t>(j)]] += mass;
        rem_p -= mass;
        rem_r -= mass;
        const bool advance_p = rem_p <= 1e-15;
        const bool advance_r = rem_r <= 1e-15;
        if (advance_p) {
            ++i;
            if (i < m) rem_p = p[static_cast<std::size_t>(order_p[static_cast<std::size_t>(i)])];
        }
        if (advance_r) {
            ++j;
            if (j < n) rem_r = r[static_cast<std::size_t>(order_r[static_cast<std::size_t>(j)])];
        }
        if (!advance_p && !advance_r) break; // cannot happen; guards infinite loop
    }
    return coupling;
}

} // namespace detail

// Diagonal state in the product energy basis with joint pmf
// (1-lambda) p x r + lambda C, where C is the comonotone coupling of the two
// Gibbs pmfs. Both marginals equal the Gibbs pmfs for every lambda.
inline DensityMatrix classical_coupled_state(const JointStateSpec& spec) {
    if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) throw RangeError("lambda must lie in [0,1]");
    const std::vector<double>& p = spec.spec_a.pmf;
    const std::vector<double>& r = spec.spec_b.pmf;
    const int da = static_cast<int>(p.size());
    const int db = static_cast<int>(r.size());
    const std::vector<double> coupling = detail::comonotone_coupling(p, r);

    std::vector<double> joint(static_cast<std::size_t>(da) * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < db; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * db + j;
            joint[k] = (1.0 - spec.lambda) * (p[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(j)]) +
                       spec.lambda * coupling[k];
        }
    return DensityMatrix::from_diagonal(joint);
}

// |psi> = sum_k c_k |phi_{a_k}> x |chi_{b_k}>, pairing the k-th largest Gibbs
// probabilities of A and B (ties by ascending energy index). Rank one, with
// both marginals thermal.
inline DensityMatrix thermofield_pure_state(const JointStateSpec& spec) {
    const std::vector<double>& p = spec.spec_a.pmf;
    const std::vector<double>& r = spec.spec_b.pmf;
    if (p.size() != r.size())
        throw IncompatibleSpectraError("thermofield_pure_state requires equal subsystem dimensions");
    const int d = static_cast<int>(p.size());

    std::vector<int> order_a(static_cast<std::size_t>(d)), order_b(static_cast<std::size_t>(d));
    std::iota(order_a.begin(), order_a.end(), 0);
    std::iota(order_b.begin(), order_b.end(), 0);
    std::stable_sort(order_a.begin(), order_a.end(),
                     [&p](int i, int j) { return p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(j)]; });
    std::stable_sort(order_b.begin(), order_b.end(),
                     [&r](int i, int j) { return r[static_cast<std::size_t>(i)] > r[static_cast<std::size_t>(j)]; });

    double max_dev = 0.0;
    for (int k = 0; k < d; ++k)
        max_dev = std::max(max_dev, std::abs(p[static_cast<std::size_t>(order_a[static_cast<std::size_t>(k)])] -
                                             r[static_cast<std::size_t>(order_b[static_cast<std::size_t>(k)])]));
    if (max_dev > 1e-10)
        throw IncompatibleSpectraError("Gibbs pmfs differ as sorted vectors (max deviation " +
                                       std::to_string(max_dev) + ")");

    std::vector<double> amplitude(static_cast<std::size_t>(d));
    double norm = 0.0;
    for (int k = 0; k < d; ++k) {
        const double pa = p[static_cast<std::size_t>(order_a[static_cast<std::size_t>(k)])];
        const double pb = r[static_cast<std::size_t>(order_b[static_cast<std::size_t>(k)])];
        amplitude[static_cast<std::size_t>(k)] = std::sqrt(0.5 * (pa + pb));
        norm += 0.5 * (pa + pb);
    }
    const double inv = 1.0 / std::sqrt(norm);
    for (double& c : amplitude) c *= inv;

    ComplexOperator out(d * d);
    for (int k = 0; k < d; ++k) {
        const int row = order_a[static_cast<std::size_t>(k)] * d + order_b[static_cast<std::size_t>(k)];
        for (int l = 0; l < d; ++l) {
            const int col = order_a[static_cast<std::size_t>(l)] * d + order_b[static_cast<std::size_t>(l)];
            out.at(row, col) = amplitude[static_cast<std::size_t>(k)] * amplitude[static_cast<std::size_t>(l)];
        }
    }
    return DensityMatrix(std::move(out));
}

struct MarginalReport {
    double deviation_a = 0.0;
    double deviation_b = 0.0;
    double tolerance = kMarginalTol;
    bool pass = false;
};

inline MarginalReport verify_thermal_marginals(const DensityMatrix& rho_ab, const ThermalSpec& spec_a,
                                               const ThermalSpec& spec_b, double tol = kMarginalTol) {
    const int da = spec_a.dim();
    const int db = spec_b.dim();
    if (rho_ab.dim() != da * db) throw DimensionError("verify_thermal_marginals: dimension mismatch");
    const DensityMatrix marginal_a = partial_trace(rho_ab, da, db, Subsystem::A);
    const DensityMatrix marginal_b = partial_trace(rho_ab, da, db, Subsystem::B);
    MarginalReport report;
    report.tolerance = tol;
    report.deviation_a = max_abs_diff(marginal_a, gibbs_state(spec_a));
    report.deviation_b = max_abs_diff(marginal_b, gibbs_state(spec_b));
    report.pass = report.deviation_a <= tol && report.deviation_b <= tol;
    return report;
}

// (1-lambda) rho_A x rho_B + lambda rho_corr. Marginals preserved by linearity.
inline DensityMatrix interpolated_state(const DensityMatrix& rho_corr, const JointStateSpec& spec) {
    if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0)) throw RangeError("lambda must lie in [0,1]");
    const MarginalReport check = verify_thermal_marginals(rho_corr, spec.spec_a, spec.spec_b);
    if (!check.pass)
        throw MarginalError("interpolated_state: rho_corr marginals deviate by " +
                            std::to_string(std::max(check.deviation_a, check.deviation_b)));
    const DensityMatrix base = product_state(gibbs_state(spec.spec_a), gibbs_state(spec.spec_b));
    ComplexOperator out(base.dim());
    for (int i = 0; i < base.dim(); ++i)
        for (int j = 0; j < base.dim(); ++j)
            out.at(i, j) = (1.0 - spec.lambda) * base.at(i, j) + spec.lambda * rho_corr.at(i, j);
    return DensityMatrix(std::move(out));
}

// Dispatcher used by the experiment runner. For the interpolated family the
// correlated reference is the thermofield pure state of the same specs.
inline DensityMatrix make_joint_state(const JointStateSpec& spec) {
    switch (spec.family) {
        case StateFamily::product:
            return product_state(gibbs_state(spec.spec_a), gibbs_state(spec.spec_b));
        case StateFamily::classical_coupled:
            return classical_coupled_state(spec);
        case StateFamily::thermofield_pure:
            return thermofield_pure_state(spec);
        case StateFamily::interpolated: {
            JointStateSpec pure = spec;
            pure.family = StateFamily::thermofield_pure;
            return interpolated_state(thermofield_pure_state(pure), spec);
        }
    }
    throw ValidationError("unknown state family");
}

} // namespace xft
