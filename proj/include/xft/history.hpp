#pragma once

// Two-point measurement protocol: dephasing measurement, unitary evolution,
// final measurement. Enumerates every history (initial outcome, final
// outcome) with its probability, heat transfer q, total-energy fluctuation
// delta_eps, correlation change delta_I and time-reversed twin, and groups
// histories into transition classes Gamma(q, delta_eps).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "xft/errors.hpp"
#include "xft/frame.hpp"
#include "xft/operators.hpp"
#include "xft/reversal.hpp"

namespace xft {

inline constexpr double kProbCutoff = 1e-14;
inline constexpr double kVanishingProb = 1e-300;
inline constexpr double kBinTol = 1e-9;
inline constexpr int kMaxProductDim = 4096;

enum class MeasurementKind { sharp_energy, general_povm };

// Local POVMs {M_i} on A and {N_j} on B; elements are the product effects
// M_i x N_j. Sharp energy measurements are rank-1 projectors onto the energy
// eigenbases.
struct Measurement {
    MeasurementKind kind = MeasurementKind::sharp_energy;
    std::vector<ComplexOperator> effects_a;
    std::vector<ComplexOperator> effects_b;

    static Measurement sharp_energy(int dim_a, int dim_b) {
        Measurement m;
        m.kind = MeasurementKind::sharp_energy;
        m.effects_a.reserve(static_cast<std::size_t>(dim_a));
        m.effects_b.reserve(static_cast<std::size_t>(dim_b));
        for (int i = 0; i < dim_a; ++i) {
            ComplexOperator p(dim_a);
            p.at(i, i) = 1.0;
            m.effects_a.push_back(std::move(p));
        }
        for (int j = 0; j < dim_b; ++j) {
            ComplexOperator p(dim_b);
            p.at(j, j) = 1.0;
            m.effects_b.push_back(std::move(p));
        }
        return m;
    }

    static Measurement general_povm(std::vector<ComplexOperator> effects_a,
                                    std::vector<ComplexOperator> effects_b) {
        Measurement m;
        m.kind = MeasurementKind::general_povm;
        m.effects_a = std::move(effects_a);
        m.effects_b = std::move(effects_b);
        m.validate();
        return m;
    }

    void validate() const {
        if (effects_a.empty() || effects_b.empty()) throw ValidationError("measurement has no effects");
        for (const auto* side : {&effects_a, &effects_b}) {
            const int d = side->front().dim();
            ComplexOperator sum(d);
            for (const ComplexOperator& e : *side) {
                if (e.dim() != d) throw DimensionError("measurement effects have mixed dimensions");
                const EighResult eig = eigh(e);
                if (eig.eigenvalues.front() < -1e-12)
                    throw ValidationError("measurement effect is not positive semidefinite");
                sum = sum + e;
            }
            if (max_abs_diff(sum, ComplexOperator::identity(d)) > 1e-10)
                throw ValidationError("measurement effects do not sum to identity");
        }
    }
};

// Projection onto the product-basis diagonal: sum_k (M_phi x N_chi) rho (...).
// Preserves both marginals.
inline DensityMatrix dephase(const DensityMatrix& rho, const Measurement& m1) {
    if (m1.kind != MeasurementKind::sharp_energy)
        throw ValidationError("dephase requires a sharp energy measurement");
    const int da = static_cast<int>(m1.effects_a.size());
    const int db = static_cast<int>(m1.effects_b.size());
    if (rho.dim() != da * db) throw DimensionError("dephase: dimension mismatch");
    ComplexOperator out(rho.dim());
    for (int k = 0; k < rho.dim(); ++k) out.at(k, k) = rho.at(k, k).real();
    return DensityMatrix(std::move(out));
}

inline double outcome_probability(const DensityMatrix& rho, int phi, int chi, const SystemFrame& frame) {
    frame.check_index(phi, chi);
    if (rho.dim() != frame.dim_total()) throw DimensionError("outcome_probability: dimension mismatch");
    const double p = rho.at(frame.flat(phi, chi), frame.flat(phi, chi)).real();
    return std::clamp(p, 0.0, 1.0);
}

// I(rho; M, N) = ln( tr[(M x N) rho] / (tr[M rho_A] tr[N rho_B]) ).
// Returns -inf when the joint probability vanishes but the marginals do not;
// throws UndefinedError when a marginal probability vanishes.
inline double correlation_index(const DensityMatrix& rho, const ComplexOperator& effect_a,
                                const ComplexOperator& effect_b) {
    const int da = effect_a.dim();
    const int db = effect_b.dim();
    if (rho.dim() != da * db) throw DimensionError("correlation_index: dimension mismatch");
    const DensityMatrix rho_a = partial_trace(rho, da, db, Subsystem::A);
    const DensityMatrix rho_b = partial_trace(rho, da, db, Subsystem::B);

    complex joint = 0.0;
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j) {
            const complex aij = effect_a.at(i, j);
            if (aij == complex{}) continue;
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l) joint += aij * effect_b.at(k, l) * rho.at(j * db + l, i * db + k);
        }
    complex pa = 0.0, pb = 0.0;
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j) pa += effect_a.at(i, j) * rho_a.at(j, i);
    for (int k = 0; k < db; ++k)
        for (int l = 0; l < db; ++l) pb += effect_b.at(k, l) * rho_b.at(l, k);

    const double num = joint.real();
    const double den = pa.real() * pb.real();
    if (den <= kVanishingProb)
        throw UndefinedError("correlation_index: marginal outcome probability vanishes");
    if (num <= kVanishingProb) return -std::numeric_limits<double>::infinity();
    return std::log(num) - std::log(den);
}

// One record of the protocol: (phi, chi) -> (phi', chi').
struct History {
    int phi = 0, chi = 0;     // initial outcome
    int phi_p = 0, chi_p = 0; // final outcome
    double prob = 0.0;
    double q = 0.0;         // heat into A: E_{phi'} - E_phi
    double delta_eps = 0.0; // total-energy fluctuation
    double delta_i = 0.0;   // I at Theta-image of final outcome minus I at initial outcome
    std::size_t reverse_id = 0;
};

struct HistorySet {
    SystemFrame frame;
    TimeReversal theta;
    std::vector<History> histories;   // (d_A d_B)^2 records, id = initial*D + final
    std::vector<double> outcome_prob; // <i|rho|i> per flat product index
    std::vector<double> corr_index;   // I at each outcome; -inf/NaN allowed
    double min_outcome_prob = 0.0;

    bool full_support() const { return min_outcome_prob > kProbCutoff; }
    std::size_t id_of(int initial, int final_) const {
        return static_cast<std::size_t>(initial) * frame.dim_total() + final_;
    }
};

// Full enumeration over all (phi, chi, phi', chi'), zero-probability histories
// included: twin pairing must be total and the integral identity sums over
// the complete index set.
inline HistorySet enumerate_histories(const DensityMatrix& rho, const ComplexOperator& u,
                                      const TimeReversal& theta, const SystemFrame& frame) {
    const int n = frame.dim_total();
    if (n > kMaxProductDim)
        throw RangeError("product dimension " + std::to_string(n) + " exceeds the enumeration cap " +
                         std::to_string(kMaxProductDim));
    if (rho.dim() != n || u.dim() != n) throw DimensionError("enumerate_histories: dimension mismatch");
    if (static_cast<int>(theta.permutation.size()) != n)
        throw DimensionError("enumerate_histories: time reversal acts on a different dimension");
    if (unitarity_defect(u) > kUnitaryTol) throw NonUnitaryError("enumerate_histories: U is not unitary");

    HistorySet set{frame, theta, {}, {}, {}, 0.0};
    set.outcome_prob.resize(static_cast<std::size_t>(n));
    set.corr_index.resize(static_cast<std::size_t>(n));

    // Outcome pmf and marginals straight off the diagonal.
    std::vector<double> marg_a(static_cast<std::size_t>(frame.dim_a()), 0.0);
    std::vector<double> marg_b(static_cast<std::size_t>(frame.dim_b()), 0.0);
    for (int k = 0; k < n; ++k) {
        const double p = std::clamp(rho.at(k, k).real(), 0.0, 1.0);
        set.outcome_prob[static_cast<std::size_t>(k)] = p;
        marg_a[static_cast<std::size_t>(frame.phi_of(k))] += p;
        marg_b[static_cast<std::size_t>(frame.chi_of(k))] += p;
    }
    set.min_outcome_prob = *std::min_element(set.outcome_prob.begin(), set.outcome_prob.end());

    for (int k = 0; k < n; ++k) {
        const double num = set.outcome_prob[static_cast<std::size_t>(k)];
        const double den = marg_a[static_cast<std::size_t>(frame.phi_of(k))] *
                           marg_b[static_cast<std::size_t>(frame.chi_of(k))];
        if (den <= kVanishingProb)
            set.corr_index[static_cast<std::size_t>(k)] = std::numeric_limits<double>::quiet_NaN();
        else if (num <= kVanishingProb)
            set.corr_index[static_cast<std::size_t>(k)] = -std::numeric_limits<double>::infinity();
        else
            set.corr_index[static_cast<std::size_t>(k)] = std::log(num) - std::log(den);
    }

    set.histories.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        const double p_init = set.outcome_prob[static_cast<std::size_t>(i)];
        for (int f = 0; f < n; ++f) {
            History& h = set.histories[set.id_of(i, f)];
            h.phi = frame.phi_of(i);
            h.chi = frame.chi_of(i);
            h.phi_p = frame.phi_of(f);
            h.chi_p = frame.chi_of(f);
            h.prob = p_init * std::norm(u.at(f, i));
            h.q = frame.energy_a(h.phi_p) - frame.energy_a(h.phi);
            h.delta_eps = frame.total_energy(f) - frame.total_energy(i);
            const double i_final_star = set.corr_index[static_cast<std::size_t>(theta.image(f))];
            const double i_initial = set.corr_index[static_cast<std::size_t>(i)];
            if ((std::isnan(i_final_star) || std::isnan(i_initial)) && h.prob > kVanishingProb)
                throw UndefinedError("history with positive probability has a locally unreachable outcome");
            h.delta_i = i_final_star - i_initial;
            h.reverse_id = set.id_of(theta.image(f), theta.image(i));
        }
    }
    return set;
}

// The set Gamma(q, delta_eps) with aggregated probability and the extremal
// delta_I values over members that actually occur.
struct TransitionClass {
    double q = 0.0;
    double delta_eps = 0.0;
    double prob = 0.0;
    double delta_i_l = 0.0; // max of delta_I over members with prob > cutoff
    double delta_i_u = 0.0; // min of delta_I over members with prob > cutoff
    std::vector<std::size_t> member_ids;
};

struct ClassTable {
    std::vector<TransitionClass> classes; // sorted by (q, delta_eps)
    double bin_tol = kBinTol;
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

} // namespace detail

// Union-find over the tolerance graph on distinct (q, delta_eps) values;
// class labels are member means.
inline ClassTable group_classes(const HistorySet& set, double bin_tol = kBinTol) {
    struct Key {
        double q, eps;
        std::vector<std::size_t> ids;
    };
    std::map<std::pair<double, double>, std::size_t> key_index;
    std::vector<Key> keys;
    for (std::size_t id = 0; id < set.histories.size(); ++id) {
        const History& h = set.histories[id];
        const auto [it, inserted] = key_index.try_emplace({h.q, h.delta_eps}, keys.size());
        if (inserted) keys.push_back(Key{h.q, h.delta_eps, {}});
        keys[it->second].ids.push_back(id);
    }

    std::vector<int> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&keys](int a, int b) {
        const Key& ka = keys[static_cast<std::size_t>(a)];
        const Key& kb = keys[static_cast<std::size_t>(b)];
        return ka.q < kb.q || (ka.q == kb.q && ka.eps < kb.eps);
    });

    detail::UnionFind uf(keys.size());
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const Key& ka = keys[static_cast<std::size_t>(order[a])];
            const Key& kb = keys[static_cast<std::size_t>(order[b])];
            if (kb.q - ka.q > bin_tol) break; // sorted by q; nothing further can connect
            if (std::abs(kb.eps - ka.eps) <= bin_tol) uf.unite(order[a], order[b]);
        }
    }

    std::vector<TransitionClass> classes;
    std::vector<int> root_to_class(keys.size(), -1);
    for (int idx : order) {
        const int root = uf.find(idx);
        if (root_to_class[static_cast<std::size_t>(root)] < 0) {
            root_to_class[static_cast<std::size_t>(root)] = static_cast<int>(classes.size());
            classes.emplace_back();
        }
        TransitionClass& cls = classes[static_cast<std::size_t>(root_to_class[static_cast<std::size_t>(root)])];
        const Key& k = keys[static_cast<std::size_t>(idx)];
        for (std::size_t id : k.ids) cls.member_ids.push_back(id);
    }

    for (TransitionClass& cls : classes) {
        std::sort(cls.member_ids.begin(), cls.member_ids.end());
        double q_sum = 0.0, eps_sum = 0.0, prob = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        bool any_live = false;
        for (std::size_t id : cls.member_ids) {
            const History& h = set.histories[id];
            q_sum += h.q;
            eps_sum += h.delta_eps;
            prob += h.prob;
            if (h.prob > kProbCutoff) {
                any_live = true;
                hi = std::max(hi, h.delta_i);
                lo = std::min(lo, h.delta_i);
            }
        }
        cls.q = q_sum / static_cast<double>(cls.member_ids.size());
        cls.delta_eps = eps_sum / static_cast<double>(cls.member_ids.size());
        cls.prob = prob;
        if (any_live) {
            cls.delta_i_l = hi;
            cls.delta_i_u = lo;
        } else {
            cls.delta_i_l = std::numeric_limits<double>::quiet_NaN();
            cls.delta_i_u = std::numeric_limits<double>::quiet_NaN();
        }
    }

    std::stable_sort(classes.begin(), classes.end(), [](const TransitionClass& a, const TransitionClass& b) {
        return a.q < b.q || (a.q == b.q && a.delta_eps < b.delta_eps);
    });
    return ClassTable{std::move(classes), bin_tol};
}

inline const TransitionClass* find_class(const ClassTable& table, double q, double delta_eps) {
    for (const TransitionClass& cls : table.classes)
        if (std::abs(cls.q - q) <= table.bin_tol && std::abs(cls.delta_eps - delta_eps) <= table.bin_tol)
            return &cls;
    return nullptr;
}

// The class at (-q, -delta_eps); an empty class with probability 0 if absent.
inline TransitionClass reverse_class(const ClassTable& table, double q, double delta_eps) {
    if (const TransitionClass* cls = find_class(table, -q, -delta_eps)) return *cls;
    TransitionClass empty;
    empty.q = -q;
    empty.delta_eps = -delta_eps;
    empty.delta_i_l = std::numeric_limits<double>::quiet_NaN();
    empty.delta_i_u = std::numeric_limits<double>::quiet_NaN();
    return empty;
}

} // namespace xft
