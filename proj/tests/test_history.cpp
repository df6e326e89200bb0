#include <catch2/catch.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "xft/history.hpp"
#include "xft/serialize.hpp"
#include "xft/thermal.hpp"

using namespace xft;
using xft_test::gibbs_p0;
using xft_test::gibbs_p1;

namespace {

struct TwoQubitLab {
    SystemFrame frame{{0.0, 1.0}, {0.0, 1.0}};
    TimeReversal theta = identity_reversal(4);
    ThermalSpec spec_a = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 2.0);
    ThermalSpec spec_b = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);

    DensityMatrix product() const { return product_state(gibbs_state(spec_a), gibbs_state(spec_b)); }

    ComplexOperator swap_unitary() const {
        InteractionSpec spec;
        spec.swap_preset = true;
        spec.t = 1.0;
        return generate_dynamics(spec, frame, theta, product()).u;
    }
};

DensityMatrix tfd_beta1() {
    const ThermalSpec spec = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
    return thermofield_pure_state(JointStateSpec{StateFamily::thermofield_pure, 0.0, spec, spec});
}

} // namespace

TEST_CASE("dephase") {
    const Measurement m1 = Measurement::sharp_energy(2, 2);
    SECTION("diagonal states are fixed points") {
        const DensityMatrix rho = DensityMatrix::from_diagonal(std::vector<double>{0.4, 0.3, 0.2, 0.1});
        CHECK(max_abs_diff(dephase(rho, m1), rho) == 0.0);
    }
    SECTION("thermofield state dephases to the correlated diagonal") {
        const DensityMatrix dephased = dephase(tfd_beta1(), m1);
        CHECK(dephased.at(0, 0).real() == Approx(gibbs_p0(1.0)).margin(1e-12));
        CHECK(dephased.at(3, 3).real() == Approx(gibbs_p1(1.0)).margin(1e-12));
        CHECK(std::abs(dephased.at(0, 3)) == 0.0);
        CHECK(std::abs(dephased.at(1, 1)) == 0.0);
    }
    SECTION("marginals are preserved") {
        const DensityMatrix rho = tfd_beta1();
        const DensityMatrix dephased = dephase(rho, m1);
        CHECK(max_abs_diff(partial_trace(dephased, 2, 2, Subsystem::A),
                           partial_trace(rho, 2, 2, Subsystem::A)) <= 1e-12);
        CHECK(max_abs_diff(partial_trace(dephased, 2, 2, Subsystem::B),
                           partial_trace(rho, 2, 2, Subsystem::B)) <= 1e-12);
    }
}

TEST_CASE("outcome_probability") {
    const TwoQubitLab lab;
    SECTION("maximally mixed") {
        const DensityMatrix rho = DensityMatrix::from_diagonal(std::vector<double>{0.25, 0.25, 0.25, 0.25});
        for (int phi = 0; phi < 2; ++phi)
            for (int chi = 0; chi < 2; ++chi)
                CHECK(outcome_probability(rho, phi, chi, lab.frame) == Approx(0.25));
    }
    SECTION("product Gibbs factorizes") {
        const DensityMatrix rho = lab.product();
        CHECK(outcome_probability(rho, 0, 1, lab.frame) ==
              Approx(gibbs_p0(2.0) * gibbs_p1(1.0)).margin(1e-14));
    }
    SECTION("thermofield amplitudes squared") {
        const DensityMatrix rho = tfd_beta1();
        CHECK(outcome_probability(rho, 0, 0, SystemFrame{{0, 1}, {0, 1}}) == Approx(0.7311).margin(1e-4));
        CHECK(outcome_probability(rho, 0, 1, SystemFrame{{0, 1}, {0, 1}}) == Approx(0.0).margin(1e-15));
    }
    SECTION("probabilities sum to one") {
        const DensityMatrix rho = tfd_beta1();
        double total = 0.0;
        for (int phi = 0; phi < 2; ++phi)
            for (int chi = 0; chi < 2; ++chi) total += outcome_probability(rho, phi, chi, lab.frame);
        CHECK(total == Approx(1.0).margin(1e-12));
    }
    SECTION("index bounds") {
        CHECK_THROWS_AS(outcome_probability(lab.product(), 2, 0, lab.frame), IndexError);
    }
}

TEST_CASE("correlation_index") {
    ComplexOperator proj0(2), proj1(2);
    proj0.at(0, 0) = 1.0;
    proj1.at(1, 1) = 1.0;
    SECTION("product states carry no correlations") {
        const TwoQubitLab lab;
        CHECK(std::abs(correlation_index(lab.product(), proj0, proj1)) <= 1e-12);
    }
    SECTION("thermofield diagonal outcome") {
        CHECK(correlation_index(tfd_beta1(), proj0, proj0) == Approx(0.3133).margin(1e-3));
    }
    SECTION("impossible joint outcome gives -inf") {
        CHECK(std::isinf(correlation_index(tfd_beta1(), proj0, proj1)));
        CHECK(correlation_index(tfd_beta1(), proj0, proj1) < 0.0);
    }
    SECTION("vanishing marginal is undefined") {
        const DensityMatrix rho = DensityMatrix::from_diagonal(std::vector<double>{1.0, 0.0, 0.0, 0.0});
        CHECK_THROWS_AS(correlation_index(rho, proj1, proj0), UndefinedError);
    }
}

TEST_CASE("enumerate_histories on the two-qubit SWAP exchange") {
    const TwoQubitLab lab;
    const DensityMatrix rho = lab.product();
    const ComplexOperator u = lab.swap_unitary();
    const HistorySet set = enumerate_histories(rho, u, lab.theta, lab.frame);

    const double pa0 = gibbs_p0(2.0), pa1 = gibbs_p1(2.0);
    const double pb0 = gibbs_p0(1.0), pb1 = gibbs_p1(1.0);

    REQUIRE(set.histories.size() == 16);

    SECTION("probabilities sum to one") {
        double total = 0.0;
        for (const History& h : set.histories) total += h.prob;
        CHECK(total == Approx(1.0).margin(1e-12));
    }
    SECTION("hand-enumerated table") {
        // the four live histories map (phi,chi) -> (chi,phi)
        struct Expected {
            int i, f;
            double prob, q;
        };
        const std::vector<Expected> expected{
            {0, 0, pa0 * pb0, 0.0},
            {1, 2, pa0 * pb1, 1.0},  // (0,1)->(1,0): heat +1 into A
            {2, 1, pa1 * pb0, -1.0}, // (1,0)->(0,1): heat -1
            {3, 3, pa1 * pb1, 0.0},
        };
        for (const Expected& e : expected) {
            const History& h = set.histories[set.id_of(e.i, e.f)];
            CHECK(h.prob == Approx(e.prob).margin(1e-12));
            CHECK(h.q == e.q);
            CHECK(h.delta_eps == 0.0);
        }
        CHECK(set.histories[set.id_of(1, 2)].prob == Approx(0.2369).margin(1e-3));
        double dead_mass = 0.0;
        for (const History& h : set.histories) {
            const bool live = (h.phi == h.chi_p && h.chi == h.phi_p);
            if (!live) dead_mass += h.prob;
        }
        CHECK(dead_mass <= 1e-14);
    }
    SECTION("reverse pairing is a bijection and an involution") {
        std::set<std::size_t> seen;
        for (std::size_t id = 0; id < set.histories.size(); ++id) {
            const std::size_t rid = set.histories[id].reverse_id;
            CHECK(set.histories[rid].reverse_id == id);
            seen.insert(rid);
        }
        CHECK(seen.size() == set.histories.size());
    }
}

TEST_CASE("identity dynamics give diagonal histories only") {
    const TwoQubitLab lab;
    const DensityMatrix rho = DensityMatrix::from_diagonal(std::vector<double>{0.4, 0.3, 0.2, 0.1});
    const HistorySet set = enumerate_histories(rho, ComplexOperator::identity(4), lab.theta, lab.frame);
    for (std::size_t id = 0; id < set.histories.size(); ++id) {
        const History& h = set.histories[id];
        if (h.prob > 0.0) {
            CHECK(h.phi == h.phi_p);
            CHECK(h.chi == h.chi_p);
            CHECK(h.q == 0.0);
            CHECK(h.delta_eps == 0.0);
        }
    }
}

TEST_CASE("outcome decomposition and reversal identities") {
    // identity-level invariants on a full-support correlated state
    const TwoQubitLab lab;
    const JointStateSpec joint{StateFamily::classical_coupled, 0.5, lab.spec_a, lab.spec_b};
    const DensityMatrix rho = classical_coupled_state(joint);
    InteractionSpec ispec;
    ispec.strength = 0.9;
    ispec.seed = 21;
    ispec.t = 1.1;
    const Dynamics dyn = generate_dynamics(ispec, lab.frame, lab.theta, rho);
    const HistorySet set = enumerate_histories(rho, dyn.u, lab.theta, lab.frame);
    const double beta_a = 2.0, beta_b = 1.0;
    const double log_zz = lab.spec_a.log_partition_fn + lab.spec_b.log_partition_fn;

    SECTION("outcome probability decomposition") {
        for (int k = 0; k < 4; ++k) {
            const double lhs = std::log(set.outcome_prob[static_cast<std::size_t>(k)]);
            const double rhs = -beta_a * lab.frame.energy_a(lab.frame.phi_of(k)) -
                               beta_b * lab.frame.energy_b(lab.frame.chi_of(k)) - log_zz +
                               set.corr_index[static_cast<std::size_t>(k)];
            CHECK(lhs == Approx(rhs).margin(1e-10));
        }
    }
    SECTION("forward and reverse outcome probabilities") {
        const int n = lab.frame.dim_total();
        for (std::size_t id = 0; id < set.histories.size(); ++id) {
            const History& h = set.histories[id];
            const int initial = static_cast<int>(id) / n;
            const int final_ = static_cast<int>(id) % n;
            const double p_i = set.outcome_prob[static_cast<std::size_t>(initial)];
            const double p_f_star = set.outcome_prob[static_cast<std::size_t>(lab.theta.image(final_))];
            if (p_i <= kProbCutoff || p_f_star <= kProbCutoff) continue;
            const double rhs = p_f_star * std::exp((beta_a - beta_b) * h.q + beta_b * h.delta_eps - h.delta_i);
            CHECK(p_i == Approx(rhs).epsilon(1e-10));
        }
    }
    SECTION("history probability computed two ways") {
        const int n = lab.frame.dim_total();
        for (std::size_t id = 0; id < set.histories.size(); ++id) {
            const History& h = set.histories[id];
            if (h.prob <= kProbCutoff) continue;
            const int initial = static_cast<int>(id) / n;
            const int final_ = static_cast<int>(id) % n;
            const int i_star = lab.theta.image(initial);
            const int f_star = lab.theta.image(final_);
            const double p_f_star = set.outcome_prob[static_cast<std::size_t>(f_star)];
            const double through_twin = p_f_star * std::norm(dyn.u.at(i_star, f_star)) *
                                        std::exp((beta_a - beta_b) * h.q + beta_b * h.delta_eps - h.delta_i);
            CHECK(h.prob == Approx(through_twin).epsilon(1e-9));
        }
    }
}

TEST_CASE("group_classes") {
    const TwoQubitLab lab;
    SECTION("identity dynamics collapse to one class") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = enumerate_histories(rho, ComplexOperator::identity(4), lab.theta, lab.frame);
        const ClassTable table = group_classes(set);
        double live = 0.0;
        for (const TransitionClass& cls : table.classes)
            if (cls.prob > kProbCutoff) {
                live += 1.0;
                CHECK(cls.q == Approx(0.0).margin(1e-12));
                CHECK(cls.delta_eps == Approx(0.0).margin(1e-12));
            }
        CHECK(live == 1.0);
    }
    SECTION("SWAP exchange classes") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = enumerate_histories(rho, lab.swap_unitary(), lab.theta, lab.frame);
        const ClassTable table = group_classes(set);

        const TransitionClass* plus = find_class(table, 1.0, 0.0);
        REQUIRE(plus != nullptr);
        CHECK(plus->prob == Approx(gibbs_p0(2.0) * gibbs_p1(1.0)).margin(1e-12));

        const TransitionClass rev = reverse_class(table, 1.0, 0.0);
        CHECK(rev.prob == Approx(0.0871).margin(1e-3));

        // reverse of the reverse is the original
        const TransitionClass back = reverse_class(table, rev.q, rev.delta_eps);
        CHECK(back.prob == Approx(plus->prob).margin(1e-15));

        // twin classes pair equal member counts
        for (const TransitionClass& cls : table.classes) {
            const TransitionClass mirror = reverse_class(table, cls.q, cls.delta_eps);
            CHECK(mirror.member_ids.size() == cls.member_ids.size());
        }

        // class probabilities decompose the total
        double total = 0.0;
        for (const TransitionClass& cls : table.classes) total += cls.prob;
        CHECK(total == Approx(1.0).margin(1e-12));
    }
    SECTION("reverse of the zero class is itself") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = enumerate_histories(rho, ComplexOperator::identity(4), lab.theta, lab.frame);
        const ClassTable table = group_classes(set);
        const TransitionClass rev = reverse_class(table, 0.0, 0.0);
        CHECK(rev.prob == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("history table serialization") {
    const TwoQubitLab lab;
    const DensityMatrix rho = tfd_beta1();
    const ThermalSpec spec1 = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
    InteractionSpec ispec;
    ispec.strength = 0.5;
    ispec.seed = 3;
    const Dynamics dyn = generate_dynamics(ispec, lab.frame, lab.theta, rho);
    const HistorySet set = enumerate_histories(rho, dyn.u, lab.theta, lab.frame);

    const std::string csv = histories_csv(set);
    CHECK(csv.rfind("phi,chi,phi_p,chi_p,prob,q,delta_eps,delta_I,reverse_id\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17); // header + 16 rows
    CHECK(csv.find("-inf") != std::string::npos);          // unreachable outcomes serialize as sentinels
    CHECK(histories_csv(set) == csv);                      // deterministic

    const ClassTable table = group_classes(set);
    const std::string ccsv = classes_csv(table);
    CHECK(ccsv.rfind("q,delta_eps,prob,delta_I_l,delta_I_u,member_count\n", 0) == 0);
}

TEST_CASE("enumeration cap") {
    // the cap protects against the O((d_A d_B)^2) memory blowup
    SystemFrame big;
    big.energies_a.assign(70, 0.0);
    big.energies_b.assign(70, 0.0);
    const DensityMatrix rho = DensityMatrix::from_diagonal(std::vector<double>(4900, 1.0 / 4900.0));
    CHECK_THROWS_AS(enumerate_histories(rho, ComplexOperator::identity(4900), identity_reversal(4900), big),
                    RangeError);
}
