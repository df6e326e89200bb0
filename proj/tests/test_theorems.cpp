#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "xft/theorems.hpp"
#include "xft/thermal.hpp"

using namespace xft;
using xft_test::gibbs_p0;
using xft_test::gibbs_p1;

namespace {

constexpr double kBetaA = 2.0;
constexpr double kBetaB = 1.0;

struct Fixture {
    SystemFrame frame{{0.0, 1.0}, {0.0, 1.0}};
    TimeReversal theta = identity_reversal(4);
    ThermalSpec spec_a = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), kBetaA);
    ThermalSpec spec_b = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), kBetaB);

    DensityMatrix product() const { return product_state(gibbs_state(spec_a), gibbs_state(spec_b)); }

    DensityMatrix coupled(double lambda) const {
        return classical_coupled_state(JointStateSpec{StateFamily::classical_coupled, lambda, spec_a, spec_b});
    }

    Dynamics swap_dynamics(const DensityMatrix& rho) const {
        InteractionSpec spec;
        spec.swap_preset = true;
        spec.t = 1.0;
        return generate_dynamics(spec, frame, theta, rho);
    }

    Dynamics strict_dynamics(const DensityMatrix& rho, std::uint64_t seed, double strength = 0.8) const {
        InteractionSpec spec;
        spec.strength = strength;
        spec.seed = seed;
        spec.t = 1.2;
        return generate_dynamics(spec, frame, theta, rho);
    }

    HistorySet histories(const DensityMatrix& rho, const ComplexOperator& u) const {
        return enumerate_histories(rho, u, theta, frame);
    }
};

} // namespace

TEST_CASE("per-history ratio identity") {
    const Fixture lab;
    SECTION("product state, SWAP: the ratio reduces to the baseline exponential") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = lab.histories(rho, lab.swap_dynamics(rho).u);
        const TheoremReport report = per_history_ratio_check(set, kBetaA, kBetaB, 1e-9);
        CHECK(report.pass);

        const History& h = set.histories[set.id_of(1, 2)]; // (0,1)->(1,0), q=+1
        const History& twin = set.histories[h.reverse_id];
        CHECK(h.prob / twin.prob == Approx(2.718281828459045).epsilon(1e-6));
    }
    SECTION("random strict dynamics on every family") {
        for (std::uint64_t seed : {5u, 6u}) {
            for (double lambda : {0.0, 0.7}) {
                const DensityMatrix rho = lab.coupled(lambda);
                const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, seed).u);
                const TheoremReport report = per_history_ratio_check(set, kBetaA, kBetaB, 1e-9);
                CHECK(report.pass);
            }
        }
    }
    SECTION("thermofield state: identity holds wherever defined, rest is counted") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho =
            thermofield_pure_state(JointStateSpec{StateFamily::thermofield_pure, 0.0, eq, eq});
        const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, 9).u);
        const TheoremReport report = per_history_ratio_check(set, 1.0, 1.0, 1e-9);
        CHECK(report.pass);
        CHECK(report.skipped_pairs > 0);
    }
}

TEST_CASE("class bounds") {
    const Fixture lab;
    SECTION("product state: bounds coincide and match the baseline") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = lab.histories(rho, lab.swap_dynamics(rho).u);
        const ClassTable table = group_classes(set);
        const TheoremReport report = class_bounds_check(table, kBetaA, kBetaB, 1e-9);
        CHECK(report.pass);
        CHECK(report.values.at("max_bound_width") <= 1e-10);
    }
    SECTION("perfectly correlated classical state under shell coupling") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho =
            classical_coupled_state(JointStateSpec{StateFamily::classical_coupled, 1.0, eq, eq});
        InteractionSpec ispec;
        ispec.strength = 0.9;
        ispec.seed = 14;
        ispec.t = 0.8;
        const Dynamics dyn = generate_dynamics(ispec, lab.frame, lab.theta, rho);
        const HistorySet set = lab.histories(rho, dyn.u);
        const ClassTable table = group_classes(set);
        const TheoremReport report = class_bounds_check(table, 1.0, 1.0, 1e-9);
        CHECK(report.pass);
    }
}

TEST_CASE("integral equality") {
    const Fixture lab;
    SECTION("product Gibbs with SWAP: four-term hand sum") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = lab.histories(rho, lab.swap_dynamics(rho).u);
        const TheoremReport report = integral_equality_check(set, kBetaA, kBetaB, 1e-12);
        CHECK(report.pass);
        // hand sum: p00 + p01 e^{-1} + p10 e^{+1} + p11 = 1
        const double by_hand = gibbs_p0(kBetaA) * gibbs_p0(kBetaB) +
                               gibbs_p0(kBetaA) * gibbs_p1(kBetaB) * std::exp(-1.0) +
                               gibbs_p1(kBetaA) * gibbs_p0(kBetaB) * std::exp(1.0) +
                               gibbs_p1(kBetaA) * gibbs_p1(kBetaB);
        CHECK(report.values.at("lhs") == Approx(by_hand).epsilon(1e-12));
    }
    SECTION("identity dynamics") {
        const DensityMatrix rho = lab.coupled(0.4);
        const HistorySet set = lab.histories(rho, ComplexOperator::identity(4));
        const TheoremReport report = integral_equality_check(set, kBetaA, kBetaB, 1e-12);
        CHECK(report.pass);
    }
    SECTION("full-support states under random strict dynamics") {
        for (double lambda : {0.0, 0.3, 0.7}) {
            const DensityMatrix rho = lab.coupled(lambda);
            const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, 33).u);
            const TheoremReport report = integral_equality_check(set, kBetaA, kBetaB, 1e-10);
            CHECK(report.pass);
            CHECK(report.values.at("conditional") == 0.0);
        }
    }
    SECTION("states without full support are reported as conditional") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho =
            thermofield_pure_state(JointStateSpec{StateFamily::thermofield_pure, 0.0, eq, eq});
        const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, 2).u);
        const TheoremReport report = integral_equality_check(set, 1.0, 1.0);
        CHECK(report.values.at("conditional") == 1.0);
        CHECK(report.pass);
    }
}

TEST_CASE("averaged inequality") {
    const Fixture lab;
    SECTION("hot-to-cold flow under SWAP") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = lab.histories(rho, lab.swap_dynamics(rho).u);
        const TheoremReport report = averaged_inequality_check(set, kBetaA, kBetaB);
        CHECK(report.pass);
        // beta_A > beta_B: A is colder, heat flows into it
        CHECK(report.values.at("mean_q") > 0.0);
        CHECK(report.values.at("lhs") > 0.0);
        CHECK(report.values.count("clausius_corollary") == 1);
    }
    SECTION("identity dynamics give exactly zero") {
        const DensityMatrix rho = lab.coupled(0.6);
        const HistorySet set = lab.histories(rho, ComplexOperator::identity(4));
        const TheoremReport report = averaged_inequality_check(set, kBetaA, kBetaB);
        CHECK(report.values.at("lhs") == 0.0);
        CHECK(report.pass);
    }
    SECTION("correlated states cannot break the bound") {
        for (std::uint64_t seed : {3u, 8u, 15u}) {
            for (double lambda : {0.5, 1.0}) {
                const DensityMatrix rho = lab.coupled(lambda);
                const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, seed).u);
                const TheoremReport report = averaged_inequality_check(set, kBetaA, kBetaB);
                CHECK(report.pass);
            }
        }
    }
    SECTION("mean delta_I is cross-checked against the mutual information change") {
        // under trivial dynamics the identification is exact
        const DensityMatrix rho = lab.coupled(0.8);
        const HistorySet still = lab.histories(rho, ComplexOperator::identity(4));
        const TheoremReport at_rest = averaged_inequality_check(still, kBetaA, kBetaB);
        CHECK(std::abs(at_rest.values.at("mean_delta_i_vs_ic_change")) <= 1e-12);

        // for generic dynamics the deviation is data, reported not gated:
        // <dI> references the initial state's index at starred final outcomes,
        // the mutual-information change references the evolved distribution
        const HistorySet moved = lab.histories(rho, lab.strict_dynamics(rho, 12).u);
        const TheoremReport in_motion = averaged_inequality_check(moved, kBetaA, kBetaB);
        CHECK(std::isfinite(in_motion.values.at("mean_delta_i_vs_ic_change")));
    }
}

TEST_CASE("baseline exchange fluctuation theorem") {
    const Fixture lab;
    SECTION("SWAP ratio equals e") {
        const DensityMatrix rho = lab.product();
        const HistorySet set = lab.histories(rho, lab.swap_dynamics(rho).u);
        const TheoremReport report = baseline_xft_check(set, rho, kBetaA, kBetaB, 1e-9);
        CHECK(report.pass);
        CHECK(report.values.at("checked_pairs") >= 1.0);
    }
    SECTION("equal temperatures give unit ratios") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho = product_state(gibbs_state(eq), gibbs_state(eq));
        const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, 42).u);
        const TheoremReport report = baseline_xft_check(set, rho, 1.0, 1.0, 1e-10);
        CHECK(report.pass);
    }
    SECTION("correlated input is rejected") {
        const DensityMatrix rho = lab.coupled(1.0);
        const HistorySet set = lab.histories(rho, lab.strict_dynamics(rho, 1).u);
        CHECK_THROWS_AS(baseline_xft_check(set, rho, kBetaA, kBetaB, 1e-9), NotProductStateError);
    }
}

TEST_CASE("clausius comparison") {
    const Fixture lab;
    SECTION("product input obeys the arrow") {
        const DensityMatrix rho = lab.product();
        const Dynamics dyn = lab.strict_dynamics(rho, 27);
        const HistorySet set = lab.histories(rho, dyn.u);
        const TheoremReport report = clausius_comparison(rho, dyn.u, set, kBetaA, kBetaB);
        CHECK(report.pass);
        CHECK(report.values.at("clausius_lhs") >= -1e-10);
        CHECK(report.values.at("product_input") == 1.0);
    }
    SECTION("diagonal states have no measurement disturbance") {
        const DensityMatrix rho = lab.coupled(0.7);
        const Dynamics dyn = lab.strict_dynamics(rho, 5);
        const HistorySet set = lab.histories(rho, dyn.u);
        const TheoremReport report = clausius_comparison(rho, dyn.u, set, kBetaA, kBetaB);
        CHECK(report.values.at("disturbance_gap") <= 1e-10);
    }
    SECTION("coherent correlated states may flow against the arrow, recorded not failed") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho =
            thermofield_pure_state(JointStateSpec{StateFamily::thermofield_pure, 0.0, eq, eq});
        InteractionSpec ispec;
        ispec.mode = InteractionMode::mean_conserving;
        ispec.strength = 0.6;
        ispec.t = 1.0;
        ispec.seed = 19;
        ispec.mean_tol = 0.05;
        const Dynamics dyn = generate_dynamics(ispec, lab.frame, lab.theta, rho);
        const HistorySet set = lab.histories(rho, dyn.u);
        const TheoremReport report = clausius_comparison(rho, dyn.u, set, 1.0, 1.0);
        CHECK(report.pass);
        CHECK(report.values.at("product_input") == 0.0);
    }
}

TEST_CASE("mutual information identities") {
    const Fixture lab;
    const Measurement m1 = Measurement::sharp_energy(2, 2);
    SECTION("product state carries none") {
        const TheoremReport report = mutual_information_identities(lab.product(), m1, lab.frame);
        CHECK(report.pass);
        CHECK(std::abs(report.values.at("ic_weighted_sum")) <= 1e-12);
    }
    SECTION("thermofield state at beta 1") {
        const ThermalSpec eq = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 1.0);
        const DensityMatrix rho =
            thermofield_pure_state(JointStateSpec{StateFamily::thermofield_pure, 0.0, eq, eq});
        const TheoremReport report = mutual_information_identities(rho, m1, lab.frame);
        CHECK(report.pass);
        CHECK(report.values.at("ic_weighted_sum") == Approx(0.5828).margin(1e-3));
        CHECK(report.values.at("quantum_mi_dephased") == Approx(0.5828).margin(1e-3));
    }
    SECTION("uniform perfect correlation carries ln d") {
        const ThermalSpec hot = make_thermal_spec(HermitianOperator::from_diagonal(std::vector<double>{0.0, 1.0}), 0.0);
        const DensityMatrix rho =
            classical_coupled_state(JointStateSpec{StateFamily::classical_coupled, 1.0, hot, hot});
        const TheoremReport report = mutual_information_identities(rho, m1, lab.frame);
        CHECK(report.pass);
        CHECK(report.values.at("ic_weighted_sum") == Approx(std::log(2.0)).margin(1e-12));
    }
}

TEST_CASE("POVM pairing validation") {
    const TimeReversal theta = identity_reversal(4);
    SECTION("sharp projectors are valid and closed") {
        const ValidationReport report = povm_pairing_validator(Measurement::sharp_energy(2, 2), theta);
        CHECK(report.pass());
    }
    SECTION("complex-phase effects break closure") {
        // 0.7 |i+><i+| with |i+> = (|0> + i|1>)/sqrt(2); conjugation maps it off the set
        ComplexOperator p_iplus(2);
        p_iplus.at(0, 0) = 0.5;
        p_iplus.at(0, 1) = complex(0.0, -0.5);
        p_iplus.at(1, 0) = complex(0.0, 0.5);
        p_iplus.at(1, 1) = 0.5;
        std::vector<ComplexOperator> effects_a;
        effects_a.push_back(0.7 * p_iplus);
        effects_a.push_back(ComplexOperator::identity(2) - 0.7 * p_iplus);
        std::vector<ComplexOperator> effects_b;
        effects_b.push_back(ComplexOperator::identity(2));
        const Measurement m2 = Measurement::general_povm(std::move(effects_a), std::move(effects_b));
        const ValidationReport report = povm_pairing_validator(m2, identity_reversal(4));
        CHECK(report.valid_states);
        CHECK_FALSE(report.closed);
        CHECK_FALSE(report.failures.empty());
    }
    SECTION("smeared energy effects with real coefficients pass both conditions") {
        std::vector<ComplexOperator> effects_a;
        ComplexOperator m0(2), m1(2);
        m0.at(0, 0) = 0.6;
        m0.at(1, 1) = 0.2;
        m1.at(0, 0) = 0.4;
        m1.at(1, 1) = 0.8;
        effects_a.push_back(m0);
        effects_a.push_back(m1);
        std::vector<ComplexOperator> effects_b;
        effects_b.push_back(ComplexOperator::identity(2));
        const Measurement m2 = Measurement::general_povm(std::move(effects_a), std::move(effects_b));
        const ValidationReport report = povm_pairing_validator(m2, identity_reversal(4));
        CHECK(report.pass());
    }
}

TEST_CASE("maximum work report") {
    RunSummary first{"fp", "strength", 0.1, -0.42, 0.08, 0.015};
    SECTION("identical runs difference to zero") {
        const MaxWorkReport report = max_work_report(first, first, kBetaA, kBetaB);
        CHECK(report.du_a == 0.0);
        CHECK(report.dq_mean == 0.0);
        CHECK(report.work_bound == 0.0);
    }
    SECTION("product runs reduce to the uncorrelated bound") {
        RunSummary second = first;
        second.axis_value = 0.2;
        second.u_a_final = -0.40;
        second.mean_q = 0.10;
        second.mean_delta_i = first.mean_delta_i; // no correlation change
        const MaxWorkReport report = max_work_report(first, second, kBetaA, kBetaB);
        CHECK(report.di_mean == 0.0);
        const double t_b = 1.0 / kBetaB;
        CHECK(report.work_bound == Approx(-report.du_a + t_b * report.ds_a));
        CHECK(report.ds_a == Approx(kBetaA * report.dq_mean));
    }
    SECTION("correlation change shifts the bound by exactly -T_B dI") {
        RunSummary second = first;
        second.axis_value = 0.2;
        second.u_a_final = -0.40;
        second.mean_q = 0.10;
        second.mean_delta_i = 0.045;
        RunSummary second_flat = second;
        second_flat.mean_delta_i = first.mean_delta_i;
        const MaxWorkReport with_di = max_work_report(first, second, kBetaA, kBetaB);
        const MaxWorkReport without = max_work_report(first, second_flat, kBetaA, kBetaB);
        const double t_b = 1.0 / kBetaB;
        CHECK(with_di.work_bound - without.work_bound ==
              Approx(-t_b * (second.mean_delta_i - first.mean_delta_i)));
    }
    SECTION("mismatched runs are rejected") {
        RunSummary other = first;
        other.fingerprint = "different";
        CHECK_THROWS_AS(max_work_report(first, other, kBetaA, kBetaB), MismatchedRunsError);
    }
}
