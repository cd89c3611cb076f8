#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "entsim/polarization.hpp"
#include "support/oracles.hpp"

using namespace entsim;
using Catch::Matchers::WithinAbs;

namespace {

void check_state_invariants(const TwoPhotonState& s) {
    const auto& rho = s.rho();
    CHECK_THAT(rho.trace().real(), WithinAbs(1.0, 1e-12));
    CHECK_THAT(rho.trace().imag(), WithinAbs(0.0, 1e-12));
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho,
                                                       Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

}  // namespace

TEST_CASE("bell state at dphi = pi") {
    const auto s = TwoPhotonState::bell(kPi);
    check_state_invariants(s);
    const auto& rho = s.rho();
    CHECK_THAT(rho(0, 0).real(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(rho(3, 3).real(), WithinAbs(0.5, 1e-15));
    CHECK_THAT(rho(1, 1).real(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(rho(2, 2).real(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(rho(0, 3).real(), WithinAbs(-0.5, 1e-12));
    CHECK_THAT(rho(0, 3).imag(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("bell state at dphi = 0 has DD coincidence 1/2") {
    const auto s = TwoPhotonState::bell(0.0);
    check_state_invariants(s);
    CHECK_THAT(coincidence_probability(s, {45.0, 45.0}),
               WithinAbs(0.5, 1e-12));
}

TEST_CASE("bell state at dphi = pi/2 has zero D/A visibility") {
    const auto s = TwoPhotonState::bell(kPi / 2.0);
    CHECK_THAT(entsim::test::sweep_visibility(s, 45.0), WithinAbs(0.0, 1e-9));
}

TEST_CASE("bell state rejects non-finite phase") {
    CHECK_THROWS_AS(TwoPhotonState::bell(std::nan("")), std::invalid_argument);
}

TEST_CASE("noisy state limits and sweep round-trip") {
    SECTION("(1, 1) is the ideal Bell state") {
        const auto s = TwoPhotonState::noisy(1.0, 1.0);
        const auto b = TwoPhotonState::bell(kPi);
        CHECK((s.rho() - b.rho()).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("paper-scale visibilities") {
        const auto s = TwoPhotonState::noisy(0.97, 0.87);
        check_state_invariants(s);
        CHECK_THAT(entsim::test::sweep_visibility(s, 0.0),
                   WithinAbs(0.97, 1e-9));
        CHECK_THAT(entsim::test::sweep_visibility(s, 45.0),
                   WithinAbs(0.87, 1e-9));
    }
    SECTION("heavily mixed") {
        const auto s = TwoPhotonState::noisy(0.5, 0.5);
        check_state_invariants(s);
        CHECK_THAT(entsim::test::sweep_visibility(s, 0.0),
                   WithinAbs(0.5, 1e-9));
        CHECK_THAT(entsim::test::sweep_visibility(s, 45.0),
                   WithinAbs(0.5, 1e-9));
    }
    SECTION("rejects v_da > v_hv and out-of-range input") {
        CHECK_THROWS_AS(TwoPhotonState::noisy(0.8, 0.9),
                        std::invalid_argument);
        CHECK_THROWS_AS(TwoPhotonState::noisy(1.2, 0.5),
                        std::invalid_argument);
        CHECK_THROWS_AS(TwoPhotonState::noisy(0.5, -0.1),
                        std::invalid_argument);
    }
}

TEST_CASE("noisy state round-trips arbitrary visibility pairs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        double a = u01(rng), b = u01(rng);
        const double v_hv = std::max(a, b), v_da = std::min(a, b);
        const auto s = TwoPhotonState::noisy(v_hv, v_da);
        check_state_invariants(s);
        CHECK_THAT(entsim::test::sweep_visibility(s, 0.0),
                   WithinAbs(v_hv, 1e-6));
        CHECK_THAT(entsim::test::sweep_visibility(s, 45.0),
                   WithinAbs(v_da, 1e-6));
    }
}

TEST_CASE("coincidence probabilities of the dphi = pi Bell state") {
    const auto s = TwoPhotonState::bell(kPi);
    CHECK_THAT(coincidence_probability(s, {0.0, 0.0}), WithinAbs(0.5, 1e-12));
    CHECK_THAT(coincidence_probability(s, {0.0, 90.0}), WithinAbs(0.0, 1e-12));
    CHECK_THAT(coincidence_probability(s, {45.0, 45.0}), WithinAbs(0.0, 1e-12));
    // general closed form P = cos^2(a + b)/2
    for (double a : {10.0, 33.0, 71.5, 120.0})
        for (double b : {0.0, 18.0, 45.0, 160.25}) {
            const double expect = 0.5 * std::pow(std::cos(deg_to_rad(a + b)), 2);
            CHECK_THAT(coincidence_probability(s, {a, b}),
                       WithinAbs(expect, 1e-12));
        }
}

TEST_CASE("analyzer angles reduce modulo 180") {
    const AnalyzerSetting set(190.0, -30.0);
    CHECK_THAT(set.signal_deg, WithinAbs(10.0, 1e-12));
    CHECK_THAT(set.idler_deg, WithinAbs(150.0, 1e-12));
}

TEST_CASE("projector completeness: four probabilities sum to one") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(0.0, 180.0);
    for (int i = 0; i < 20; ++i) {
        const auto rho = entsim::test::random_density_matrix(rng);
        const auto s = TwoPhotonState::from_matrix(rho);
        const double a = angle(rng), b = angle(rng);
        const double total = coincidence_probability(s, {a, b}) +
                             coincidence_probability(s, {a, b + 90.0}) +
                             coincidence_probability(s, {a + 90.0, b}) +
                             coincidence_probability(s, {a + 90.0, b + 90.0});
        CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("correlation function of the dphi = pi Bell state") {
    const auto s = TwoPhotonState::bell(kPi);
    CHECK_THAT(correlation_e(s, 0.0, 0.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(correlation_e(s, 0.0, 45.0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(correlation_e(s, 22.5, 22.5), WithinAbs(0.0, 1e-12));
    CHECK_THAT(correlation_e(s, 0.0, 22.5),
               WithinAbs(1.0 / std::numbers::sqrt2, 1e-12));

    SECTION("closed form cos 2(a+b) on a 10x10 grid") {
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const double a = 18.0 * i, b = 18.0 * j;
                CHECK_THAT(correlation_e(s, a, b),
                           WithinAbs(std::cos(2.0 * deg_to_rad(a + b)), 1e-12));
            }
    }

    SECTION("cross-check against the four projection probabilities") {
        const double a = 0.0, b = 22.5;
        const double p1 = coincidence_probability(s, {a, b});
        const double p2 = coincidence_probability(s, {a, b + 90});
        const double p3 = coincidence_probability(s, {a + 90, b});
        const double p4 = coincidence_probability(s, {a + 90, b + 90});
        CHECK_THAT(correlation_e(s, a, b),
                   WithinAbs((p1 + p4 - p2 - p3) / (p1 + p2 + p3 + p4), 1e-15));
    }
}

TEST_CASE("chsh value at the standard settings") {
    const auto bell = TwoPhotonState::bell(kPi);
    const double s = chsh_s(bell, 0.0, 45.0, -22.5, 22.5);
    CHECK_THAT(s, WithinAbs(2.0 * std::numbers::sqrt2, 1e-12));

    SECTION("grid search confirms the maximum") {
        double best = 0.0;
        for (int ia = 0; ia < 16; ++ia)
            for (int ip = 0; ip < 16; ++ip)
                for (int ib = 0; ib < 16; ++ib)
                    for (int iq = 0; iq < 16; ++iq)
                        best = std::max(best,
                                        std::abs(chsh_s(bell, 11.25 * ia,
                                                        11.25 * ip, 11.25 * ib,
                                                        11.25 * iq)));
        CHECK_THAT(best, WithinAbs(2.0 * std::numbers::sqrt2, 1e-9));
        CHECK(best <= s + 1e-9);
    }
}

TEST_CASE("chsh is zero for the maximally mixed state") {
    const auto mixed = TwoPhotonState::maximally_mixed();
    CHECK_THAT(chsh_s(mixed, 0.0, 45.0, -22.5, 22.5), WithinAbs(0.0, 1e-12));
    CHECK_THAT(chsh_s(mixed, 10.0, 50.0, 30.0, 75.0), WithinAbs(0.0, 1e-12));
}

TEST_CASE("chsh of the in-orbit visibility pair") {
    const auto s = TwoPhotonState::noisy(0.975, 0.88);
    const double value = chsh_s(s, 0.0, 45.0, -22.5, 22.5);
    // analytic: sqrt(2) * (v_hv + v_da)
    CHECK_THAT(value, WithinAbs(std::numbers::sqrt2 * (0.975 + 0.88), 1e-12));
    CHECK_THAT(value, WithinAbs(2.60, 0.1));
}

TEST_CASE("chsh respects the Tsirelson bound for random states") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> angle(0.0, 180.0);
    const double bound = 2.0 * std::numbers::sqrt2 + 1e-9;
    for (int i = 0; i < 500; ++i) {
        const auto s =
            TwoPhotonState::from_matrix(entsim::test::random_density_matrix(rng));
        CHECK(std::abs(chsh_s(s, 0.0, 45.0, -22.5, 22.5)) <= bound);
        CHECK(std::abs(chsh_s(s, angle(rng), angle(rng), angle(rng),
                              angle(rng))) <= bound);
    }
}

TEST_CASE("chsh is invariant under 180-degree analyzer shifts") {
    const auto s = TwoPhotonState::noisy(0.95, 0.9);
    const double base = chsh_s(s, 0.0, 45.0, -22.5, 22.5);
    CHECK_THAT(chsh_s(s, 180.0, 45.0, -22.5, 22.5), WithinAbs(base, 1e-12));
    CHECK_THAT(chsh_s(s, 0.0, 225.0, -22.5, 22.5), WithinAbs(base, 1e-12));
    CHECK_THAT(chsh_s(s, 0.0, 45.0, 157.5, 22.5), WithinAbs(base, 1e-12));
    CHECK_THAT(chsh_s(s, 0.0, 45.0, -22.5, 202.5), WithinAbs(base, 1e-12));
}

TEST_CASE("visibility arithmetic") {
    CHECK_THAT(visibility(100.0, 0.0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(visibility(100.0, 100.0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(visibility(985.0, 15.0), WithinAbs(0.97, 1e-12));
    CHECK_THROWS_AS(visibility(0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(visibility(1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(visibility(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("qber from visibility") {
    CHECK_THAT(qber_from_visibility(1.0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(qber_from_visibility(0.0), WithinAbs(0.5, 1e-15));
    const VisibilitySet vis(0.97, 0.97, 0.84, 0.90);
    CHECK_THAT(qber_from_visibility(vis.mean()), WithinAbs(0.04, 1e-12));
    // consistent with the reported 3.9(4)%
    CHECK(std::abs(qber_from_visibility(vis.mean()) - 0.039) < 0.004);
    CHECK_THROWS_AS(qber_from_visibility(1.5), std::invalid_argument);
}

TEST_CASE("from_matrix rejects invalid density matrices") {
    Eigen::Matrix4cd bad = Eigen::Matrix4cd::Identity();  // trace 4
    CHECK_THROWS_AS(TwoPhotonState::from_matrix(bad), std::invalid_argument);

    Eigen::Matrix4cd nonherm = Eigen::Matrix4cd::Identity() / 4.0;
    nonherm(0, 1) = {0.0, 0.2};
    CHECK_THROWS_AS(TwoPhotonState::from_matrix(nonherm),
                    std::invalid_argument);

    Eigen::Matrix4cd negative = Eigen::Matrix4cd::Zero();
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(TwoPhotonState::from_matrix(negative),
                    std::invalid_argument);
}
