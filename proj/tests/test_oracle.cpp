#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qbm/oracle.hpp"
#include "oracles.hpp"

using namespace qbm;

namespace {

FullPhaseSpaceModel three_mode_model() {
    SystemParams sys{1.3, 1.1, {}};
    return FullPhaseSpaceModel(sys, {{0.4, 1.0, 0.9}, {-0.3, 0.7, 1.7}, {0.5, 1.1, 2.6}});
}

} // namespace

TEST(Expm, RotationAndIdentity) {
    Eigen::MatrixXd G(2, 2);
    G << 0.0, 1.0, -1.0, 0.0;
    const double th = 0.7;
    Eigen::MatrixXd R = expm(G * th);
    EXPECT_NEAR(R(0, 0), std::cos(th), 1e-14);
    EXPECT_NEAR(R(0, 1), std::sin(th), 1e-14);
    EXPECT_NEAR(R(1, 0), -std::sin(th), 1e-14);
    // large argument exercises the squaring path
    Eigen::MatrixXd R2 = expm(G * 50.0);
    EXPECT_NEAR(R2(0, 0), std::cos(50.0), 1e-11);
    Eigen::MatrixXd I = expm(Eigen::MatrixXd::Zero(3, 3));
    EXPECT_NEAR((I - Eigen::MatrixXd::Identity(3, 3)).norm(), 0.0, 1e-15);
}

TEST(Propagate, IdentityAtTimeZero) {
    auto model = three_mode_model();
    GaussianMomentState g{0.4, -0.3, 0.9, 1.1, 0.2};
    auto st = initial_full_state(model, g, 2.0, 1.0);
    auto out = propagate_full(model, st, 0.0);
    EXPECT_NEAR((out.mean - st.mean).norm(), 0.0, 1e-14);
    EXPECT_NEAR((out.cov - st.cov).norm(), 0.0, 1e-12);
}

TEST(Propagate, FreeOscillatorCovarianceRotatesWithPeriod) {
    SystemParams sys{1.0, 1.0, {}};
    FullPhaseSpaceModel model(sys, {});
    GaussianMomentState g{0.0, 0.0, 2.0, 1.0, 0.0};
    auto st = initial_full_state(model, g, 1.0, 1.0);
    auto quarter = reduced_moments(propagate_full(model, st, M_PI / 2.0));
    EXPECT_NEAR(quarter.sigma_qq, 1.0, 1e-12);  // q <- p under a quarter turn
    EXPECT_NEAR(quarter.sigma_pp, 2.0, 1e-12);
    auto full = reduced_moments(propagate_full(model, st, 2.0 * M_PI));
    EXPECT_NEAR(full.sigma_qq, 2.0, 1e-11);
    EXPECT_NEAR(full.sigma_pp, 1.0, 1e-11);
    EXPECT_NEAR(full.sigma_qp, 0.0, 1e-11);
}

TEST(Propagate, SingleModeMeansFollowNormalModeClosedForm) {
    SystemParams sys{1.5, 1.1, {}};
    std::vector<BathMode> modes{{0.7, 0.8, 2.0}};
    FullPhaseSpaceModel model(sys, modes);
    testoracle::TwoOscillator osc{1.5, 1.1, 0.8, 2.0, 0.7};
    GaussianMomentState g{1.0, 0.0, 0.5, 0.5, 0.0};
    auto st = initial_full_state(model, g, 3.0, 1.0);
    for (double t : {0.5, 1.7, 3.1}) {
        auto r = reduced_moments(propagate_full(model, st, t));
        EXPECT_NEAR(r.mean_q, osc.v1(t), 1e-12);
        EXPECT_NEAR(r.mean_p, 1.5 * osc.dv1(t), 1e-11);
    }
}

TEST(Propagate, SymplecticEnergyAndPurityConservation) {
    auto model = three_mode_model();
    GaussianMomentState g{0.7, -0.1, 0.8, 0.9, 0.15};
    auto st = initial_full_state(model, g, 1.5, 1.0);
    const auto J = model.symplectic_form();
    const double e0 = total_energy(model, st);
    const double det0 = full_state_det(st);
    for (double t : {0.3, 1.9, 7.7, 23.0}) {
        const auto U = model.transition(t);
        EXPECT_LE((U * J * U.transpose() - J).cwiseAbs().maxCoeff(), 1e-10);
        auto out = propagate_full(model, st, t);
        EXPECT_NEAR(total_energy(model, out) / e0, 1.0, 1e-9);
        EXPECT_NEAR(full_state_det(out) / det0, 1.0, 1e-9);
    }
}

TEST(Propagate, ReducedUncertaintyNeverBelowHeisenberg) {
    auto model = three_mode_model();
    const double hbar = 1.0;
    GaussianMomentState g{0.0, 0.0, 0.5, 0.5, 0.0};  // minimal uncertainty
    auto st = initial_full_state(model, g, 2.0, hbar);
    for (double t = 0.0; t < 12.0; t += 0.4) {
        auto r = reduced_moments(propagate_full(model, st, t));
        EXPECT_GE(r.uncertainty_product(), hbar * hbar / 4.0 - 1e-10);
    }
}

TEST(ReducedMoments, FactorizedInitialStateReadsBack) {
    auto model = three_mode_model();
    GaussianMomentState g{0.4, -0.3, 0.9, 1.1, 0.2};
    auto st = initial_full_state(model, g, 2.0, 1.0);
    auto r = reduced_moments(st);
    EXPECT_DOUBLE_EQ(r.mean_q, 0.4);
    EXPECT_DOUBLE_EQ(r.mean_p, -0.3);
    EXPECT_DOUBLE_EQ(r.sigma_qq, 0.9);
    EXPECT_DOUBLE_EQ(r.sigma_pp, 1.1);
    EXPECT_DOUBLE_EQ(r.sigma_qp, 0.2);
}

TEST(ReducedMoments, BathDisplacementLeavesSystemBlockAlone) {
    auto model = three_mode_model();
    GaussianMomentState g{0.1, 0.2, 0.7, 0.8, 0.0};
    auto st = initial_full_state(model, g, 2.0, 1.0);
    st.mean(1) = 3.0;   // displace the first bath coordinate
    st.mean(6) = -2.0;  // and one bath momentum (ordering q,q1..q3,p,p1..p3)
    auto r = reduced_moments(st);
    EXPECT_DOUBLE_EQ(r.mean_q, 0.1);
    EXPECT_DOUBLE_EQ(r.mean_p, 0.2);
    EXPECT_DOUBLE_EQ(r.sigma_qq, 0.7);
}

TEST(ThermalInit, BathBlocksCarryCothWeights) {
    SystemParams sys{1.0, 1.0, {}};
    std::vector<BathMode> modes{{0.2, 1.4, 2.2}};
    FullPhaseSpaceModel model(sys, modes);
    const double beta = 1.7, hbar = 2.0;
    auto st = initial_full_state(model, {0, 0, 1, 1, 0}, beta, hbar);
    const double th = coth_half(hbar * 2.2 * beta);
    EXPECT_NEAR(st.cov(1, 1), hbar / (2.0 * 1.4 * 2.2) * th, 1e-15);
    EXPECT_NEAR(st.cov(3, 3), hbar * 1.4 * 2.2 / 2.0 * th, 1e-15);
    EXPECT_EQ(st.cov(0, 1), 0.0);  // factorized: no system-bath correlations
    EXPECT_EQ(st.cov(2, 3), 0.0);
}

TEST(Extract, DecoupledBathGivesZeros) {
    SystemParams sys{1.0, 1.2, {}};
    FullPhaseSpaceModel model(sys, {});
    auto c = extract_coefficients(model, 2.0, 1.0, 1.3, 1e-4);
    EXPECT_NEAR(c.A, 0.0, 1e-7);
    EXPECT_NEAR(c.B, 0.0, 1e-7);
    EXPECT_NEAR(c.C, 0.0, 1e-7);
    EXPECT_NEAR(c.D, 0.0, 1e-7);
}

TEST(Extract, CoefficientsVanishAsTGoesToZero) {
    SystemParams sys{1.0, 1.0, {}};
    FullPhaseSpaceModel model(sys, {{0.6, 1.0, 1.8}});
    auto c2 = extract_coefficients(model, 1.0, 1.0, 0.02, 2e-3);
    auto c1 = extract_coefficients(model, 1.0, 1.0, 0.01, 2e-3);
    for (auto f : {&CoefficientSet::A, &CoefficientSet::B, &CoefficientSet::C,
                   &CoefficientSet::D}) {
        EXPECT_LT(std::abs(c1.*f), std::abs(c2.*f) + 1e-6);
        EXPECT_LT(std::abs(c2.*f), 0.05);
    }
}

// central differences are second order: fd and fd/2 errors against an fd/8
// reference shrink by >= 3.5
TEST(Extract, FiniteDifferenceRichardsonConsistency) {
    SystemParams sys{1.0, 1.1, {}};
    FullPhaseSpaceModel model(sys, {{0.7, 0.8, 2.0}});
    const double t = 2.0;
    auto c1 = extract_coefficients(model, 2.0, 1.0, t, 8e-3);
    auto c2 = extract_coefficients(model, 2.0, 1.0, t, 4e-3);
    auto cr = extract_coefficients(model, 2.0, 1.0, t, 1e-3);
    int checked = 0;
    for (auto f : {&CoefficientSet::A, &CoefficientSet::B, &CoefficientSet::C,
                   &CoefficientSet::D}) {
        const double e1 = std::abs(c1.*f - cr.*f);
        const double e2 = std::abs(c2.*f - cr.*f);
        if (e1 > 1e-10) {
            EXPECT_GE(e1 / e2, 3.5);
            ++checked;
        }
    }
    EXPECT_GE(checked, 2);
}

// at a Wronskian zero the two mean trajectories become parallel and the
// extraction must refuse rather than fabricate numbers
TEST(Extract, DegenerateMeanPairIsExtractionError) {
    SystemParams sys{1.0, 1.0, {}};
    std::vector<BathMode> modes{{0.5, 1.0, 1.0}};
    FullPhaseSpaceModel model(sys, modes);
    // bisect det = <q>1 <p>2 - <q>2 <p>1 on a bracket around its first zero
    auto det_at = [&](double t) {
        auto s1 = initial_full_state(model, {1, 0, 1, 1, 0}, 1.0, 1.0);
        auto s2 = initial_full_state(model, {0, 1, 1, 1, 0}, 1.0, 1.0);
        auto r1 = reduced_moments(propagate_full(model, s1, t));
        auto r2 = reduced_moments(propagate_full(model, s2, t));
        return r1.mean_q * r2.mean_p - r2.mean_q * r1.mean_p;
    };
    double lo = 0.0, hi = 0.0;
    for (double t = 0.5; t < 6.5; t += 0.1) {
        if (det_at(t) * det_at(t + 0.1) < 0.0) {
            lo = t;
            hi = t + 0.1;
            break;
        }
    }
    ASSERT_LT(det_at(lo) * det_at(hi), 0.0);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (det_at(lo) * det_at(mid) <= 0.0 ? hi : lo) = mid;
    }
    EXPECT_THROW(extract_coefficients(model, 1.0, 1.0, 0.5 * (lo + hi), 1e-4), ExtractionError);
}

TEST(Extract, BadArgumentsAreUsageErrors) {
    SystemParams sys{1.0, 1.0, {}};
    FullPhaseSpaceModel model(sys, {});
    EXPECT_THROW(extract_coefficients(model, 1.0, 1.0, 1.0, 0.0), UsageError);
    EXPECT_THROW(extract_coefficients(model, 1.0, 1.0, 1e-4, 1e-3), UsageError);
}
