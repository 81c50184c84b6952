#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cvnoise/analysis.hpp"
#include "cvnoise/scenario.hpp"
#include "oracles.hpp"

using namespace cvnoise;

namespace
{
MachZehnderParams ideal_mz(double e2, const OpaParams& opa)
{
    MachZehnderParams p;
    p.epsilon2 = BeamsplitterParams(e2);
    p.opa = opa;
    p.epsilon1 = BeamsplitterParams(epsilon1_plus(e2, opa));
    return p;
}

SpectrumPoint point(double f, double v)
{
    SpectrumPoint pt;
    pt.frequency_hz = f;
    pt.total = v;
    return pt;
}
} // namespace

TEST(Epsilon1Plus, SymmetricCase)
{
    EXPECT_NEAR(epsilon1_plus(0.5, OpaParams(0.5, 0.5, 0.0, 0.0)), 0.5, 1e-15);
}

TEST(Epsilon1Plus, DeamplifyingCase)
{
    // 4 kic koc / (kappa - g)^2 = 1/2.25; x = 99/2.25 = 44; eps1 = 1 - 1/45
    EXPECT_NEAR(epsilon1_plus(0.99, OpaParams(0.5, 0.5, 0.0, -0.5)), 1.0 - 1.0 / 45.0, 1e-14);
    EXPECT_NEAR(epsilon1_plus(0.99, OpaParams(0.5, 0.5, 0.0, -0.5)), 0.97778, 1e-5);
}

TEST(Epsilon1Plus, DomainErrors)
{
    const OpaParams opa(0.5, 0.5, 0.0, 0.0);
    EXPECT_THROW(epsilon1_plus(0.0, opa), DomainError);
    EXPECT_THROW(epsilon1_plus(1.0, opa), DomainError);
}

// Property: eps1+ in (0,1) and monotone increasing in eps2, approaching 1.
TEST(Epsilon1PlusProperties, BoundedAndMonotone)
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i)
    {
        const double kappa_scale = 1e7;
        const OpaParams opa((0.01 + u(rng)) * kappa_scale, (0.05 + u(rng)) * kappa_scale, 0.5 * u(rng) * kappa_scale, 0.0);
        const OpaParams pumped = opa.with_gain(-0.95 * u(rng) * opa.kappa());
        double prev = 0.0;
        for (double e2 = 0.01; e2 < 0.995; e2 += 0.01)
        {
            const double e1 = epsilon1_plus(e2, pumped);
            EXPECT_GT(e1, 0.0);
            EXPECT_LT(e1, 1.0);
            EXPECT_GT(e1, prev);
            prev = e1;
        }
    }
    const OpaParams opa(0.5, 0.5, 0.0, -0.5);
    EXPECT_GT(epsilon1_plus(1.0 - 1e-9, opa), 1.0 - 1e-7);
}

TEST(SqueezedVacuumVariance, Examples)
{
    EXPECT_DOUBLE_EQ(squeezed_vacuum_variance(0.99, OpaParams(1.0, 8.0, 1.0, 0.0)), 1.0);
    // 1 + 0.99 * 4 * 0.88 * (-0.5) / 1.5^2
    const double v = squeezed_vacuum_variance(0.99, OpaParams(0.06, 0.88, 0.06, -0.5));
    EXPECT_NEAR(v, 1.0 - 0.99 * 1.76 / 2.25, 1e-15);
    EXPECT_NEAR(v, 0.2256, 1e-12);
    EXPECT_NEAR(db_rel_shot(v), -6.466, 1e-3);
}

TEST(SqueezedVacuumVariance, MatchesNetworkEvaluationAtCancellation)
{
    const OpaParams opa(2e6, 6e7, 4e6, -2.5e7);
    const auto p = ideal_mz(0.97, opa);
    const auto net = build_mach_zehnder(p);
    const double v = variance(evaluate(net, 0.0), Quadrature::Plus, source_models_for(net));
    EXPECT_NEAR(v, squeezed_vacuum_variance(0.97, opa), 1e-10 * v);
}

// Property: below shot noise iff g < 0 and eps2 > 0; monotone in the loss 1 - eps2.
TEST(SqueezedVacuumVarianceProperties, SignAndLossMonotonicity)
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i)
    {
        const OpaParams base(u(rng), 0.05 + u(rng), 0.5 * u(rng), 0.0);
        const double g = (2.0 * u(rng) - 1.0) * 0.95 * base.kappa();
        const OpaParams opa = base.with_gain(g);
        const double e2 = 0.01 + 0.98 * u(rng);
        EXPECT_EQ(squeezed_vacuum_variance(e2, opa) < 1.0, g < 0.0);
        EXPECT_DOUBLE_EQ(squeezed_vacuum_variance(0.0, opa), 1.0);
        if (g < 0.0)
        {
            EXPECT_LT(squeezed_vacuum_variance(e2, opa), squeezed_vacuum_variance(e2 * 0.9, opa));
        }
    }
}

TEST(SolveCancellation, ZeroFrequencyRecoversClosedFormFromPerturbedSeed)
{
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i)
    {
        const double scale = std::pow(10.0, 6.0 + 3.0 * u(rng));
        const OpaParams base((0.01 + u(rng)) * scale, (0.05 + u(rng)) * scale, 0.5 * u(rng) * scale, 0.0);
        const OpaParams opa = base.with_gain(-0.95 * u(rng) * base.kappa());
        const double e2 = 0.01 + 0.98 * u(rng);
        const auto p = ideal_mz(e2, opa);
        const double exact = epsilon1_plus(e2, opa);
        const double seed = std::clamp(exact + 0.1 * (u(rng) - 0.5), 0.01, 0.99);
        const auto sol = solve_cancellation_numeric(p, 0.0, {seed, 0.2 * (u(rng) - 0.5)});
        EXPECT_NEAR(sol.epsilon1, exact, 1e-10);
        EXPECT_NEAR(sol.phi, 0.0, 1e-8);
        EXPECT_LT(sol.residual, 1e-12);
    }
}

TEST(SolveCancellation, SymmetricCase)
{
    const auto sol = solve_cancellation_numeric(ideal_mz(0.5, OpaParams(0.5, 0.5, 0.0, 0.0)), 0.0);
    EXPECT_NEAR(sol.epsilon1, 0.5, 1e-12);
    EXPECT_NEAR(sol.phi, 0.0, 1e-12);
}

TEST(SolveCancellation, FiniteFrequencyMatchesPhaseRotatedBalance)
{
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i)
    {
        const OpaParams opa(0.3e7 * (0.1 + u(rng)), 1e8 * (0.5 + u(rng)), 1e7 * u(rng), -5e7 * u(rng));
        const double e2 = 0.5 + 0.49 * u(rng);
        const double omega = 0.3 * u(rng) * opa.kappa();
        double e1_ref = 0, phi_ref = 0;
        oracle::finite_omega_cancellation(e2, opa.kappa_ic(), opa.kappa_oc(), opa.kappa_loss(), opa.g(), omega,
                                          e1_ref, phi_ref);
        const auto sol = solve_cancellation_numeric(ideal_mz(e2, opa), omega);
        EXPECT_LT(sol.residual, 1e-12);
        EXPECT_NEAR(sol.epsilon1, e1_ref, 1e-8);
        EXPECT_NEAR(sol.phi, phi_ref, 1e-7);
    }
}

TEST(SolveCancellation, ReportsBestResidualWhenIterationsRunOut)
{
    const auto p = ideal_mz(0.9, OpaParams(1e6, 8e7, 5e6, -3e7));
    try
    {
        solve_cancellation_numeric(p, 1e6, {0.9, 1.0}, 0);
        FAIL() << "expected ConvergenceError";
    }
    catch (const ConvergenceError& e)
    {
        EXPECT_GT(e.best_residual, 1e-3);
    }
}

TEST(SolveCancellation, ResidualGrowsQuadraticallyAwayFromDc)
{
    const OpaParams opa(1e6, 8e7, 5e6, -3e7);
    const auto p = ideal_mz(0.99, opa);
    std::vector<double> omegas, powers;
    for (double x = 1e-4; x <= 1e-2 * 1.0001; x *= std::pow(10.0, 0.25))
    {
        omegas.push_back(x * opa.kappa());
        powers.push_back(std::norm(source_coefficient(p, x * opa.kappa())));
    }
    EXPECT_NEAR(oracle::loglog_slope(omegas, powers), 2.0, 0.01);
}

TEST(Suppression, UnboundedAtExactCancellation)
{
    const auto p = ideal_mz(0.99, OpaParams(1e6, 8e7, 5e6, -3e7));
    const Suppression s = suppression_db(p, 0.0, 0.0);
    EXPECT_TRUE(s.unbounded);
    EXPECT_FALSE(std::isinf(s.db));
}

TEST(Suppression, DecreasesWithMismatchAndIgnoresSourceScale)
{
    auto p = ideal_mz(0.99, OpaParams(1e6, 8e7, 5e6, -3e7));
    const double omega = hz_to_omega(1.5e6);
    double prev = std::numeric_limits<double>::infinity();
    for (double m = 1e-4; m < 0.1; m *= 1.5)
    {
        const Suppression s = suppression_db(p, omega, m);
        ASSERT_FALSE(s.unbounded);
        EXPECT_LT(s.db, prev);
        prev = s.db;
        p.src_model = NoiseVarianceModel(1.0, {{1.5e6, 1e5, 1e3 * m}});
        EXPECT_DOUBLE_EQ(suppression_db(p, omega, m).db, s.db);
    }
    EXPECT_THROW(suppression_db(p, omega, -0.1), DomainError);
}

TEST(Suppression, ReferenceBlockedBaselineIsOpaArmAlone)
{
    auto p = ideal_mz(0.99, OpaParams(1e6, 8e7, 5e6, -3e7));
    const double omega = 1e6;
    const double e1 = p.epsilon1.epsilon();
    const Complex d(p.opa.kappa() - p.opa.g(), omega);
    const Complex expected = std::sqrt((1 - e1) * 0.99) * std::sqrt(4 * 1e6 * 8e7) / d;
    EXPECT_NEAR(std::abs(source_coefficient(p, omega, ArmConfig::ReferenceBlocked) - expected), 0.0, 1e-14);
}

TEST(LossChain, Examples)
{
    EXPECT_DOUBLE_EQ(loss_chain({1.0, 1.0, 1.0}), 1.0);
    const double eta = loss_chain({0.92, visibility_efficiency(0.975), 0.95, 0.88});
    EXPECT_NEAR(eta, 0.731, 0.0005);
    EXPECT_NEAR(1.0 - eta, 0.269, 0.0005);
    EXPECT_NEAR(degrade_variance(0.0, 0.73), 0.27, 1e-15);
    EXPECT_NEAR(db_rel_shot(degrade_variance(0.0, 0.73)), -5.7, 0.05);
    EXPECT_THROW(loss_chain({0.5, 0.0}), DomainError);
    EXPECT_THROW(loss_chain({1.5}), DomainError);
}

TEST(DarkPortPower, Examples)
{
    EXPECT_NEAR(dark_port_power(1e-3, 99e-3, 0.99, 1.0), 0.0, 1e-18);
    // 198 uW + 198 uW - 2 * 0.944 * 198 uW
    EXPECT_NEAR(dark_port_power(200e-6, 19.8e-3, 0.99, 0.944), 22.176e-6, 1e-12);
    EXPECT_NEAR(dark_port_power(200e-6, 19.8e-3, 0.99, 0.944), 22e-6, 0.5e-6);
}

TEST(DarkPortPower, NeverNegative)
{
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i)
        EXPECT_GE(dark_port_power(u(rng), u(rng), u(rng), u(rng)), 0.0);
    EXPECT_THROW(dark_port_power(-1.0, 1.0, 0.5, 0.5), DomainError);
    EXPECT_THROW(dark_port_power(1.0, 1.0, 0.5, 1.5), DomainError);
}

TEST(SqueezingBands, AllBelowShotNoise)
{
    std::vector<SpectrumPoint> s{point(1e5, 0.5), point(2e5, 0.6), point(3e5, 0.7)};
    const auto bands = squeezing_bands(s);
    ASSERT_EQ(bands.size(), 1u);
    EXPECT_EQ(bands[0].f_low_hz, 1e5);
    EXPECT_EQ(bands[0].f_high_hz, 3e5);
}

TEST(SqueezingBands, PeakSplitsBandWithInterpolatedEdges)
{
    std::vector<SpectrumPoint> s{point(1e5, 0.5), point(2e5, 1.5), point(3e5, 0.5), point(4e5, 0.8)};
    const auto bands = squeezing_bands(s);
    ASSERT_EQ(bands.size(), 2u);
    EXPECT_NEAR(bands[0].f_high_hz, 1.5e5, 1e-9);
    EXPECT_NEAR(bands[1].f_low_hz, 2.5e5, 1e-9);
    EXPECT_EQ(bands[1].f_high_hz, 4e5);
}

TEST(SqueezingBands, NoneAboveShotNoise)
{
    std::vector<SpectrumPoint> s{point(1e5, 1.5), point(2e5, 1.0)};
    EXPECT_TRUE(squeezing_bands(s).empty());
    EXPECT_TRUE(squeezing_bands(std::vector<SpectrumPoint>{}).empty());
}

TEST(NoiseBudget, SharesSumToHundredPercent)
{
    const auto cfg = preset("paper-fig2");
    const auto net = build_mach_zehnder(cfg.mach_zehnder);
    const auto models = mach_zehnder_sources(net, cfg.mach_zehnder);
    for (double f : {5e4, 1e5, 1.5e6, 2e7})
    {
        const NoiseBudget b = noise_budget(spectrum_point(net, f, models));
        double share = 0.0, sum = 0.0;
        for (const auto& e : b.entries)
        {
            share += e.share_percent;
            sum += e.contribution;
        }
        EXPECT_NEAR(share, 100.0, 1e-9);
        EXPECT_NEAR(sum, b.total, 1e-12 * std::max(1.0, b.total));
    }
}
