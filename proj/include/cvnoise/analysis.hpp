#ifndef CVNOISE_ANALYSIS_HPP
#define CVNOISE_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elements.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "sideband.hpp"

namespace cvnoise
{

// First-beamsplitter reflectivity that removes the laser source from the output at
// Omega = 0 with phi = 0, given the combining reflectivity epsilon2.
inline double epsilon1_plus(double epsilon2, const OpaParams& opa)
{
    if (!(epsilon2 > 0.0 && epsilon2 < 1.0))
        throw DomainError("epsilon1_plus: epsilon2 must lie strictly inside (0,1)");
    const double kg = opa.kappa() - opa.g();
    const double x = epsilon2 / (1.0 - epsilon2) * 4.0 * opa.kappa_ic() * opa.kappa_oc() / (kg * kg);
    return x / (1.0 + x);
}

// Output variance of the balanced scheme with all inputs at shot noise.
inline double squeezed_vacuum_variance(double epsilon2, const OpaParams& opa)
{
    if (!(epsilon2 >= 0.0 && epsilon2 <= 1.0))
        throw DomainError("squeezed_vacuum_variance: epsilon2 must be in [0,1]");
    const double kg = opa.kappa() - opa.g();
    return 1.0 + epsilon2 * 4.0 * opa.kappa_oc() * opa.g() / (kg * kg);
}

inline MachZehnderParams with_first_splitter(MachZehnderParams p, double epsilon1, double phi)
{
    p.epsilon1 = BeamsplitterParams(epsilon1);
    p.phi = phi;
    return p;
}

// Amplitude-quadrature coefficient of the laser source at the detector.
inline Complex source_coefficient(const MachZehnderParams& p, double omega, ArmConfig arms = ArmConfig::Full)
{
    return evaluate(build_mach_zehnder(p, arms), omega).coefficient(ids::src, Quadrature::Plus);
}

struct CancellationSolution
{
    double epsilon1 = 0.0;
    double phi = 0.0;
    double residual = 0.0; // |c_src| at the solve frequency
    int iterations = 0;
};

struct CancellationSeed
{
    double epsilon1 = 0.0;
    double phi = 0.0;
};

inline constexpr double kCancellationTolerance = 1e-12;

// Damped Newton iteration on Re/Im of the source coefficient over (theta, phi) with
// epsilon1 = sin^2 theta, which keeps the splitter amplitudes smooth at both ends.
inline CancellationSolution solve_cancellation_numeric(const MachZehnderParams& p, double omega,
                                                       CancellationSeed seed, int max_iterations = 100)
{
    constexpr double half_pi = std::numbers::pi / 2.0;
    auto to_epsilon = [](double theta) { return std::clamp(std::pow(std::sin(theta), 2), 0.0, 1.0); };
    auto residual_at = [&](double theta, double phi) {
        return source_coefficient(with_first_splitter(p, to_epsilon(theta), phi), omega);
    };

    double theta = std::asin(std::sqrt(std::clamp(seed.epsilon1, 0.0, 1.0)));
    double phi = seed.phi;
    Complex f = residual_at(theta, phi);
    CancellationSolution best{to_epsilon(theta), phi, std::abs(f), 0};

    constexpr double h = 1e-7;
    for (int it = 1; it <= max_iterations && best.residual >= kCancellationTolerance; ++it)
    {
        const Complex dt = (residual_at(theta + h, phi) - residual_at(theta - h, phi)) / (2.0 * h);
        const Complex dp = (residual_at(theta, phi + h) - residual_at(theta, phi - h)) / (2.0 * h);

        const double det = dt.real() * dp.imag() - dp.real() * dt.imag();
        if (det == 0.0 || !std::isfinite(det))
            break;
        const double step_t = (dp.imag() * f.real() - dp.real() * f.imag()) / det;
        const double step_p = (-dt.imag() * f.real() + dt.real() * f.imag()) / det;

        bool improved = false;
        for (double lambda = 1.0; lambda > 1e-9; lambda *= 0.5)
        {
            const double t_try = std::clamp(theta - lambda * step_t, 0.0, half_pi);
            const double p_try = phi - lambda * step_p;
            const Complex f_try = residual_at(t_try, p_try);
            if (std::abs(f_try) < std::abs(f))
            {
                theta = t_try;
                phi = p_try;
                f = f_try;
                improved = true;
                break;
            }
        }
        best = {to_epsilon(theta), phi, std::abs(f), it};
        if (!improved)
            break;
    }
    if (best.residual >= kCancellationTolerance)
        throw ConvergenceError("solve_cancellation_numeric: no cancellation found, best |c_src| = " +
                                   std::to_string(best.residual),
                               best.residual);
    best.phi = std::remainder(best.phi, 2.0 * std::numbers::pi);
    return best;
}

// Seeded from the closed-form Omega = 0 solution.
inline CancellationSolution solve_cancellation_numeric(const MachZehnderParams& p, double omega)
{
    return solve_cancellation_numeric(p, omega, {epsilon1_plus(p.epsilon2.epsilon(), p.opa), 0.0});
}

struct Suppression
{
    double db = 0.0;
    bool unbounded = false; // residual source coefficient below kCancellationTolerance relative

    static Suppression infinite() { return {std::numeric_limits<double>::max(), true}; }
};

// Source-noise power with the reference arm blocked over source-noise power with the
// reference arm present, with epsilon1 = epsilon1_plus * (1 + mismatch) and phi from p.
inline Suppression suppression_db(const MachZehnderParams& p, double omega, double mismatch)
{
    if (!(mismatch >= 0.0))
        throw DomainError("suppression_db: mismatch must be >= 0");
    const double e1 = epsilon1_plus(p.epsilon2.epsilon(), p.opa) * (1.0 + mismatch);
    if (e1 > 1.0)
        throw DomainError("suppression_db: mismatch drives epsilon1 above 1");
    const MachZehnderParams q = with_first_splitter(p, e1, p.phi);
    const double blocked = std::abs(source_coefficient(q, omega, ArmConfig::ReferenceBlocked));
    const double residual = std::abs(source_coefficient(q, omega, ArmConfig::Full));
    if (blocked == 0.0)
        throw DomainError("suppression_db: no source noise reaches the output through the OPA arm");
    if (residual <= kCancellationTolerance * blocked)
        return Suppression::infinite();
    return {20.0 * std::log10(blocked / residual), false};
}

inline double visibility_efficiency(double visibility) { return visibility * visibility; }

// Composite efficiency of a chain of losses; visibilities must be passed squared.
inline double loss_chain(std::span<const double> etas)
{
    double eta = 1.0;
    for (double e : etas)
    {
        if (!(e > 0.0 && e <= 1.0))
            throw DomainError("loss_chain: every efficiency must be in (0,1]");
        eta *= e;
    }
    return eta;
}

inline double loss_chain(std::initializer_list<double> etas)
{
    return loss_chain(std::span<const double>(etas.begin(), etas.size()));
}

// Variance after an efficiency eta with vacuum filling the lost fraction.
inline double degrade_variance(double v, double eta) { return eta * v + (1.0 - eta); }

// Carrier power at the combining beamsplitter's dark port. Mode mismatch only reduces
// the interference cross term.
inline double dark_port_power(double p1, double p2, double epsilon2, double visibility)
{
    if (!(p1 >= 0.0 && p2 >= 0.0))
        throw DomainError("dark_port_power: powers must be >= 0");
    if (!(epsilon2 >= 0.0 && epsilon2 <= 1.0))
        throw DomainError("dark_port_power: epsilon2 must be in [0,1]");
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw DomainError("dark_port_power: visibility must be in [0,1]");
    const double a = epsilon2 * p1;
    const double b = (1.0 - epsilon2) * p2;
    return std::max(0.0, a + b - 2.0 * visibility * std::sqrt(a * b));
}

struct Band
{
    double f_low_hz = 0.0;
    double f_high_hz = 0.0;
};

// Maximal frequency intervals with total variance below shot_ref, edges interpolated
// linearly at the crossing.
inline std::vector<Band> squeezing_bands(std::span<const SpectrumPoint> spectrum, double shot_ref = 1.0)
{
    std::vector<Band> bands;
    auto crossing = [&](const SpectrumPoint& a, const SpectrumPoint& b) {
        const double t = (shot_ref - a.total) / (b.total - a.total);
        return a.frequency_hz + t * (b.frequency_hz - a.frequency_hz);
    };
    std::optional<double> open;
    for (std::size_t i = 0; i < spectrum.size(); ++i)
    {
        const bool below = spectrum[i].total < shot_ref;
        if (below && !open)
            open = i == 0 ? spectrum[0].frequency_hz : crossing(spectrum[i - 1], spectrum[i]);
        else if (!below && open)
        {
            bands.push_back({*open, crossing(spectrum[i - 1], spectrum[i])});
            open.reset();
        }
    }
    if (open)
        bands.push_back({*open, spectrum.back().frequency_hz});
    return bands;
}

struct BudgetEntry
{
    NoiseSourceId id;
    double contribution = 0.0;
    double share_percent = 0.0;
};

struct NoiseBudget
{
    double frequency_hz = 0.0;
    double total = 0.0;
    std::vector<BudgetEntry> entries;
};

inline NoiseBudget noise_budget(const SpectrumPoint& pt)
{
    NoiseBudget b{pt.frequency_hz, pt.total, {}};
    for (const auto& [id, c] : pt.contributions)
        b.entries.push_back({id, c, 100.0 * c / pt.total});
    return b;
}

} // namespace cvnoise

#endif
