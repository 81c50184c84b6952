#ifndef CVNOISE_ELEMENTS_HPP
#define CVNOISE_ELEMENTS_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include "errors.hpp"
#include "sideband.hpp"

namespace cvnoise
{

enum class LinewidthConvention
{
    Fwhm, // configured linewidth is the full width: kappa = pi * linewidth
    Hwhm, // configured linewidth is the half width: kappa = 2 pi * linewidth
};

inline double kappa_from_linewidth(double linewidth_hz, LinewidthConvention convention)
{
    const double factor = convention == LinewidthConvention::Fwhm ? 1.0 : 2.0;
    return factor * std::numbers::pi * linewidth_hz;
}

// Cavity coupling rates and nonlinear gain, all in s^-1.
class OpaParams
{
public:
    OpaParams(double kappa_ic, double kappa_oc, double kappa_loss, double g)
        : kappa_ic_(kappa_ic), kappa_oc_(kappa_oc), kappa_loss_(kappa_loss), g_(g)
    {
        if (!(kappa_ic >= 0.0 && kappa_oc >= 0.0 && kappa_loss >= 0.0))
            throw DomainError("OpaParams: coupling rates must be >= 0");
        if (!(kappa() > 0.0))
            throw DomainError("OpaParams: total decay rate kappa must be > 0");
        if (!(std::abs(g) < kappa()))
            throw DomainError("OpaParams: |g| must be below kappa (above threshold)");
    }

    // Rates proportional to mirror transmissions, scaled to the configured linewidth.
    // g_rel is the gain in units of the total decay rate.
    static OpaParams from_mirrors(double t_ic, double t_oc, double t_loss, double linewidth_hz,
                                  LinewidthConvention convention, double g_rel)
    {
        const double t_total = t_ic + t_oc + t_loss;
        if (!(t_ic >= 0.0 && t_oc >= 0.0 && t_loss >= 0.0 && t_total > 0.0))
            throw DomainError("OpaParams: mirror transmissions must be >= 0 with a positive sum");
        if (!(linewidth_hz > 0.0))
            throw DomainError("OpaParams: linewidth must be > 0");
        const double kappa = kappa_from_linewidth(linewidth_hz, convention);
        const double scale = kappa / t_total;
        return OpaParams(t_ic * scale, t_oc * scale, t_loss * scale, g_rel * kappa);
    }

    double kappa_ic() const { return kappa_ic_; }
    double kappa_oc() const { return kappa_oc_; }
    double kappa_loss() const { return kappa_loss_; }
    double g() const { return g_; }
    double kappa() const { return kappa_ic_ + kappa_oc_ + kappa_loss_; }
    double escape_efficiency() const { return kappa_oc_ / kappa(); }

    OpaParams with_gain(double g) const { return OpaParams(kappa_ic_, kappa_oc_, kappa_loss_, g); }

private:
    double kappa_ic_;
    double kappa_oc_;
    double kappa_loss_;
    double g_;
};

// Intracavity loss transmission that yields the given escape efficiency t_oc / (t_ic + t_oc + t_loss).
inline double loss_transmission_for_escape(double t_ic, double t_oc, double escape)
{
    if (!(escape > 0.0 && escape <= 1.0))
        throw DomainError("escape efficiency must be in (0,1]");
    const double t_loss = t_oc / escape - t_oc - t_ic;
    if (t_loss < 0.0)
        throw DomainError("escape efficiency not reachable with the given mirror transmissions");
    return t_loss;
}

class BeamsplitterParams
{
public:
    explicit BeamsplitterParams(double epsilon) : epsilon_(epsilon)
    {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw DomainError("BeamsplitterParams: epsilon must be in [0,1], got " + std::to_string(epsilon));
    }

    double epsilon() const { return epsilon_; }

private:
    double epsilon_;
};

class LossParams
{
public:
    LossParams(double eta, NoiseSourceId fresh_vacuum_id) : eta_(eta), vacuum_(std::move(fresh_vacuum_id))
    {
        if (!(eta > 0.0 && eta <= 1.0))
            throw DomainError("LossParams: eta must be in (0,1], got " + std::to_string(eta));
    }

    double eta() const { return eta_; }
    const NoiseSourceId& fresh_vacuum_id() const { return vacuum_; }

private:
    double eta_;
    NoiseSourceId vacuum_;
};

class HomodyneParams
{
public:
    HomodyneParams(double pd_efficiency = 1.0, double visibility = 1.0, double dark_rel = 0.0)
        : pd_(pd_efficiency), visibility_(visibility), dark_(dark_rel)
    {
        if (!(pd_efficiency > 0.0 && pd_efficiency <= 1.0))
            throw DomainError("HomodyneParams: pd_efficiency must be in (0,1]");
        if (!(visibility > 0.0 && visibility <= 1.0))
            throw DomainError("HomodyneParams: visibility must be in (0,1]");
        if (!(dark_rel >= 0.0))
            throw DomainError("HomodyneParams: dark_rel must be >= 0");
    }

    double pd_efficiency() const { return pd_; }
    double visibility() const { return visibility_; }
    double dark_rel() const { return dark_; }

    // Mode mismatch with the local oscillator acts as an efficiency of visibility^2.
    double efficiency() const { return pd_ * visibility_ * visibility_; }

private:
    double pd_;
    double visibility_;
    double dark_;
};

// A coherent state: unit coefficient in both quadratures, carrier amplitude sqrt(P).
inline LinearField source(const NoiseSourceId& id, double carrier_power_w, double omega = 0.0)
{
    if (!(carrier_power_w >= 0.0))
        throw DomainError("source: carrier power must be >= 0");
    LinearField f(omega);
    f.inject(id, 1.0, 1.0);
    if (carrier_power_w > 0.0)
        f.accumulate_mean(0.0, std::sqrt(carrier_power_w));
    return f;
}

// out1 = sqrt(eps) a + sqrt(1-eps) b,  out2 = sqrt(1-eps) a - sqrt(eps) b.
inline std::pair<LinearField, LinearField>
beamsplitter(const LinearField& a, const LinearField& b, const BeamsplitterParams& p)
{
    if (a.omega() != b.omega())
        throw DomainError("beamsplitter: input fields are at different sideband frequencies");
    const double r = std::sqrt(p.epsilon());
    const double t = std::sqrt(1.0 - p.epsilon());
    return {superpose(a, r, b, t), superpose(a, t, b, -r)};
}

inline LinearField phase_shift(const LinearField& f, double phi)
{
    return f.scaled(std::polar(1.0, -phi));
}

namespace detail
{
// Denominator i*Omega + kappa -/+ g for X+/X-.
inline Complex opa_denominator(const OpaParams& p, double omega, Quadrature q)
{
    const double g = q == Quadrature::Plus ? p.g() : -p.g();
    return {p.kappa() - g, omega};
}

inline Complex opa_oc_numerator(const OpaParams& p, double omega, Quadrature q)
{
    const double g = q == Quadrature::Plus ? p.g() : -p.g();
    return {2.0 * p.kappa_oc() - p.kappa() + g, -omega};
}
} // namespace detail

// Seed-to-output amplitude transfer of the OPA cavity for one quadrature.
inline Complex opa_seed_transfer(const OpaParams& p, double omega, Quadrature q)
{
    return std::sqrt(4.0 * p.kappa_ic() * p.kappa_oc()) / detail::opa_denominator(p, omega, q);
}

// Transmitted field of an OPA seeded through the input coupler. The output coupler
// and intracavity loss ports inject the named vacuum sources.
inline LinearField opa_transfer(const LinearField& seed, const OpaParams& p,
                                const NoiseSourceId& oc_vacuum_id, const NoiseSourceId& loss_vacuum_id)
{
    if (seed.contains(oc_vacuum_id))
        throw SourceError("opa_transfer: output-coupler source '" + oc_vacuum_id.label() + "' already present");
    if (seed.contains(loss_vacuum_id))
        throw SourceError("opa_transfer: loss source '" + loss_vacuum_id.label() + "' already present");
    if (oc_vacuum_id == loss_vacuum_id)
        throw SourceError("opa_transfer: output-coupler and loss sources must be distinct");

    const double omega = seed.omega();
    const Complex d_plus = detail::opa_denominator(p, omega, Quadrature::Plus);
    const Complex d_minus = detail::opa_denominator(p, omega, Quadrature::Minus);
    const double seed_gain = std::sqrt(4.0 * p.kappa_ic() * p.kappa_oc());

    LinearField out(omega);
    for (const auto& e : seed.coefficients())
        out.inject(e.id, e.c.plus * seed_gain / d_plus, e.c.minus * seed_gain / d_minus);

    const double loss_gain = std::sqrt(4.0 * p.kappa_loss() * p.kappa_oc());
    out.inject(loss_vacuum_id, loss_gain / d_plus, loss_gain / d_minus);
    out.inject(oc_vacuum_id,
               detail::opa_oc_numerator(p, omega, Quadrature::Plus) / d_plus,
               detail::opa_oc_numerator(p, omega, Quadrature::Minus) / d_minus);

    // classical (de)amplification of the coherent amplitudes, evaluated at Omega = 0
    const Complex mean_gain = opa_seed_transfer(p, 0.0, Quadrature::Plus);
    for (const auto& m : seed.means())
        out.accumulate_mean(m.offset_hz, m.amplitude * mean_gain);
    return out;
}

inline LinearField loss(const LinearField& f, const LossParams& p)
{
    if (f.contains(p.fresh_vacuum_id()))
        throw SourceError("loss: vacuum source '" + p.fresh_vacuum_id().label() + "' already present");
    LinearField out = f.scaled(std::sqrt(p.eta()));
    const double t = std::sqrt(1.0 - p.eta());
    out.inject(p.fresh_vacuum_id(), t, t);
    return out;
}

// First-order phase modulation: two sidebands of amplitude (depth/2)|carrier| in phase quadrature.
inline LinearField modulator(const LinearField& f, double mod_freq_hz, double mod_depth)
{
    if (!(mod_depth >= 0.0))
        throw DomainError("modulator: depth must be >= 0");
    if (mod_depth == 0.0)
        return f;
    const Complex carrier = f.mean_at(0.0);
    if (carrier == Complex{})
        return f;
    LinearField out(f);
    const Complex sideband = Complex(0.0, 0.5 * mod_depth) * carrier;
    out.accumulate_mean(mod_freq_hz, sideband);
    out.accumulate_mean(-mod_freq_hz, sideband);
    return out;
}

// Variance after detection inefficiency and additive dark noise.
inline double homodyne_readout(double field_variance, const HomodyneParams& p)
{
    const double eta = p.efficiency();
    return eta * field_variance + (1.0 - eta) + p.dark_rel();
}

inline double homodyne_readout(const LinearField& f, Quadrature q, const HomodyneParams& p,
                               const SourceModels& sources)
{
    return homodyne_readout(variance(f, q, sources), p);
}

} // namespace cvnoise

#endif
