#ifndef CVNOISE_SIDEBAND_HPP
#define CVNOISE_SIDEBAND_HPP

// Quadrature fluctuation operators in frequency space, represented as linear
// combinations of independent noise sources, and homodyne variance evaluation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cvnoise
{

using Complex = std::complex<double>;

enum class Quadrature
{
    Plus,  // amplitude quadrature X+
    Minus, // phase quadrature X-
};

inline const char* to_string(Quadrature q)
{
    return q == Quadrature::Plus ? "plus" : "minus";
}

class NoiseSourceId
{
public:
    explicit NoiseSourceId(std::string label) : label_(std::move(label)) {}

    const std::string& label() const { return label_; }

    friend auto operator<=>(const NoiseSourceId&, const NoiseSourceId&) = default;
    friend bool operator==(const NoiseSourceId&, const NoiseSourceId&) = default;

private:
    std::string label_;
};

inline double hz_to_omega(double hz) { return 2.0 * std::numbers::pi * hz; }
inline double omega_to_hz(double omega) { return omega / (2.0 * std::numbers::pi); }

struct LorentzianPeak
{
    double center_hz = 0.0;
    double half_width_hz = 1.0;
    double excess = 0.0; // linear excess over base at the peak center
};

// excess(f) = amplitude * (ref_hz / f)^exponent
struct PowerLawExcess
{
    double amplitude = 0.0;
    double exponent = 1.0;
    double ref_hz = 1.0e5;
};

// Variance spectrum of one input source, shot noise normalised to 1.
class NoiseVarianceModel
{
public:
    NoiseVarianceModel() = default;

    explicit NoiseVarianceModel(double base,
                                std::vector<LorentzianPeak> peaks = {},
                                PowerLawExcess low_freq_excess = {})
        : base_(base), peaks_(std::move(peaks)), low_freq_(low_freq_excess)
    {
        if (!(base_ >= 0.0))
            throw DomainError("NoiseVarianceModel: base variance must be >= 0");
        for (const auto& p : peaks_)
        {
            if (!(p.excess >= 0.0))
                throw DomainError("NoiseVarianceModel: peak excess must be >= 0");
            if (!(p.half_width_hz > 0.0))
                throw DomainError("NoiseVarianceModel: peak half width must be > 0");
        }
        if (!(low_freq_.amplitude >= 0.0))
            throw DomainError("NoiseVarianceModel: low-frequency excess amplitude must be >= 0");
        if (!(low_freq_.ref_hz > 0.0))
            throw DomainError("NoiseVarianceModel: low-frequency reference frequency must be > 0");
    }

    static NoiseVarianceModel vacuum() { return NoiseVarianceModel(1.0); }

    double base() const { return base_; }
    const std::vector<LorentzianPeak>& peaks() const { return peaks_; }
    const PowerLawExcess& low_freq_excess() const { return low_freq_; }

    double at_hz(double f_hz) const
    {
        double v = base_;
        const double f = std::abs(f_hz);
        for (const auto& p : peaks_)
        {
            const double d = f - p.center_hz;
            const double w2 = p.half_width_hz * p.half_width_hz;
            v += p.excess * w2 / (d * d + w2);
        }
        if (low_freq_.amplitude > 0.0)
        {
            if (f == 0.0)
                return std::numeric_limits<double>::infinity();
            v += low_freq_.amplitude * std::pow(low_freq_.ref_hz / f, low_freq_.exponent);
        }
        return v;
    }

    double at_omega(double omega) const { return at_hz(omega_to_hz(omega)); }

    // Same model for both quadratures; cross-quadrature correlations are not represented.
    double operator()(double omega, Quadrature) const { return at_omega(omega); }

private:
    double base_ = 1.0;
    std::vector<LorentzianPeak> peaks_;
    PowerLawExcess low_freq_;
};

using SourceModels = std::map<NoiseSourceId, NoiseVarianceModel>;

struct QuadratureCoefficients
{
    Complex plus{0.0, 0.0};
    Complex minus{0.0, 0.0};

    Complex operator[](Quadrature q) const { return q == Quadrature::Plus ? plus : minus; }
};

struct CoefficientEntry
{
    NoiseSourceId id;
    QuadratureCoefficients c;
};

// Coherent (mean) amplitude at an offset from the optical carrier, in sqrt(W).
struct MeanComponent
{
    double offset_hz = 0.0;
    Complex amplitude{0.0, 0.0};
};

// An optical field at one point of a network at sideband frequency omega.
// Coefficient entries are kept in first-insertion order and are unique by id.
class LinearField
{
public:
    explicit LinearField(double omega) : omega_(omega) {}

    double omega() const { return omega_; }

    std::span<const CoefficientEntry> coefficients() const { return coeffs_; }
    std::span<const MeanComponent> means() const { return means_; }

    bool contains(const NoiseSourceId& id) const { return find(id) != nullptr; }

    std::optional<QuadratureCoefficients> coefficient(const NoiseSourceId& id) const
    {
        if (const auto* e = find(id))
            return e->c;
        return std::nullopt;
    }

    Complex coefficient(const NoiseSourceId& id, Quadrature q) const
    {
        const auto* e = find(id);
        return e ? e->c[q] : Complex{};
    }

    // Adds to an existing entry (coherent superposition) or appends a new one.
    void accumulate(const NoiseSourceId& id, Complex plus, Complex minus)
    {
        for (auto& e : coeffs_)
        {
            if (e.id == id)
            {
                e.c.plus += plus;
                e.c.minus += minus;
                return;
            }
        }
        coeffs_.push_back({id, {plus, minus}});
    }

    // Appends a fresh injection; the id must not be present yet.
    void inject(const NoiseSourceId& id, Complex plus, Complex minus)
    {
        if (contains(id))
            throw SourceError("noise source '" + id.label() + "' is already present in the field");
        coeffs_.push_back({id, {plus, minus}});
    }

    void accumulate_mean(double offset_hz, Complex amplitude)
    {
        for (auto& m : means_)
        {
            if (m.offset_hz == offset_hz)
            {
                m.amplitude += amplitude;
                return;
            }
        }
        means_.push_back({offset_hz, amplitude});
    }

    Complex mean_at(double offset_hz) const
    {
        for (const auto& m : means_)
            if (m.offset_hz == offset_hz)
                return m.amplitude;
        return {};
    }

    // Copy with coefficients of magnitude below threshold in both quadratures removed.
    LinearField pruned(double threshold = 1e-15) const
    {
        LinearField out(omega_);
        for (const auto& e : coeffs_)
            if (std::abs(e.c.plus) >= threshold || std::abs(e.c.minus) >= threshold)
                out.coeffs_.push_back(e);
        out.means_ = means_;
        return out;
    }

    // Every coefficient and mean amplitude multiplied by factor.
    LinearField scaled(Complex factor) const
    {
        return transformed(factor, factor);
    }

    LinearField transformed(Complex plus_factor, Complex minus_factor) const
    {
        LinearField out(*this);
        for (auto& e : out.coeffs_)
        {
            e.c.plus *= plus_factor;
            e.c.minus *= minus_factor;
        }
        for (auto& m : out.means_)
            m.amplitude *= plus_factor;
        return out;
    }

private:
    const CoefficientEntry* find(const NoiseSourceId& id) const
    {
        auto it = std::find_if(coeffs_.begin(), coeffs_.end(),
                               [&](const CoefficientEntry& e) { return e.id == id; });
        return it == coeffs_.end() ? nullptr : &*it;
    }

    double omega_;
    std::vector<CoefficientEntry> coeffs_;
    std::vector<MeanComponent> means_;
};

// sa*a + sb*b, summing coefficients that share a source id.
inline LinearField superpose(const LinearField& a, double sa, const LinearField& b, double sb)
{
    if (a.omega() != b.omega())
        throw DomainError("cannot combine fields at different sideband frequencies");
    LinearField out(a.omega());
    for (const auto& e : a.coefficients())
        out.accumulate(e.id, sa * e.c.plus, sa * e.c.minus);
    for (const auto& e : b.coefficients())
        out.accumulate(e.id, sb * e.c.plus, sb * e.c.minus);
    for (const auto& m : a.means())
        out.accumulate_mean(m.offset_hz, sa * m.amplitude);
    for (const auto& m : b.means())
        out.accumulate_mean(m.offset_hz, sb * m.amplitude);
    return out;
}

inline const NoiseVarianceModel& model_for(const SourceModels& sources, const NoiseSourceId& id)
{
    auto it = sources.find(id);
    if (it == sources.end())
        throw SourceError("no noise model for source '" + id.label() + "'");
    return it->second;
}

// Incoherent sum of |c_j|^2 V_j over uncorrelated inputs.
inline double variance(const LinearField& field, Quadrature q, const SourceModels& sources)
{
    double v = 0.0;
    for (const auto& e : field.coefficients())
        v += std::norm(e.c[q]) * model_for(sources, e.id)(field.omega(), q);
    return v;
}

// Per-source terms of variance(), in coefficient order.
inline std::vector<std::pair<NoiseSourceId, double>>
variance_contributions(const LinearField& field, Quadrature q, const SourceModels& sources)
{
    std::vector<std::pair<NoiseSourceId, double>> out;
    out.reserve(field.coefficients().size());
    for (const auto& e : field.coefficients())
        out.emplace_back(e.id, std::norm(e.c[q]) * model_for(sources, e.id)(field.omega(), q));
    return out;
}

inline double sum_coefficient_power(const LinearField& field, Quadrature q)
{
    double s = 0.0;
    for (const auto& e : field.coefficients())
        s += std::norm(e.c[q]);
    return s;
}

inline double db_rel_shot(double v)
{
    if (!(v > 0.0))
        throw DomainError("db_rel_shot: variance must be > 0");
    return 10.0 * std::log10(v);
}

} // namespace cvnoise

#endif
