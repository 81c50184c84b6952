#ifndef CVNOISE_VERIFY_HPP
#define CVNOISE_VERIFY_HPP

// Randomised self-consistency suites behind `cvnoise verify`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "elements.hpp"
#include "network.hpp"
#include "scenario.hpp"
#include "sideband.hpp"

namespace cvnoise
{

struct SuiteResult
{
    std::string name;
    std::size_t cases = 0;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

namespace detail
{
inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}
} // namespace detail

// Coupling rates in units of kappa scale, with the given gain range relative to kappa.
inline OpaParams random_opa(std::mt19937_64& rng, double g_rel_lo, double g_rel_hi)
{
    using detail::uniform;
    const double scale = std::pow(10.0, uniform(rng, 6.0, 9.0));
    const double kic = uniform(rng, 0.01, 1.0) * scale;
    const double koc = uniform(rng, 0.05, 1.0) * scale;
    const double kloss = uniform(rng, 0.0, 0.5) * scale;
    const double kappa = kic + koc + kloss;
    return OpaParams(kic, koc, kloss, uniform(rng, g_rel_lo, g_rel_hi) * kappa);
}

// Random DAG of passive elements (g = 0 OPAs included) with every open input fed by
// a fresh vacuum source and the detector on one of the unused outputs.
inline NetworkDescription random_passive_network(std::mt19937_64& rng, std::size_t max_elements = 8)
{
    using detail::pick;
    using detail::uniform;

    NetworkBuilder b;
    std::vector<PortRef> open;
    std::size_t next_id = 0;
    auto fresh = [&] { return NoiseSourceId("in" + std::to_string(next_id++)); };

    const auto src = b.add("source", SourceElement{fresh(), uniform(rng, 0.0, 1.0)});
    open.push_back({src, 0});

    auto take = [&]() -> PortRef {
        const std::size_t k = pick(rng, open.size());
        const PortRef p = open[k];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(k));
        return p;
    };
    auto feed = [&](std::size_t node, std::size_t port) {
        if (!open.empty() && uniform(rng, 0.0, 1.0) < 0.8)
            b.connect(take(), {node, port});
        else
            b.assign_input({node, port}, fresh());
    };

    const std::size_t count = 1 + pick(rng, max_elements);
    for (std::size_t i = 0; i < count; ++i)
    {
        const std::string name = "e" + std::to_string(i);
        std::size_t node = 0;
        switch (pick(rng, 4))
        {
        case 0:
            node = b.add(name, BeamsplitterElement{BeamsplitterParams(uniform(rng, 0.0, 1.0))});
            feed(node, 0);
            feed(node, 1);
            open.push_back({node, 0});
            open.push_back({node, 1});
            continue;
        case 1:
            node = b.add(name, PhaseShiftElement{uniform(rng, -std::numbers::pi, std::numbers::pi)});
            break;
        case 2:
            node = b.add(name, LossElement{LossParams(uniform(rng, 0.05, 1.0), fresh())});
            break;
        default: {
            const OpaParams opa = random_opa(rng, 0.0, 0.0);
            const NoiseSourceId oc = fresh();
            const NoiseSourceId lo = fresh();
            node = b.add(name, OpaElement{opa, oc, lo});
            break;
        }
        }
        feed(node, 0);
        open.push_back({node, 0});
    }
    b.set_detector(take());
    return b.build();
}

// Network evaluation at Omega = 0 with epsilon1 from the cancellation condition against
// the closed-form squeezed-vacuum variance.
inline SuiteResult verify_cancellation_consistency(std::mt19937_64& rng, std::size_t draws)
{
    SuiteResult r{"cancellation-consistency", draws, 0.0, 1e-10, true};
    double max_src = 0.0;
    for (std::size_t i = 0; i < draws; ++i)
    {
        MachZehnderParams p;
        p.opa = random_opa(rng, -0.95, 0.0);
        p.epsilon2 = BeamsplitterParams(detail::uniform(rng, 0.01, 0.99));
        p.epsilon1 = BeamsplitterParams(epsilon1_plus(p.epsilon2.epsilon(), p.opa));
        const auto net = build_mach_zehnder(p);
        const LinearField f = evaluate(net, 0.0);
        const double v = variance(f, Quadrature::Plus, source_models_for(net));
        const double expected = squeezed_vacuum_variance(p.epsilon2.epsilon(), p.opa);
        r.max_error = std::max(r.max_error, std::abs(v - expected) / expected);
        max_src = std::max(max_src, std::abs(f.coefficient(ids::src, Quadrature::Plus)));
    }
    r.passed = r.max_error < r.tolerance && max_src < kCancellationTolerance;
    return r;
}

inline SuiteResult verify_passive_unitarity(std::mt19937_64& rng, std::size_t networks, std::size_t freqs = 10)
{
    SuiteResult r{"passive-unitarity", networks * freqs, 0.0, 1e-12, true};
    for (std::size_t i = 0; i < networks; ++i)
    {
        const auto net = random_passive_network(rng);
        const auto models = source_models_for(net);
        for (std::size_t k = 0; k < freqs; ++k)
        {
            const double omega = std::pow(10.0, detail::uniform(rng, 3.0, 10.0));
            const LinearField f = evaluate(net, omega);
            for (auto q : {Quadrature::Plus, Quadrature::Minus})
                r.max_error = std::max(r.max_error, std::abs(variance(f, q, models) - 1.0));
        }
    }
    r.passed = r.max_error < r.tolerance;
    return r;
}

// V+ V- >= 1 for vacuum-seeded OPAs; equality and the closed form when kappa_ic = kappa_loss = 0.
inline SuiteResult verify_uncertainty_product(std::mt19937_64& rng, std::size_t draws)
{
    SuiteResult r{"uncertainty-product", draws, 0.0, 1e-12, true};
    bool bound_ok = true;
    const NoiseSourceId seed{"seed"}, oc{"oc"}, lo{"loss"};
    SourceModels models{{seed, NoiseVarianceModel::vacuum()},
                        {oc, NoiseVarianceModel::vacuum()},
                        {lo, NoiseVarianceModel::vacuum()}};
    for (std::size_t i = 0; i < draws; ++i)
    {
        const OpaParams opa = random_opa(rng, -0.95, 0.95);
        const double omega = detail::uniform(rng, 0.0, 3.0) * opa.kappa();
        const LinearField f = opa_transfer(source(seed, 0.0, omega), opa, oc, lo);
        const double product = variance(f, Quadrature::Plus, models) * variance(f, Quadrature::Minus, models);
        bound_ok = bound_ok && product >= 1.0 - r.tolerance;

        const double k = opa.kappa();
        const double g = opa.g();
        const OpaParams single(0.0, k, 0.0, g);
        const LinearField s = opa_transfer(source(seed, 0.0, omega), single, oc, lo);
        const double vp = variance(s, Quadrature::Plus, models);
        const double vm = variance(s, Quadrature::Minus, models);
        const double w2 = omega * omega;
        const double vp_ref = (w2 + (k + g) * (k + g)) / (w2 + (k - g) * (k - g));
        const double vm_ref = (w2 + (k - g) * (k - g)) / (w2 + (k + g) * (k + g));
        r.max_error = std::max({r.max_error, std::abs(vp - vp_ref), std::abs(vm - vm_ref),
                                std::abs(vp * vm - 1.0)});
    }
    r.passed = bound_ok && r.max_error < r.tolerance;
    return r;
}

inline SuiteResult verify_budget_closure(const ScenarioConfig& cfg)
{
    const ScenarioResult res = run_scenario(cfg);
    SuiteResult r{"budget-closure", res.spectrum.size(), 0.0, 1e-12, true};
    for (const auto& pt : res.spectrum)
    {
        double sum = 0.0;
        for (const auto& [id, c] : pt.contributions)
            sum += c;
        r.max_error = std::max(r.max_error, std::abs(sum - pt.total));
    }
    r.passed = r.max_error < r.tolerance;
    return r;
}

inline std::vector<SuiteResult> run_verification(std::uint64_t seed, std::size_t draws)
{
    std::mt19937_64 rng(seed);
    std::vector<SuiteResult> out;
    out.push_back(verify_cancellation_consistency(rng, draws));
    out.push_back(verify_passive_unitarity(rng, std::max<std::size_t>(1, draws / 10)));
    out.push_back(verify_uncertainty_product(rng, draws));
    out.push_back(verify_budget_closure(preset("paper-fig2")));
    return out;
}

} // namespace cvnoise

#endif
