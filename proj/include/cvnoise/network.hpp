#ifndef CVNOISE_NETWORK_HPP
#define CVNOISE_NETWORK_HPP

// Directed acyclic composition of optical elements, evaluated one sideband
// frequency at a time, and the single-OPA Mach-Zehnder noise-cancellation layout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "elements.hpp"
#include "errors.hpp"
#include "sideband.hpp"

namespace cvnoise
{

struct SourceElement
{
    NoiseSourceId id;
    double carrier_power_w = 0.0;
};

struct BeamsplitterElement
{
    BeamsplitterParams params;
};

struct PhaseShiftElement
{
    double phi = 0.0;
};

struct OpaElement
{
    OpaParams params;
    NoiseSourceId oc_vacuum_id;
    NoiseSourceId loss_vacuum_id;
};

struct LossElement
{
    LossParams params;
};

struct ModulatorElement
{
    double freq_hz = 0.0;
    double depth = 0.0;
};

using Element = std::variant<SourceElement, BeamsplitterElement, PhaseShiftElement, OpaElement,
                             LossElement, ModulatorElement>;

inline std::size_t input_count(const Element& e)
{
    if (std::holds_alternative<SourceElement>(e))
        return 0;
    if (std::holds_alternative<BeamsplitterElement>(e))
        return 2;
    return 1;
}

inline std::size_t output_count(const Element& e)
{
    return std::holds_alternative<BeamsplitterElement>(e) ? 2 : 1;
}

// Sources an element injects itself (not counting assigned open inputs).
inline std::vector<NoiseSourceId> injected_by(const Element& e)
{
    return std::visit(
        [](const auto& el) -> std::vector<NoiseSourceId> {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, SourceElement>)
                return {el.id};
            else if constexpr (std::is_same_v<T, OpaElement>)
                return {el.loss_vacuum_id, el.oc_vacuum_id};
            else if constexpr (std::is_same_v<T, LossElement>)
                return {el.params.fresh_vacuum_id()};
            else
                return {};
        },
        e);
}

struct PortRef
{
    std::size_t node = 0;
    std::size_t port = 0;

    friend bool operator==(const PortRef&, const PortRef&) = default;
};

struct Edge
{
    PortRef from; // output port
    PortRef to;   // input port
};

struct Node
{
    std::string name;
    Element element;
};

struct InputAssignment
{
    PortRef port;
    NoiseSourceId id;
};

struct DetectorSpec
{
    PortRef port;
    HomodyneParams params;
};

class NetworkBuilder;

// Validated, immutable network.
class NetworkDescription
{
public:
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<InputAssignment>& inputs() const { return inputs_; }
    const DetectorSpec& detector() const { return detector_; }
    const std::vector<std::size_t>& topological_order() const { return order_; }

    // Every source id in the network, in evaluation order.
    const std::vector<NoiseSourceId>& sources() const { return sources_; }

    std::optional<std::size_t> find_node(const std::string& name) const
    {
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (nodes_[i].name == name)
                return i;
        return std::nullopt;
    }

private:
    friend class NetworkBuilder;
    NetworkDescription() = default;

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<InputAssignment> inputs_;
    DetectorSpec detector_{{}, HomodyneParams{}};
    std::vector<std::size_t> order_;
    std::vector<NoiseSourceId> sources_;
};

class NetworkBuilder
{
public:
    std::size_t add(std::string name, Element element)
    {
        net_.nodes_.push_back({std::move(name), std::move(element)});
        return net_.nodes_.size() - 1;
    }

    NetworkBuilder& connect(PortRef from_output, PortRef to_input)
    {
        net_.edges_.push_back({from_output, to_input});
        return *this;
    }

    // Feed an open input port with a fresh vacuum source.
    NetworkBuilder& assign_input(PortRef input, NoiseSourceId id)
    {
        net_.inputs_.push_back({input, std::move(id)});
        return *this;
    }

    NetworkBuilder& set_detector(PortRef output, HomodyneParams params = {})
    {
        net_.detector_ = {output, params};
        has_detector_ = true;
        return *this;
    }

    NetworkDescription build() const
    {
        NetworkDescription net = net_;
        validate(net);
        return net;
    }

private:
    void validate(NetworkDescription& net) const
    {
        const auto& nodes = net.nodes_;
        const std::size_t n = nodes.size();
        auto node_label = [&](std::size_t i) { return "'" + nodes[i].name + "'"; };

        std::vector<std::vector<int>> in_feeds(n), out_uses(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            in_feeds[i].assign(input_count(nodes[i].element), 0);
            out_uses[i].assign(output_count(nodes[i].element), 0);
        }

        std::vector<std::vector<std::size_t>> successors(n);
        std::vector<std::size_t> indegree(n, 0);
        for (const auto& e : net.edges_)
        {
            if (e.from.node >= n || e.from.port >= out_uses[e.from.node].size())
                throw TopologyError("edge starts at a nonexistent output port");
            if (e.to.node >= n || e.to.port >= in_feeds[e.to.node].size())
                throw TopologyError("edge ends at a nonexistent input port");
            if (++out_uses[e.from.node][e.from.port] > 1)
                throw TopologyError("output port " + std::to_string(e.from.port) + " of " +
                                    node_label(e.from.node) + " drives more than one input");
            ++in_feeds[e.to.node][e.to.port];
            successors[e.from.node].push_back(e.to.node);
            ++indegree[e.to.node];
        }
        for (const auto& a : net.inputs_)
        {
            if (a.port.node >= n || a.port.port >= in_feeds[a.port.node].size())
                throw TopologyError("source '" + a.id.label() + "' assigned to a nonexistent input port");
            ++in_feeds[a.port.node][a.port.port];
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t p = 0; p < in_feeds[i].size(); ++p)
            {
                if (in_feeds[i][p] == 0)
                    throw TopologyError("dangling input port " + std::to_string(p) + " of " + node_label(i));
                if (in_feeds[i][p] > 1)
                    throw TopologyError("input port " + std::to_string(p) + " of " + node_label(i) +
                                        " has more than one feed");
            }
        }

        if (!has_detector_)
            throw TopologyError("no detector port designated");
        const auto& d = net.detector_.port;
        if (d.node >= n || d.port >= out_uses[d.node].size())
            throw TopologyError("detector is attached to a nonexistent output port");
        if (out_uses[d.node][d.port] != 0)
            throw TopologyError("detector output port is also connected to an element");

        // Kahn's algorithm; ties broken by insertion index for a deterministic order.
        std::set<std::size_t> ready;
        for (std::size_t i = 0; i < n; ++i)
            if (indegree[i] == 0)
                ready.insert(i);
        net.order_.clear();
        while (!ready.empty())
        {
            const std::size_t i = *ready.begin();
            ready.erase(ready.begin());
            net.order_.push_back(i);
            for (std::size_t s : successors[i])
                if (--indegree[s] == 0)
                    ready.insert(s);
        }
        if (net.order_.size() != n)
            throw TopologyError("network contains a cycle");

        net.sources_.clear();
        std::set<NoiseSourceId> seen;
        auto record = [&](const NoiseSourceId& id) {
            if (!seen.insert(id).second)
                throw SourceError("noise source '" + id.label() + "' is injected more than once");
            net.sources_.push_back(id);
        };
        for (std::size_t i : net.order_)
        {
            for (const auto& a : net.inputs_)
                if (a.port.node == i)
                    record(a.id);
            for (const auto& id : injected_by(nodes[i].element))
                record(id);
        }
    }

    NetworkDescription net_;
    bool has_detector_ = false;
};

// Field arriving at the detector port at sideband angular frequency omega.
inline LinearField evaluate(const NetworkDescription& net, double omega)
{
    const auto& nodes = net.nodes();
    std::vector<std::vector<std::optional<LinearField>>> outputs(nodes.size());

    auto input_field = [&](std::size_t node, std::size_t port) -> LinearField {
        for (const auto& e : net.edges())
            if (e.to.node == node && e.to.port == port)
                return *outputs[e.from.node][e.from.port];
        for (const auto& a : net.inputs())
            if (a.port.node == node && a.port.port == port)
                return source(a.id, 0.0, omega);
        throw TopologyError("dangling input port"); // unreachable for validated networks
    };

    for (std::size_t i : net.topological_order())
    {
        auto& out = outputs[i];
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, SourceElement>)
                {
                    out = {source(el.id, el.carrier_power_w, omega)};
                }
                else if constexpr (std::is_same_v<T, BeamsplitterElement>)
                {
                    auto [o1, o2] = beamsplitter(input_field(i, 0), input_field(i, 1), el.params);
                    out = {std::move(o1), std::move(o2)};
                }
                else if constexpr (std::is_same_v<T, PhaseShiftElement>)
                {
                    out = {phase_shift(input_field(i, 0), el.phi)};
                }
                else if constexpr (std::is_same_v<T, OpaElement>)
                {
                    out = {opa_transfer(input_field(i, 0), el.params, el.oc_vacuum_id, el.loss_vacuum_id)};
                }
                else if constexpr (std::is_same_v<T, LossElement>)
                {
                    out = {loss(input_field(i, 0), el.params)};
                }
                else
                {
                    out = {modulator(input_field(i, 0), el.freq_hz, el.depth)};
                }
            },
            nodes[i].element);
    }
    const auto& d = net.detector().port;
    return *outputs[d.node][d.port];
}

// Vacuum statistics for every source of the network, except where overridden.
inline SourceModels source_models_for(const NetworkDescription& net, const SourceModels& overrides = {})
{
    SourceModels models;
    for (const auto& id : net.sources())
    {
        auto it = overrides.find(id);
        models.emplace(id, it == overrides.end() ? NoiseVarianceModel::vacuum() : it->second);
    }
    return models;
}

// ---------------------------------------------------------------------------
// Frequency sweeps

enum class GridSpacing
{
    Log,
    Linear,
};

struct FrequencyGrid
{
    double min_hz = 5.0e4;
    double max_hz = 3.0e7;
    std::size_t points = 1000;
    GridSpacing spacing = GridSpacing::Log;
};

inline std::vector<double> make_grid(const FrequencyGrid& g)
{
    if (!(g.min_hz > 0.0))
        throw DomainError("grid: min_hz must be > 0");
    if (g.points == 1)
    {
        if (g.max_hz != g.min_hz)
            throw DomainError("grid: a one-point grid needs min_hz == max_hz");
        return {g.min_hz};
    }
    if (g.points < 2)
        throw DomainError("grid: points must be >= 2");
    if (!(g.max_hz > g.min_hz))
        throw DomainError("grid: max_hz must exceed min_hz");
    std::vector<double> f(g.points);
    const double last = static_cast<double>(g.points - 1);
    for (std::size_t i = 0; i < g.points; ++i)
    {
        const double u = static_cast<double>(i) / last;
        f[i] = g.spacing == GridSpacing::Log ? g.min_hz * std::pow(g.max_hz / g.min_hz, u)
                                             : g.min_hz + (g.max_hz - g.min_hz) * u;
    }
    f.front() = g.min_hz;
    f.back() = g.max_hz;
    return f;
}

struct SpectrumPoint
{
    double frequency_hz = 0.0;
    Quadrature quadrature = Quadrature::Plus; // quadrature of total / contributions
    double v_plus = 0.0;                      // detected variance, amplitude quadrature
    double v_minus = 0.0;                     // detected variance, phase quadrature
    double total = 0.0;
    double total_db = 0.0;
    double shot_ref = 1.0; // detected variance for a shot-noise-limited input
    std::vector<std::pair<NoiseSourceId, double>> contributions;
};

// Pseudo-sources for detector terms that are not carried by the field.
inline const NoiseSourceId& detector_inefficiency_id()
{
    static const NoiseSourceId id{"detector-inefficiency"};
    return id;
}

inline const NoiseSourceId& detector_dark_id()
{
    static const NoiseSourceId id{"detector-dark"};
    return id;
}

// Labels of the per-source budget entries, in the order sweep() reports them.
inline std::vector<NoiseSourceId> budget_labels(const NetworkDescription& net)
{
    std::vector<NoiseSourceId> labels = net.sources();
    const auto& hd = net.detector().params;
    if (hd.efficiency() < 1.0)
        labels.push_back(detector_inefficiency_id());
    if (hd.dark_rel() > 0.0)
        labels.push_back(detector_dark_id());
    return labels;
}

inline SpectrumPoint spectrum_point(const NetworkDescription& net, double frequency_hz,
                                    const SourceModels& sources, Quadrature q = Quadrature::Plus)
{
    const LinearField field = evaluate(net, hz_to_omega(frequency_hz));
    const HomodyneParams& hd = net.detector().params;
    const double eta = hd.efficiency();

    SpectrumPoint pt;
    pt.frequency_hz = frequency_hz;
    pt.quadrature = q;
    pt.v_plus = homodyne_readout(field, Quadrature::Plus, hd, sources);
    pt.v_minus = homodyne_readout(field, Quadrature::Minus, hd, sources);
    pt.total = q == Quadrature::Plus ? pt.v_plus : pt.v_minus;
    pt.total_db = db_rel_shot(pt.total);
    pt.shot_ref = homodyne_readout(1.0, hd);

    pt.contributions.reserve(net.sources().size() + 2);
    for (const auto& id : net.sources())
    {
        double c = 0.0;
        if (auto k = field.coefficient(id))
            c = eta * (std::norm((*k)[q]) * model_for(sources, id)(field.omega(), q));
        pt.contributions.emplace_back(id, c);
    }
    if (eta < 1.0)
        pt.contributions.emplace_back(detector_inefficiency_id(), 1.0 - eta);
    if (hd.dark_rel() > 0.0)
        pt.contributions.emplace_back(detector_dark_id(), hd.dark_rel());
    return pt;
}

struct SweepOptions
{
    Quadrature quadrature = Quadrature::Plus;
    unsigned threads = 1; // 0 selects hardware concurrency
};

inline std::vector<SpectrumPoint> sweep(const NetworkDescription& net, const std::vector<double>& grid_hz,
                                        const SourceModels& sources, SweepOptions options = {})
{
    if (grid_hz.empty())
        throw DomainError("sweep: frequency grid is empty");
    for (std::size_t i = 0; i < grid_hz.size(); ++i)
    {
        if (!(grid_hz[i] > 0.0))
            throw DomainError("sweep: grid frequencies must be > 0");
        if (i > 0 && !(grid_hz[i] > grid_hz[i - 1]))
            throw DomainError("sweep: grid must be strictly increasing");
    }
    for (const auto& id : net.sources())
        model_for(sources, id);

    std::vector<SpectrumPoint> out(grid_hz.size());
    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid_hz.size()));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = spectrum_point(net, grid_hz[i], sources, options.quadrature);
    };
    if (threads <= 1)
    {
        work(0, grid_hz.size());
        return out;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (grid_hz.size() + threads - 1) / threads;
    for (std::size_t begin = 0; begin < grid_hz.size(); begin += chunk)
        pool.emplace_back(work, begin, std::min(begin + chunk, grid_hz.size()));
    pool.clear();
    return out;
}

// ---------------------------------------------------------------------------
// Mach-Zehnder with an OPA in one arm

struct PhaseModulation
{
    double freq_hz = 20.0e6;
    double depth = 0.0;
};

struct MachZehnderParams
{
    BeamsplitterParams epsilon1{0.5};
    BeamsplitterParams epsilon2{0.99};
    OpaParams opa{0.5, 0.5, 0.0, 0.0};
    double phi = 0.0;
    NoiseVarianceModel src_model = NoiseVarianceModel::vacuum();
    HomodyneParams detection{};
    double propagation_eta = 1.0;
    double carrier_power_w = 0.0;
    PhaseModulation modulation{};
};

namespace ids
{
inline const NoiseSourceId src{"src"};
inline const NoiseSourceId vac{"vac"};
inline const NoiseSourceId oc{"oc"};
inline const NoiseSourceId loss{"loss"};
inline const NoiseSourceId ref_block{"ref-block"};
inline const NoiseSourceId propagation{"propagation-loss"};
inline const NoiseSourceId photodiode{"photodiode-loss"};
inline const NoiseSourceId hd_mismatch{"homodyne-mismatch"};
} // namespace ids

enum class ArmConfig
{
    Full,
    ReferenceBlocked, // reference arm removed; vacuum enters the second beamsplitter instead
};

namespace detail
{
// Propagation, photodiode and homodyne-visibility losses after `from`; the detector
// itself is ideal apart from dark noise so every loss shows up in the budget.
inline void append_detection_chain(NetworkBuilder& b, PortRef from, const MachZehnderParams& p)
{
    const auto prop = b.add("propagation", LossElement{LossParams(p.propagation_eta, ids::propagation)});
    const auto pd = b.add("photodiode", LossElement{LossParams(p.detection.pd_efficiency(), ids::photodiode)});
    const double vis2 = p.detection.visibility() * p.detection.visibility();
    const auto vis = b.add("homodyne-visibility", LossElement{LossParams(vis2, ids::hd_mismatch)});
    b.connect(from, {prop, 0});
    b.connect({prop, 0}, {pd, 0});
    b.connect({pd, 0}, {vis, 0});
    b.set_detector({vis, 0}, HomodyneParams(1.0, 1.0, p.detection.dark_rel()));
}

inline PortRef add_opa_arm(NetworkBuilder& b, PortRef seed, const MachZehnderParams& p)
{
    const auto opa = b.add("opa", OpaElement{p.opa, ids::oc, ids::loss});
    b.connect(seed, {opa, 0});
    PortRef out{opa, 0};
    if (p.modulation.depth > 0.0)
    {
        const auto mod = b.add("modulator", ModulatorElement{p.modulation.freq_hz, p.modulation.depth});
        b.connect(out, {mod, 0});
        out = {mod, 0};
    }
    return out;
}
} // namespace detail

// src -> BS(eps1) -> { OPA arm, phase-shifted reference arm } -> BS(eps2) -> detection.
// The vacuum port of BS(eps1) is input a, the laser is input b.
inline NetworkDescription build_mach_zehnder(const MachZehnderParams& p, ArmConfig arms = ArmConfig::Full)
{
    NetworkBuilder b;
    const auto src = b.add("laser", SourceElement{ids::src, p.carrier_power_w});
    const auto bs1 = b.add("bs1", BeamsplitterElement{p.epsilon1});
    b.assign_input({bs1, 0}, ids::vac);
    b.connect({src, 0}, {bs1, 1});

    const PortRef sqz = detail::add_opa_arm(b, {bs1, 0}, p);

    const auto bs2 = b.add("bs2", BeamsplitterElement{p.epsilon2});
    b.connect(sqz, {bs2, 0});
    if (arms == ArmConfig::Full)
    {
        const auto phase = b.add("phase", PhaseShiftElement{p.phi});
        b.connect({bs1, 1}, {phase, 0});
        b.connect({phase, 0}, {bs2, 1});
    }
    else
    {
        b.assign_input({bs2, 1}, ids::ref_block);
    }
    detail::append_detection_chain(b, {bs2, 0}, p);
    return b.build();
}

// The squeezed beam alone: laser seeds the OPA directly and goes to detection.
inline NetworkDescription build_bare_opa(const MachZehnderParams& p)
{
    NetworkBuilder b;
    const auto src = b.add("laser", SourceElement{ids::src, p.carrier_power_w});
    const PortRef sqz = detail::add_opa_arm(b, {src, 0}, p);
    detail::append_detection_chain(b, sqz, p);
    return b.build();
}

inline SourceModels mach_zehnder_sources(const NetworkDescription& net, const MachZehnderParams& p)
{
    return source_models_for(net, {{ids::src, p.src_model}});
}

} // namespace cvnoise

#endif
