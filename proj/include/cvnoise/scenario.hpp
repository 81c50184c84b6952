#ifndef CVNOISE_SCENARIO_HPP
#define CVNOISE_SCENARIO_HPP

// Scenario configuration (JSON), built-in presets and CSV emission.
// The schema is documented in docs/config.md.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "elements.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "sideband.hpp"

namespace cvnoise
{

struct ConfigParseError : Error
{
    ConfigParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line(line), column(column)
    {
    }

    std::size_t line;
    std::size_t column;
};

struct ConfigValidationError : Error
{
    using Error::Error;
};

struct OutputSelection
{
    bool budget = false;
    bool bare_opa = false;
};

struct ScenarioConfig
{
    std::string name = "custom";
    MachZehnderParams mach_zehnder;
    bool epsilon1_auto = true;     // epsilon1 derived from the cancellation condition
    double epsilon1_mismatch = 0.0; // fractional error applied to the derived epsilon1
    FrequencyGrid grid;
    OutputSelection outputs;
};

namespace detail
{
// Strict reader for one JSON object: typed access by key, unknown keys rejected.
class ObjectReader
{
public:
    ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const std::string& path() const { return path_; }

    double number(const std::string& key)
    {
        const auto& v = at(key);
        if (!v.is_number())
            fail_key(key, "expected a number");
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key, std::size_t fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            fail_key(key, "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    bool flag(const std::string& key, bool fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = at(key);
        if (!v.is_boolean())
            fail_key(key, "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        if (!has(key))
            return fallback;
        const auto& v = at(key);
        if (!v.is_string())
            fail_key(key, "expected a string");
        return v.get<std::string>();
    }

    const nlohmann::json& raw(const std::string& key) { return at(key); }

    ObjectReader child(const std::string& key) { return ObjectReader(at(key), join(key)); }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    // Throws on any key that was never read.
    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!used_.count(key))
                throw ConfigValidationError(join(key) + ": unknown key");
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigValidationError((path_.empty() ? "<root>" : path_) + ": " + msg);
    }

    [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const
    {
        throw ConfigValidationError(join(key) + ": " + msg);
    }

private:
    const nlohmann::json& at(const std::string& key)
    {
        if (!j_.contains(key))
            fail_key(key, "missing required key");
        used_.insert(key);
        return j_.at(key);
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> used_;
};

// Runs a constructor that may throw DomainError, prefixing the config path.
template <typename F>
auto checked(const std::string& path, F&& make)
{
    try
    {
        return make();
    }
    catch (const DomainError& e)
    {
        throw ConfigValidationError(path + ": " + e.what());
    }
}

inline LinewidthConvention parse_convention(ObjectReader& r, const std::string& key)
{
    const std::string s = r.text(key, "fwhm");
    if (s == "fwhm")
        return LinewidthConvention::Fwhm;
    if (s == "hwhm")
        return LinewidthConvention::Hwhm;
    r.fail_key(key, "expected \"fwhm\" or \"hwhm\"");
}

inline OpaParams parse_opa(ObjectReader r)
{
    OpaParams opa = [&] {
        if (r.has("linewidth_hz"))
        {
            const double t_ic = r.number("t_ic");
            const double t_oc = r.number("t_oc");
            double t_loss = 0.0;
            if (r.has("t_loss") == r.has("escape_efficiency"))
                r.fail("give exactly one of t_loss or escape_efficiency");
            if (r.has("t_loss"))
                t_loss = r.number("t_loss");
            else
            {
                const double escape = r.number("escape_efficiency");
                t_loss = checked(r.join("escape_efficiency"),
                                 [&] { return loss_transmission_for_escape(t_ic, t_oc, escape); });
            }
            const double linewidth = r.number("linewidth_hz");
            const auto convention = parse_convention(r, "linewidth_convention");
            const double g_rel = r.number("g_rel");
            return checked(r.join("g_rel"), [&] {
                return OpaParams::from_mirrors(t_ic, t_oc, t_loss, linewidth, convention, g_rel);
            });
        }
        const double kic = r.number("kappa_ic");
        const double koc = r.number("kappa_oc");
        const double kloss = r.number("kappa_loss", 0.0);
        const double g = r.number("g");
        return checked(r.join("g"), [&] { return OpaParams(kic, koc, kloss, g); });
    }();
    r.finish();
    return opa;
}

inline NoiseVarianceModel parse_noise_model(ObjectReader r)
{
    const double base = r.number("base", 1.0);
    std::vector<LorentzianPeak> peaks;
    if (r.has("peaks"))
    {
        const auto& arr = r.raw("peaks");
        if (!arr.is_array())
            r.fail_key("peaks", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            ObjectReader p(arr[i], r.join("peaks[" + std::to_string(i) + "]"));
            LorentzianPeak peak{p.number("center_hz"), p.number("half_width_hz"), p.number("excess")};
            p.finish();
            peaks.push_back(peak);
        }
    }
    PowerLawExcess low;
    if (r.has("low_freq_excess"))
    {
        auto l = r.child("low_freq_excess");
        low = {l.number("amplitude"), l.number("exponent"), l.number("ref_hz", 1.0e5)};
        l.finish();
    }
    r.finish();
    return checked(r.path(), [&] { return NoiseVarianceModel(base, peaks, low); });
}
} // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& root)
{
    using detail::checked;
    using detail::ObjectReader;

    ObjectReader r(root, "");
    ScenarioConfig cfg;
    cfg.name = r.text("name", "custom");

    auto mz = r.child("mach_zehnder");
    auto& p = cfg.mach_zehnder;
    p.opa = detail::parse_opa(mz.child("opa"));
    const double e2 = mz.number("epsilon2");
    p.epsilon2 = checked(mz.join("epsilon2"), [&] { return BeamsplitterParams(e2); });
    cfg.epsilon1_mismatch = mz.number("epsilon1_mismatch", 0.0);
    std::optional<double> e1;
    if (mz.has("epsilon1"))
    {
        const auto& v = mz.raw("epsilon1");
        if (v.is_string() && v.get<std::string>() == "auto")
            e1.reset();
        else if (v.is_number())
            e1 = v.get<double>();
        else
            mz.fail_key("epsilon1", "expected a number or \"auto\"");
    }
    cfg.epsilon1_auto = !e1.has_value();
    if (!e1)
        e1 = checked(mz.join("epsilon1"), [&] { return epsilon1_plus(e2, p.opa); }) * (1.0 + cfg.epsilon1_mismatch);
    p.epsilon1 = checked(mz.join("epsilon1"), [&] { return BeamsplitterParams(*e1); });
    p.phi = mz.number("phi", 0.0);
    p.propagation_eta = mz.number("propagation_eta", 1.0);
    checked(mz.join("propagation_eta"), [&] { return LossParams(p.propagation_eta, ids::propagation); });
    p.carrier_power_w = mz.number("carrier_power_w", 0.0);
    if (!(p.carrier_power_w >= 0.0))
        mz.fail_key("carrier_power_w", "must be >= 0");
    if (mz.has("detection"))
    {
        auto d = mz.child("detection");
        const double pd = d.number("pd_efficiency", 1.0);
        const double vis = d.number("visibility", 1.0);
        const double dark = d.number("dark_rel", 0.0);
        d.finish();
        p.detection = checked(d.path(), [&] { return HomodyneParams(pd, vis, dark); });
    }
    if (mz.has("modulation"))
    {
        auto m = mz.child("modulation");
        p.modulation = {m.number("freq_hz", 20.0e6), m.number("depth", 0.0)};
        m.finish();
        if (!(p.modulation.depth >= 0.0))
            throw ConfigValidationError(m.join("depth") + ": must be >= 0");
    }
    mz.finish();

    if (r.has("source_noise"))
        p.src_model = detail::parse_noise_model(r.child("source_noise"));

    if (r.has("grid"))
    {
        auto g = r.child("grid");
        cfg.grid.min_hz = g.number("min_hz");
        cfg.grid.max_hz = g.number("max_hz");
        cfg.grid.points = g.count("points", 1000);
        const std::string spacing = g.text("spacing", "log");
        if (spacing == "log")
            cfg.grid.spacing = GridSpacing::Log;
        else if (spacing == "linear")
            cfg.grid.spacing = GridSpacing::Linear;
        else
            g.fail_key("spacing", "expected \"log\" or \"linear\"");
        g.finish();
    }
    if (r.has("outputs"))
    {
        auto o = r.child("outputs");
        cfg.outputs.budget = o.flag("budget", false);
        cfg.outputs.bare_opa = o.flag("bare_opa", false);
        o.finish();
    }
    r.finish();

    if (!(cfg.grid.min_hz > 0.0))
        throw ConfigValidationError("grid.min_hz: must be > 0");
    if (cfg.grid.points < 2)
        throw ConfigValidationError("grid.points: must be >= 2");
    if (!(cfg.grid.max_hz > cfg.grid.min_hz))
        throw ConfigValidationError("grid.max_hz: must exceed grid.min_hz");
    return cfg;
}

inline ScenarioConfig parse_scenario_text(const std::string& text)
{
    nlohmann::json root;
    try
    {
        root = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i)
        {
            if (text[i] == '\n')
            {
                ++line;
                column = 1;
            }
            else
                ++column;
        }
        throw ConfigParseError("parse error at line " + std::to_string(line) + ", column " +
                                   std::to_string(column) + ": " + e.what(),
                               line, column);
    }
    return parse_scenario(root);
}

inline ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigParseError("cannot open config file '" + path + "'", 0, 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Presets

// Experimental values of the single-OPA cancellation experiment. OPA gain, classical
// laser-noise shape, residual epsilon1 mismatch, dark noise and modulation depth are
// modeled values, not measurements.
inline nlohmann::json paper_preset_json(const std::string& figure)
{
    using nlohmann::json;
    json cfg = {
        {"name", "paper-" + figure},
        {"mach_zehnder",
         {
             {"epsilon1", "auto"},
             {"epsilon1_mismatch", 0.04},
             {"epsilon2", 0.99},
             {"phi", 0.0},
             {"opa",
              {
                  {"t_ic", 0.0003},
                  {"t_oc", 0.05},
                  {"escape_efficiency", 0.88},
                  {"linewidth_hz", 29.0e6},
                  {"linewidth_convention", "hwhm"},
                  {"g_rel", -0.3},
              }},
             {"propagation_eta", 0.95},
             {"detection", {{"pd_efficiency", 0.92}, {"visibility", 0.975}, {"dark_rel", 0.0}}},
             {"carrier_power_w", 0.05},
             {"modulation", {{"freq_hz", 20.0e6}, {"depth", 0.1}}},
         }},
        {"source_noise",
         {
             {"base", 1.0},
             {"peaks", json::array({
                           {{"center_hz", 1.08e5}, {"half_width_hz", 8.0e3}, {"excess", 3.5e5}},
                           {{"center_hz", 1.5e6}, {"half_width_hz", 1.0e5}, {"excess", 3.0e4}},
                       })},
             {"low_freq_excess", {{"amplitude", 2.5e4}, {"exponent", 2.0}, {"ref_hz", 1.0e5}}},
         }},
        {"outputs", {{"budget", true}, {"bare_opa", true}}},
    };
    if (figure == "fig2")
        cfg["grid"] = {{"min_hz", 5.0e4}, {"max_hz", 3.0e7}, {"points", 1000}, {"spacing", "log"}};
    else
        cfg["grid"] = {{"min_hz", 5.0e4}, {"max_hz", 5.0e5}, {"points", 901}, {"spacing", "linear"}};
    return cfg;
}

inline std::vector<std::string> preset_names() { return {"paper-fig2", "paper-fig3"}; }

inline ScenarioConfig preset(const std::string& name)
{
    if (name == "paper-fig2")
        return parse_scenario(paper_preset_json("fig2"));
    if (name == "paper-fig3")
        return parse_scenario(paper_preset_json("fig3"));
    throw ConfigValidationError("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Running and CSV output

struct ScenarioResult
{
    std::vector<NoiseSourceId> labels; // budget column order
    std::vector<SpectrumPoint> spectrum;
    std::vector<SpectrumPoint> bare_opa; // empty unless requested
};

inline ScenarioResult run_scenario(const ScenarioConfig& cfg, unsigned threads = 1)
{
    const auto& p = cfg.mach_zehnder;
    const auto grid = make_grid(cfg.grid);
    const SweepOptions opts{Quadrature::Plus, threads};

    const NetworkDescription net = build_mach_zehnder(p);
    ScenarioResult res;
    res.labels = budget_labels(net);
    res.spectrum = sweep(net, grid, mach_zehnder_sources(net, p), opts);
    if (cfg.outputs.bare_opa)
    {
        const NetworkDescription bare = build_bare_opa(p);
        res.bare_opa = sweep(bare, grid, mach_zehnder_sources(bare, p), opts);
    }
    return res;
}

// 12 significant digits, scientific notation.
inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

inline void write_csv(std::ostream& out, const ScenarioResult& res, bool budget)
{
    out << "frequency_hz,v_total,v_total_db,shot_ref";
    if (budget)
        for (const auto& id : res.labels)
            out << ",v_" << id.label();
    const bool bare = !res.bare_opa.empty();
    if (bare)
        out << ",v_bare_opa,v_bare_opa_db";
    out << '\n';

    for (std::size_t i = 0; i < res.spectrum.size(); ++i)
    {
        const auto& pt = res.spectrum[i];
        out << format_number(pt.frequency_hz) << ',' << format_number(pt.total) << ','
            << format_number(pt.total_db) << ',' << format_number(pt.shot_ref);
        if (budget)
            for (const auto& [id, c] : pt.contributions)
                out << ',' << format_number(c);
        if (bare)
            out << ',' << format_number(res.bare_opa[i].total) << ',' << format_number(res.bare_opa[i].total_db);
        out << '\n';
    }
}

} // namespace cvnoise

#endif
