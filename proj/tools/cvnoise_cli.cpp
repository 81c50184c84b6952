// cvnoise: frequency sweeps of the single-OPA noise-cancellation interferometer.
//
//   cvnoise run --preset paper-fig2 --out fig2.csv
//   cvnoise run --config scenario.json --out out.csv --budget
//   cvnoise verify --seed 7 --draws 10000
//   cvnoise preset paper-fig3 > my.json

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cvnoise/cvnoise.hpp"

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitVerifyFailed = 2;

struct RunOptions
{
    std::string config;
    std::string preset;
    std::string out;
    std::optional<double> fmin;
    std::optional<double> fmax;
    std::optional<std::size_t> points;
    std::optional<std::string> spacing;
    bool budget = false;
    unsigned threads = 1;
};

int run_scenario_command(const RunOptions& o)
{
    using namespace cvnoise;
    ScenarioConfig cfg = o.preset.empty() ? load_scenario(o.config) : preset(o.preset);
    if (o.fmin)
        cfg.grid.min_hz = *o.fmin;
    if (o.fmax)
        cfg.grid.max_hz = *o.fmax;
    if (o.points)
        cfg.grid.points = *o.points;
    if (o.spacing)
        cfg.grid.spacing = *o.spacing == "linear" ? GridSpacing::Linear : GridSpacing::Log;
    if (!(cfg.grid.min_hz > 0.0) || cfg.grid.points < 2 || !(cfg.grid.max_hz > cfg.grid.min_hz))
        throw ConfigValidationError("grid: need 0 < fmin < fmax and points >= 2");

    const ScenarioResult res = run_scenario(cfg, o.threads);

    std::ofstream out(o.out);
    if (!out)
        throw ConfigValidationError("cannot open output file '" + o.out + "'");
    write_csv(out, res, cfg.outputs.budget || o.budget);

    const auto& p = cfg.mach_zehnder;
    std::printf("scenario        %s\n", cfg.name.c_str());
    std::printf("epsilon1        %.6f%s\n", p.epsilon1.epsilon(), cfg.epsilon1_auto ? " (from cancellation condition)" : "");
    std::printf("epsilon2        %.6f\n", p.epsilon2.epsilon());
    std::printf("escape eff.     %.4f\n", p.opa.escape_efficiency());
    if (p.epsilon2.epsilon() > 0.0 && p.epsilon2.epsilon() < 1.0)
    {
        const double v = squeezed_vacuum_variance(p.epsilon2.epsilon(), p.opa);
        std::printf("V_sqzvac        %.6f (%.2f dB, before detection losses)\n", v, db_rel_shot(v));
    }
    for (const auto& band : squeezing_bands(res.spectrum))
        std::printf("squeezing band  %.4g Hz .. %.4g Hz\n", band.f_low_hz, band.f_high_hz);
    std::printf("rows            %zu -> %s\n", res.spectrum.size(), o.out.c_str());
    return kExitOk;
}

int run_verify_command(std::uint64_t seed, std::size_t draws)
{
    bool ok = true;
    std::printf("seed %llu, draws %zu\n", static_cast<unsigned long long>(seed), draws);
    for (const auto& s : cvnoise::run_verification(seed, draws))
    {
        std::printf("%-26s %s  cases=%-7zu max_error=%.3e tol=%.1e\n", s.name.c_str(), s.passed ? "PASS" : "FAIL",
                    s.cases, s.max_error, s.tolerance);
        ok = ok && s.passed;
    }
    return ok ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Noise spectra of linearised continuous-variable optical networks"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "sweep a scenario and write CSV");
    auto* source = run_cmd->add_option_group("source");
    source->add_option("--config", run.config, "scenario JSON file")->check(CLI::ExistingFile);
    source->add_option("--preset", run.preset, "built-in scenario")
        ->check(CLI::IsMember(cvnoise::preset_names()));
    source->require_option(1);
    run_cmd->add_option("--out", run.out, "CSV output path")->required();
    run_cmd->add_option("--fmin", run.fmin, "lowest grid frequency (Hz)");
    run_cmd->add_option("--fmax", run.fmax, "highest grid frequency (Hz)");
    run_cmd->add_option("--points", run.points, "grid points");
    run_cmd->add_option("--spacing", run.spacing, "grid spacing")->check(CLI::IsMember({"log", "linear"}));
    run_cmd->add_flag("--budget", run.budget, "emit per-source budget columns");
    run_cmd->add_option("--threads", run.threads, "worker threads for the sweep (0 = all cores)");

    std::uint64_t seed = 20040101;
    std::size_t draws = 10000;
    auto* verify_cmd = app.add_subcommand("verify", "run the randomised consistency suites");
    verify_cmd->add_option("--seed", seed, "RNG seed");
    verify_cmd->add_option("--draws", draws, "random draws per suite")->check(CLI::PositiveNumber);

    std::string preset_name;
    auto* preset_cmd = app.add_subcommand("preset", "print a built-in scenario as JSON");
    preset_cmd->add_option("name", preset_name)->required()->check(CLI::IsMember(cvnoise::preset_names()));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try
    {
        if (*run_cmd)
            return run_scenario_command(run);
        if (*verify_cmd)
            return run_verify_command(seed, draws);
        if (*preset_cmd)
        {
            std::cout << cvnoise::paper_preset_json(preset_name == "paper-fig2" ? "fig2" : "fig3").dump(2) << '\n';
            return kExitOk;
        }
    }
    catch (const cvnoise::ConfigParseError& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    }
    catch (const cvnoise::Error& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    }
    return kExitOk;
}
