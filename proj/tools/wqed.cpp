// wqed.cpp: Command-line front end
//
//   wqed spectrum    <config.json>
//   wqed sweep2d     <config.json>
//   wqed power-sweep <config.json>
//   wqed calibrate-velocity --node 4.745:7 --node 6.094:9 --length-mm 33
//   wqed fit         <trace.tsv> [--mode auto|complex|magnitude] [--branch over|under]
//   wqed splitting   <map.tsv>   [--prominence 0.02]
//
// Sweeps write tables and a manifest under output.directory and print a JSON
// summary on stdout. A manifest can be passed wherever a config is expected.
// Exit codes: 0 ok, 1 config error, 2 solver error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wqed/wqed.hpp"

namespace {

using wqed::json;

struct SweepArgs {
    std::string config;
    std::string out_dir;
    std::string prefix;
    std::size_t workers{0};
};

wqed::ExperimentConfig load_config(const SweepArgs& a)
{
    auto cfg = wqed::parse_config_or_manifest(wqed::load_json(a.config));
    if (!a.out_dir.empty()) cfg.output_directory = a.out_dir;
    if (!a.prefix.empty()) cfg.output_prefix = a.prefix;
    return cfg;
}

void add_sweep_options(CLI::App* cmd, SweepArgs& a)
{
    cmd->add_option("config", a.config, "config or manifest JSON")->required();
    cmd->add_option("--out-dir", a.out_dir, "override output.directory");
    cmd->add_option("--prefix", a.prefix, "override output.prefix");
    cmd->add_option("--workers", a.workers, "worker threads (default: WQED_WORKERS or all cores)");
}

json summarize(const wqed::SweepResult& res, const std::vector<std::string>& files)
{
    json s = {{"config_hash", res.config_hash}, {"files", files}, {"solves", res.stats.solves},
              {"wall_seconds", res.stats.wall_seconds}, {"max_abs_r", res.stats.max_abs_r}};
    if (res.splitting) s["splitting_MHz"] = res.splitting->splitting_GHz * 1e3;
    if (res.splitting) s["closest_approach"] = res.splitting->axis_value;
    if (res.knee_dB) s["saturation_knee_dB"] = *res.knee_dB;
    if (res.kind == wqed::SweepResult::Kind::spectrum) {
        json dips = json::array();
        for (const auto& d : res.dips[0]) {
            dips.push_back({{"center_GHz", d.center_GHz}, {"depth", d.depth}, {"fwhm_MHz", d.fwhm_MHz}});
        }
        s["dips"] = dips;
    }
    return s;
}

template <class Runner>
int run_sweep(const SweepArgs& a, Runner runner)
{
    const auto cfg = load_config(a);
    wqed::RunOptions opts;
    if (a.workers > 0) opts.workers = a.workers;
    const auto res = runner(cfg, opts);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    const auto files = wqed::emit(res, cfg);
    std::cout << summarize(res, files).dump(2) << '\n';
    return 0;
}

int calibrate(const std::vector<std::string>& nodes, double L_mm, double max_spread)
{
    std::vector<wqed::NodeObservation> obs;
    for (const auto& n : nodes) {
        const auto colon = n.find(':');
        if (colon == std::string::npos) throw wqed::ConfigError("--node expects FREQ_GHZ:ORDER, got '" + n + "'");
        try {
            std::size_t used = 0;
            const std::string f = n.substr(0, colon), o = n.substr(colon + 1);
            const double freq = std::stod(f, &used);
            if (used != f.size()) throw std::invalid_argument(f);
            const int order = std::stoi(o, &used);
            if (used != o.size()) throw std::invalid_argument(o);
            obs.push_back({freq, order});
        } catch (const std::logic_error&) {
            throw wqed::ConfigError("--node expects FREQ_GHZ:ORDER, got '" + n + "'");
        }
    }
    const auto cal = wqed::calibrate_velocity(obs, L_mm, max_spread);
    std::cout << json{{"v_m_per_s", cal.v_m_per_s},
                      {"max_relative_spread", cal.max_relative_spread},
                      {"per_node_m_per_s", cal.per_node_m_per_s}}
                     .dump(2)
              << '\n';
    return 0;
}

int fit(const std::string& path, const std::string& mode, const std::string& branch)
{
    wqed::FitOptions opts;
    if (mode == "complex") opts.mode = wqed::FitOptions::Mode::complex;
    else if (mode == "magnitude") opts.mode = wqed::FitOptions::Mode::magnitude;
    opts.branch = branch == "under" ? wqed::FitOptions::Branch::undercoupled : wqed::FitOptions::Branch::overcoupled;
    const auto res = wqed::fit_single_atom(wqed::read_trace(path), opts);
    json out = {{"omega10_GHz", res.omega10_GHz},
                {"Gamma_MHz", res.Gamma_MHz},
                {"gamma_phi_MHz", res.gamma_phi_MHz},
                {"gamma_MHz", res.gamma_MHz()},
                {"residual_rms", res.residual_rms},
                {"used_phase", res.used_phase},
                {"evaluations", res.evaluations}};
    if (res.alternate) {
        out["alternate"] = {{"Gamma_MHz", res.alternate->first}, {"gamma_phi_MHz", res.alternate->second}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int splitting(const std::string& path, double prominence)
{
    const auto [axis, traces] = wqed::read_map(path);
    std::vector<std::vector<wqed::DipReport>> dips;
    for (const auto& t : traces) dips.push_back(wqed::find_dips(t, wqed::DipOptions{prominence}));
    const auto s = wqed::extract_splitting(axis, dips);
    std::cout << json{{"splitting_MHz", s.splitting_GHz * 1e3}, {"closest_approach", s.axis_value}}.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Waveguide QED simulator: atoms in front of a mirror"};
    app.require_subcommand(1);

    SweepArgs spec_args, map_args, power_args;
    auto* spectrum = app.add_subcommand("spectrum", "reflection spectrum at a fixed operating point");
    add_sweep_options(spectrum, spec_args);
    auto* sweep2d = app.add_subcommand("sweep2d", "probe frequency x atom bias map");
    add_sweep_options(sweep2d, map_args);
    auto* power = app.add_subcommand("power-sweep", "probe frequency x probe power map");
    add_sweep_options(power, power_args);

    std::vector<std::string> nodes;
    double length_mm = 0.0, max_spread = 0.02;
    auto* cal = app.add_subcommand("calibrate-velocity", "line velocity from field-node frequencies");
    cal->add_option("--node", nodes, "FREQ_GHZ:ORDER with L = ORDER * lambda / 4")->required();
    cal->add_option("--length-mm", length_mm, "distance of the atom from the mirror")->required();
    cal->add_option("--max-spread", max_spread, "largest accepted relative spread");

    std::string trace_path, fit_mode = "auto", fit_branch = "over";
    auto* fitc = app.add_subcommand("fit", "fit the single-atom model to a trace");
    fitc->add_option("trace", trace_path, "TSV with freq_GHz and re_r/im_r or abs_r")->required();
    fitc->add_option("--mode", fit_mode)->check(CLI::IsMember({"auto", "complex", "magnitude"}));
    fitc->add_option("--branch", fit_branch, "magnitude fits: over or under coupled solution")
        ->check(CLI::IsMember({"over", "under"}));

    std::string map_path;
    double prominence = 0.02;
    auto* split = app.add_subcommand("splitting", "two-dip splitting at closest approach of a map");
    split->add_option("map", map_path, "long-format map TSV")->required();
    split->add_option("--prominence", prominence);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*spectrum) return run_sweep(spec_args, [](auto& c, auto& o) { return wqed::run_spectrum(c, o); });
        if (*sweep2d) return run_sweep(map_args, [](auto& c, auto& o) { return wqed::run_sweep2d(c, o); });
        if (*power) return run_sweep(power_args, [](auto& c, auto& o) { return wqed::run_power_sweep(c, o); });
        if (*cal) return calibrate(nodes, length_mm, max_spread);
        if (*fitc) return fit(trace_path, fit_mode, fit_branch);
        if (*split) return splitting(map_path, prominence);
    } catch (const wqed::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
