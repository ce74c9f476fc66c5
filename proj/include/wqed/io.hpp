// io.hpp: Tab-separated tables and the JSON run manifest
//
// All numbers are printed with %.17g, so a table read back in holds the
// exact doubles that were written.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wqed/config.hpp"
#include "wqed/sweep.hpp"

namespace wqed {

namespace detail {

inline std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string kind_name(SweepResult::Kind k)
{
    switch (k) {
    case SweepResult::Kind::spectrum: return "spectrum";
    case SweepResult::Kind::sweep2d: return "sweep2d";
    case SweepResult::Kind::power: return "power";
    }
    return "unknown";
}

} // namespace detail

// freq_GHz re_r im_r abs_r phase_rad, one row per probe point of column `col`.
inline std::string spectrum_table(const SweepResult& res, std::size_t col = 0)
{
    std::string s = "freq_GHz\tre_r\tim_r\tabs_r\tphase_rad\n";
    for (std::size_t i = 0; i < res.probe_GHz.size(); ++i) {
        const cplx r = res.at(col, i);
        s += detail::fmt(res.probe_GHz[i]) + '\t' + detail::fmt(r.real()) + '\t' + detail::fmt(r.imag()) + '\t' +
             detail::fmt(std::abs(r)) + '\t' + detail::fmt(std::arg(r)) + '\n';
    }
    return s;
}

// Long format: <axis> freq_GHz abs_r re_r im_r.
inline std::string map_table(const SweepResult& res)
{
    std::string s = res.axis_name + "\tfreq_GHz\tabs_r\tre_r\tim_r\n";
    for (std::size_t col = 0; col < res.axis.size(); ++col) {
        for (std::size_t i = 0; i < res.probe_GHz.size(); ++i) {
            const cplx r = res.at(col, i);
            s += detail::fmt(res.axis[col]) + '\t' + detail::fmt(res.probe_GHz[i]) + '\t' + detail::fmt(std::abs(r)) +
                 '\t' + detail::fmt(r.real()) + '\t' + detail::fmt(r.imag()) + '\n';
        }
    }
    return s;
}

inline std::string dips_table(const SweepResult& res)
{
    const std::string axis = res.axis_name.empty() ? "column" : res.axis_name;
    std::string s = axis + "\tcenter_GHz\tdepth\tfwhm_MHz\tprominence\tmin_abs_r\n";
    for (std::size_t col = 0; col < res.dips.size(); ++col) {
        const double a = res.axis.empty() ? 0.0 : res.axis[col];
        for (const auto& d : res.dips[col]) {
            s += detail::fmt(a) + '\t' + detail::fmt(d.center_GHz) + '\t' + detail::fmt(d.depth) + '\t' +
                 detail::fmt(d.fwhm_MHz) + '\t' + detail::fmt(d.prominence) + '\t' + detail::fmt(d.min_abs_r) + '\n';
        }
    }
    return s;
}

// Power sweeps: splitting of the two deepest dips per power (nan when < 2 dips).
inline std::string splitting_table(const SweepResult& res, double reference_dBm)
{
    std::string s = "power_dB\tpower_dBm\tsplitting_MHz\tmax_depth\n";
    for (std::size_t col = 0; col < res.axis.size(); ++col) {
        double depth = 0.0;
        for (const auto& d : res.dips[col]) depth = std::max(depth, d.depth);
        const auto& sp = res.column_splitting_GHz[col];
        s += detail::fmt(res.axis[col]) + '\t' + detail::fmt(reference_dBm + res.axis[col]) + '\t' +
             (sp ? detail::fmt(*sp * 1e3) : std::string("nan")) + '\t' + detail::fmt(depth) + '\n';
    }
    return s;
}

inline json manifest(const SweepResult& res, const ExperimentConfig& cfg, const std::vector<std::string>& files)
{
    json m;
    m["manifest_version"] = 1;
    m["kind"] = detail::kind_name(res.kind);
    m["config_hash"] = res.config_hash;
    m["config"] = cfg.source;
    m["started_utc"] = res.started_utc;
    m["finished_utc"] = res.finished_utc;
    m["grid"] = {{"probe_points", res.probe_GHz.size()}, {"columns", res.columns()}, {"axis", res.axis_name}};
    json stats = {{"solves", res.stats.solves},
                  {"max_abs_r", res.stats.max_abs_r},
                  {"wall_seconds", res.stats.wall_seconds}};
    stats["min_rho_eigenvalue"] =
        std::isfinite(res.stats.min_rho_eigenvalue) ? json(res.stats.min_rho_eigenvalue) : json(nullptr);
    m["solver_stats"] = stats;
    if (res.splitting) {
        m["splitting"] = {{"splitting_MHz", res.splitting->splitting_GHz * 1e3},
                          {"axis_value", res.splitting->axis_value}};
    }
    if (res.knee_dB) m["saturation_knee_dB"] = *res.knee_dB;
    m["warnings"] = res.warnings;
    m["files"] = files;
    return m;
}

/// Writes every table of `res` plus the manifest; returns the paths written.
inline std::vector<std::string> emit(const SweepResult& res, const ExperimentConfig& cfg)
{
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    const std::string p = cfg.output_prefix;
    std::vector<std::pair<std::string, std::string>> files;
    if (res.kind == SweepResult::Kind::spectrum) {
        files.emplace_back(p + "_spectrum.tsv", spectrum_table(res));
    } else {
        files.emplace_back(p + "_map.tsv", map_table(res));
    }
    files.emplace_back(p + "_dips.tsv", dips_table(res));
    if (res.kind == SweepResult::Kind::power) {
        files.emplace_back(p + "_splitting.tsv", splitting_table(res, cfg.power->reference_dBm));
    }
    std::vector<std::string> written;
    for (const auto& [name, text] : files) {
        detail::write_text(dir / name, text);
        written.push_back((dir / name).string());
    }
    const fs::path mpath = dir / (p + "_manifest.json");
    std::vector<std::string> names;
    for (const auto& f : files) names.push_back(f.first);
    detail::write_text(mpath, manifest(res, cfg, names).dump(2) + "\n");
    written.push_back(mpath.string());
    return written;
}

inline json load_json(const std::string& path)
{
    const std::string text = detail::read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- readers

// Header-addressed numeric table; lines starting with '#' are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline Table read_table(const std::string& path)
{
    std::istringstream in(detail::read_text(path));
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (ls >> cell) cells.push_back(cell);
        if (cells.empty()) continue;
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                              " columns");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (end == c.c_str() || *end != '\0') {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ConfigError(path + ": empty table");
    return t;
}

/// Trace for fitting: needs freq_GHz and either (re_r, im_r) or abs_r.
inline std::vector<ReflectionPoint> read_trace(const std::string& path)
{
    const Table t = read_table(path);
    const auto f = t.column("freq_GHz");
    const auto re = t.column("re_r"), im = t.column("im_r"), ab = t.column("abs_r");
    if (!f) throw ConfigError(path + ": missing freq_GHz column");
    if (!(re && im) && !ab) throw ConfigError(path + ": need re_r and im_r, or abs_r");
    std::vector<ReflectionPoint> out;
    for (const auto& row : t.rows) {
        ReflectionPoint p;
        p.omega_p = units::ghz_to_angular(row[*f]);
        if (re && im) {
            p.r = cplx(row[*re], row[*im]);
        } else {
            p.r = row[*ab];
            p.has_phase = false;
        }
        out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.omega_p < b.omega_p; });
    return out;
}

/// Map for splitting extraction: first column is the sweep axis, then
/// freq_GHz and abs_r (long format as written by map_table).
inline std::pair<std::vector<double>, std::vector<std::vector<ReflectionPoint>>> read_map(const std::string& path)
{
    const Table t = read_table(path);
    const auto f = t.column("freq_GHz"), ab = t.column("abs_r");
    if (!f || !ab || t.header.size() < 3) throw ConfigError(path + ": need <axis>, freq_GHz and abs_r columns");
    std::map<double, std::vector<ReflectionPoint>> cols;
    for (const auto& row : t.rows) {
        cols[row[0]].push_back(ReflectionPoint{units::ghz_to_angular(row[*f]), row[*ab], false});
    }
    std::vector<double> axis;
    std::vector<std::vector<ReflectionPoint>> traces;
    for (auto& [a, trace] : cols) {
        std::sort(trace.begin(), trace.end(), [](const auto& x, const auto& y) { return x.omega_p < y.omega_p; });
        axis.push_back(a);
        traces.push_back(std::move(trace));
    }
    return {axis, traces};
}

} // namespace wqed
