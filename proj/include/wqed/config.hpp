// config.hpp: Experiment configuration: JSON ingestion and validation
//
// Field names follow the JSON keys; every quantity carries its unit in the
// key (GHz, MHz, mm, dBm, ...). Conversion to the internal rad/ns and mm/ns
// units happens in the accessors, never in the stored record.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wqed/errors.hpp"
#include "wqed/transmon.hpp"
#include "wqed/units.hpp"

namespace wqed {

using json = nlohmann::json;

// Inclusive arithmetic grid start, start + step, ..., <= stop.
struct Range {
    double start{0.0};
    double stop{0.0};
    double step{1.0};

    std::size_t size() const
    {
        return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    }
    double operator[](std::size_t i) const { return start + static_cast<double>(i) * step; }
    std::vector<double> values() const
    {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*this)[i];
        return out;
    }
    void validate(const std::string& what) const
    {
        if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
            throw ConfigError(what + ": range values must be finite");
        }
        if (!(step > 0.0)) throw ConfigError(what + ": step must be > 0");
        if (stop < start) throw ConfigError(what + ": stop must be >= start");
    }
};

// Where an atom sits on its flux curve: a flux value or a target frequency.
struct Bias {
    enum class Kind { flux, frequency };
    Kind kind{Kind::flux};
    double value{0.0}; // flux quanta or GHz
};

struct AtomConfig {
    TransmonSpec spec;
    Bias bias;
};

struct SweepAxis {
    std::size_t atom{0};
    Bias::Kind kind{Bias::Kind::frequency};
    Range range;
};

struct PowerAxis {
    double reference_dBm{-200.0};
    Range dB;
};

struct SolverConfig {
    enum class Method { master_equation, linear_response };
    Method method{Method::master_equation};
    std::optional<std::size_t> reference_atom;
    double extra_relaxation_MHz{0.0};
    double singular_threshold{1e-12};
};

struct ExperimentConfig {
    std::vector<AtomConfig> atoms;
    WaveguideSpec waveguide;
    Range probe_GHz;
    std::optional<double> power_dBm;
    std::optional<double> V0_V;
    std::optional<SweepAxis> sweep;
    std::optional<PowerAxis> power;
    SolverConfig solver;
    double dip_prominence{0.02};
    std::string output_directory{"."};
    std::string output_prefix{"wqed"};
    json source; // the document this was parsed from, verbatim

    std::vector<TransmonSpec> specs() const
    {
        std::vector<TransmonSpec> out;
        for (const auto& a : atoms) out.push_back(a.spec);
        return out;
    }

    // Probe at omega (rad/ns) with the configured amplitude, shifted by dB.
    ProbeSpec probe_at(double omega, double offset_dB = 0.0) const
    {
        if (V0_V) {
            return ProbeSpec::from_voltage(omega, *V0_V * std::pow(10.0, offset_dB / 20.0), waveguide.Z0_ohm);
        }
        if (!power_dBm && !power) throw ConfigError("probe: no power_dBm or V0_V given");
        const double dBm = power_dBm ? *power_dBm : power->reference_dBm;
        return ProbeSpec::from_power(omega, units::dbm_to_watts(dBm + offset_dB), waveguide.Z0_ohm);
    }
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where)
{
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline double number(const json& j, const char* key, const std::string& where)
{
    const json& v = require(j, key, where);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where)
{
    if (!j.contains(key)) return fallback;
    return number(j, key, where);
}

inline Range parse_range(const json& j, const std::string& where)
{
    if (j.is_number()) return Range{j.get<double>(), j.get<double>(), 1.0};
    Range r{number(j, "start", where), number(j, "stop", where), number(j, "step", where)};
    r.validate(where);
    return r;
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline AtomConfig parse_atom(const json& j, std::size_t index)
{
    const std::string where = "atoms[" + std::to_string(index) + "]";
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown(j,
                   {"label", "EC_GHz", "EJmax_GHz", "max_frequency_GHz", "anchor", "beta", "x_mm", "gamma_phi_MHz",
                    "flux", "frequency_GHz"},
                   where);
    AtomConfig a;
    a.spec.label = j.value("label", "Q" + std::to_string(index + 1));
    a.spec.EC_GHz = number(j, "EC_GHz", where);
    a.spec.beta = number(j, "beta", where);
    a.spec.x_mm = number(j, "x_mm", where);
    a.spec.gamma_phi = units::mhz_to_angular(number_or(j, "gamma_phi_MHz", 0.0, where));

    const int sources = int(j.contains("EJmax_GHz")) + int(j.contains("max_frequency_GHz")) + int(j.contains("anchor"));
    if (sources != 1) {
        throw ConfigError(where + ": give exactly one of EJmax_GHz, max_frequency_GHz, anchor");
    }
    if (!(a.spec.EC_GHz > 0.0)) throw ConfigError(where + ": EC_GHz must be > 0");
    if (j.contains("EJmax_GHz")) {
        a.spec.EJmax_GHz = number(j, "EJmax_GHz", where);
    } else if (j.contains("max_frequency_GHz")) {
        a.spec.EJmax_GHz = ej_for_frequency(number(j, "max_frequency_GHz", where), a.spec.EC_GHz);
    } else {
        const json& anc = j.at("anchor");
        a.spec.EJmax_GHz = ejmax_from_anchor(number(anc, "frequency_GHz", where + ".anchor"),
                                             number(anc, "flux", where + ".anchor"), a.spec.EC_GHz);
    }
    a.spec.validate();

    if (j.contains("flux") && j.contains("frequency_GHz")) {
        throw ConfigError(where + ": give flux or frequency_GHz, not both");
    }
    if (j.contains("frequency_GHz")) {
        a.bias = Bias{Bias::Kind::frequency, number(j, "frequency_GHz", where)};
    } else {
        a.bias = Bias{Bias::Kind::flux, number_or(j, "flux", 0.0, where)};
    }
    return a;
}

} // namespace detail

inline ExperimentConfig parse_config(const json& doc)
{
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(doc, {"atoms", "waveguide", "probe", "sweep", "power", "solver", "dips", "output", "description"},
                   "config");
    ExperimentConfig cfg;
    cfg.source = doc;

    if (doc.contains("waveguide")) {
        const json& w = doc.at("waveguide");
        reject_unknown(w, {"Z0_ohm", "v_m_per_s"}, "waveguide");
        cfg.waveguide.Z0_ohm = number_or(w, "Z0_ohm", 50.0, "waveguide");
        if (w.contains("v_m_per_s")) cfg.waveguide.v_mm_per_ns = units::mps_to_mm_per_ns(number(w, "v_m_per_s", "waveguide"));
    }
    cfg.waveguide.validate();

    const json& atoms = require(doc, "atoms", "config");
    if (!atoms.is_array() || atoms.empty()) throw ConfigError("atoms: expected a nonempty array");
    for (std::size_t i = 0; i < atoms.size(); ++i) cfg.atoms.push_back(parse_atom(atoms[i], i));

    const json& probe = require(doc, "probe", "config");
    reject_unknown(probe, {"frequency_GHz", "power_dBm", "V0_V"}, "probe");
    cfg.probe_GHz = parse_range(require(probe, "frequency_GHz", "probe"), "probe.frequency_GHz");
    if (!(cfg.probe_GHz.start > 0.0)) throw ConfigError("probe.frequency_GHz: frequencies must be > 0");
    if (probe.contains("power_dBm") && probe.contains("V0_V")) {
        throw ConfigError("probe: give power_dBm or V0_V, not both");
    }
    if (!probe.contains("power_dBm") && !probe.contains("V0_V") && !doc.contains("power")) {
        throw ConfigError("probe: give one of power_dBm, V0_V (or a 'power' block)");
    }
    if (probe.contains("power_dBm")) cfg.power_dBm = number(probe, "power_dBm", "probe");
    if (probe.contains("V0_V")) {
        cfg.V0_V = number(probe, "V0_V", "probe");
        if (!(*cfg.V0_V >= 0.0)) throw ConfigError("probe.V0_V must be >= 0");
    }

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        reject_unknown(s, {"atom", "frequency_GHz", "flux"}, "sweep");
        SweepAxis ax;
        const double idx = number(s, "atom", "sweep");
        if (idx < 0 || idx != std::floor(idx) || idx >= static_cast<double>(cfg.atoms.size())) {
            throw ConfigError("sweep.atom: not a valid atom index");
        }
        ax.atom = static_cast<std::size_t>(idx);
        if (s.contains("frequency_GHz") == s.contains("flux")) {
            throw ConfigError("sweep: give exactly one of frequency_GHz, flux");
        }
        ax.kind = s.contains("flux") ? Bias::Kind::flux : Bias::Kind::frequency;
        ax.range = parse_range(s.contains("flux") ? s.at("flux") : s.at("frequency_GHz"), "sweep");
        cfg.sweep = ax;
    }

    if (doc.contains("power")) {
        const json& p = doc.at("power");
        reject_unknown(p, {"reference_dBm", "dB"}, "power");
        PowerAxis ax;
        ax.reference_dBm = number(p, "reference_dBm", "power");
        ax.dB = parse_range(require(p, "dB", "power"), "power.dB");
        cfg.power = ax;
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        reject_unknown(s, {"method", "reference_atom", "extra_relaxation_MHz", "singular_threshold"}, "solver");
        const std::string method = s.value("method", "master_equation");
        if (method == "master_equation") cfg.solver.method = SolverConfig::Method::master_equation;
        else if (method == "linear_response") cfg.solver.method = SolverConfig::Method::linear_response;
        else throw ConfigError("solver.method: expected master_equation or linear_response");
        if (s.contains("reference_atom")) {
            const double idx = number(s, "reference_atom", "solver");
            if (idx < 0 || idx != std::floor(idx) || idx >= static_cast<double>(cfg.atoms.size())) {
                throw ConfigError("solver.reference_atom: not a valid atom index");
            }
            cfg.solver.reference_atom = static_cast<std::size_t>(idx);
        }
        cfg.solver.extra_relaxation_MHz = number_or(s, "extra_relaxation_MHz", 0.0, "solver");
        cfg.solver.singular_threshold = number_or(s, "singular_threshold", 1e-12, "solver");
        if (cfg.solver.extra_relaxation_MHz < 0.0) throw ConfigError("solver.extra_relaxation_MHz must be >= 0");
    }

    if (doc.contains("dips")) {
        reject_unknown(doc.at("dips"), {"prominence"}, "dips");
        cfg.dip_prominence = number_or(doc.at("dips"), "prominence", 0.02, "dips");
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        reject_unknown(o, {"directory", "prefix"}, "output");
        cfg.output_directory = o.value("directory", ".");
        cfg.output_prefix = o.value("prefix", "wqed");
    }
    return cfg;
}

// Accepts either a plain config or a run manifest (which embeds the config).
inline ExperimentConfig parse_config_or_manifest(const json& doc)
{
    if (doc.is_object() && doc.contains("manifest_version") && doc.contains("config")) {
        return parse_config(doc.at("config"));
    }
    return parse_config(doc);
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& cfg)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.source.dump())));
    return buf;
}

} // namespace wqed
