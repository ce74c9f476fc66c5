// sweep.hpp: Sweep orchestration: spectra, probe x bias maps, power series
//
// Every grid point is an independent steady-state solve. Points are handed
// out to worker threads through an atomic counter and written into a
// pre-sized table, so the output never depends on scheduling.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wqed/config.hpp"
#include "wqed/coupling.hpp"
#include "wqed/liouvillian.hpp"
#include "wqed/observables.hpp"
#include "wqed/solver.hpp"

namespace wqed {

// ---------------------------------------------------------------- workers

// WQED_WORKERS if set to a positive integer, else the hardware concurrency.
inline std::size_t default_workers()
{
    if (const char* env = std::getenv("WQED_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
        throw ConfigError(std::string("WQED_WORKERS: expected a positive integer, got '") + env + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs task(i) for i in [0, count) on `workers` threads. If any task throws,
// the exception of the lowest failing index is rethrown after all threads
// have joined.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task)
{
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    std::atomic<std::size_t> next{0};
    std::mutex guard;
    std::size_t failed_at = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;

    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------- results

struct SolverStats {
    std::size_t solves{0};
    double min_rho_eigenvalue{std::numeric_limits<double>::infinity()};
    double max_abs_r{0.0};
    double wall_seconds{0.0};
};

struct SweepResult {
    enum class Kind { spectrum, sweep2d, power };

    Kind kind{Kind::spectrum};
    std::vector<double> probe_GHz;
    std::string axis_name;        // empty for a single spectrum
    std::vector<double> axis;     // one entry per column
    std::vector<cplx> r;          // column-major: r[col * probe + i]
    std::vector<std::vector<DipReport>> dips; // per column
    std::optional<SplittingReport> splitting; // sweep2d only
    std::vector<std::optional<double>> column_splitting_GHz; // power only
    std::optional<double> knee_dB;                           // power only
    std::vector<std::string> warnings;
    SolverStats stats;
    std::string config_hash;
    std::string started_utc;
    std::string finished_utc;

    std::size_t columns() const { return std::max<std::size_t>(axis.size(), 1); }
    cplx at(std::size_t col, std::size_t i) const { return r[col * probe_GHz.size() + i]; }

    std::vector<ReflectionPoint> column(std::size_t col) const
    {
        std::vector<ReflectionPoint> out(probe_GHz.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = ReflectionPoint{units::ghz_to_angular(probe_GHz[i]), at(col, i), true};
        }
        return out;
    }
};

struct RunOptions {
    std::optional<std::size_t> workers;
};

namespace detail {

inline std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline double bias_to_flux(const TransmonSpec& spec, const Bias& b)
{
    return b.kind == Bias::Kind::flux ? b.value : flux_for_frequency(spec, b.value);
}

inline std::string describe_bias(const Bias& b)
{
    return b.kind == Bias::Kind::flux ? "flux " + std::to_string(b.value)
                                      : "frequency " + std::to_string(b.value) + " GHz";
}

// Rethrows the current exception with a location prefix, keeping its category.
[[noreturn]] inline void rethrow_annotated(const std::string& where)
{
    try {
        throw;
    } catch (const SolverError& e) {
        throw SolverError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(where + ": " + e.what());
    }
}

struct PointSolver {
    const ExperimentConfig* cfg;
    GeneratorOptions gen;
    SteadyStateOptions ss;

    explicit PointSolver(const ExperimentConfig& c) : cfg(&c)
    {
        gen.extra_relaxation = units::mhz_to_angular(c.solver.extra_relaxation_MHz);
        ss.singular_threshold = c.solver.singular_threshold;
    }

    // r at one probe frequency; also reports the smallest eigenvalue of rho.
    cplx operator()(const OperatingPoint& pt, const CouplingMatrices& c, double probe_GHz, double offset_dB,
                    double* min_eig) const
    {
        const double omega = units::ghz_to_angular(probe_GHz);
        if (cfg->solver.method == SolverConfig::Method::linear_response) {
            return linear_response_reflection(pt, omega, c, cfg->solver.reference_atom);
        }
        const ProbeSpec probe = cfg->probe_at(omega, offset_dB);
        const DensityMatrix rho = steady_state(build_generator(pt, probe, c, gen), ss);
        if (min_eig) *min_eig = min_eigenvalue(rho);
        return reflection(pt, probe, rho, cfg->solver.reference_atom);
    }
};

inline void check_probe_band(const ExperimentConfig& cfg, const OperatingPoint& pt, std::vector<std::string>& warnings)
{
    const double top = cfg.probe_GHz[cfg.probe_GHz.size() - 1];
    for (std::size_t n = 0; n < pt.size(); ++n) {
        const double f = units::angular_to_ghz(pt.omega10[n]);
        if (top > 2.0 * f) {
            warnings.push_back("probe range reaches " + std::to_string(top) + " GHz, above twice the " +
                               std::to_string(f) + " GHz transition of atom '" + pt.specs[n].label + "'");
        }
    }
}

inline OperatingPoint base_point(const ExperimentConfig& cfg)
{
    std::vector<double> fluxes;
    for (const auto& a : cfg.atoms) fluxes.push_back(bias_to_flux(a.spec, a.bias));
    return make_operating_point(cfg.specs(), fluxes, cfg.waveguide);
}

// Fills result.r for the given per-column operating points and dB offsets.
inline void solve_grid(const ExperimentConfig& cfg, const std::vector<OperatingPoint>& points,
                       const std::vector<double>& offsets_dB, const std::vector<std::string>& column_labels,
                       SweepResult& res, const RunOptions& opts)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t np = res.probe_GHz.size();
    const std::size_t nc = points.size();
    std::vector<CouplingMatrices> couplings;
    couplings.reserve(nc);
    for (const auto& pt : points) couplings.push_back(symmetrize(pt));

    res.r.assign(nc * np, cplx(0.0));
    std::vector<double> min_eig(nc * np, std::numeric_limits<double>::infinity());
    const PointSolver solve(cfg);
    parallel_for(nc * np, opts.workers.value_or(default_workers()), [&](std::size_t k) {
        const std::size_t col = k / np, i = k % np;
        try {
            res.r[k] = solve(points[col], couplings[col], res.probe_GHz[i], offsets_dB[col], &min_eig[k]);
        } catch (...) {
            std::string where = "grid point (probe " + std::to_string(res.probe_GHz[i]) + " GHz";
            if (!column_labels[col].empty()) where += ", " + column_labels[col];
            rethrow_annotated(where + ")");
        }
    });

    res.stats.solves = nc * np;
    for (std::size_t k = 0; k < res.r.size(); ++k) {
        res.stats.min_rho_eigenvalue = std::min(res.stats.min_rho_eigenvalue, min_eig[k]);
        res.stats.max_abs_r = std::max(res.stats.max_abs_r, std::abs(res.r[k]));
    }
    res.dips.resize(nc);
    const DipOptions dip_opts{cfg.dip_prominence};
    for (std::size_t col = 0; col < nc; ++col) res.dips[col] = find_dips(res.column(col), dip_opts);
    res.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/// 1D reflection spectrum at the configured operating point.
inline SweepResult run_spectrum(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    SweepResult res;
    res.kind = SweepResult::Kind::spectrum;
    res.config_hash = config_hash(cfg);
    res.started_utc = detail::utc_now();
    res.probe_GHz = cfg.probe_GHz.values();
    const OperatingPoint pt = detail::base_point(cfg);
    detail::check_probe_band(cfg, pt, res.warnings);
    detail::solve_grid(cfg, {pt}, {0.0}, {""}, res, opts);
    res.finished_utc = detail::utc_now();
    return res;
}

/// Probe frequency x bias of one atom. The bias axis is flux or target
/// transition frequency, whichever the config's sweep block names.
inline SweepResult run_sweep2d(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    if (!cfg.sweep) throw ConfigError("sweep2d: config has no 'sweep' block");
    const SweepAxis& ax = *cfg.sweep;
    SweepResult res;
    res.kind = SweepResult::Kind::sweep2d;
    res.config_hash = config_hash(cfg);
    res.started_utc = detail::utc_now();
    res.probe_GHz = cfg.probe_GHz.values();
    res.axis = ax.range.values();
    const std::string label = cfg.atoms[ax.atom].spec.label;
    res.axis_name = (ax.kind == Bias::Kind::flux ? "flux_" : "frequency_GHz_") + label;

    std::vector<OperatingPoint> points;
    std::vector<std::string> labels;
    std::vector<double> fluxes;
    for (const auto& a : cfg.atoms) fluxes.push_back(detail::bias_to_flux(a.spec, a.bias));
    for (double v : res.axis) {
        const Bias b{ax.kind, v};
        labels.push_back("atom '" + label + "' " + detail::describe_bias(b));
        try {
            fluxes[ax.atom] = detail::bias_to_flux(cfg.atoms[ax.atom].spec, b);
            points.push_back(make_operating_point(cfg.specs(), fluxes, cfg.waveguide));
        } catch (...) {
            detail::rethrow_annotated("sweep column (" + labels.back() + ")");
        }
        detail::check_probe_band(cfg, points.back(), res.warnings);
    }
    std::sort(res.warnings.begin(), res.warnings.end());
    res.warnings.erase(std::unique(res.warnings.begin(), res.warnings.end()), res.warnings.end());
    detail::solve_grid(cfg, points, std::vector<double>(points.size(), 0.0), labels, res, opts);
    try {
        res.splitting = extract_splitting(res.axis, res.dips);
    } catch (const InsufficientDipsError&) {
        res.warnings.push_back("no column shows two resolved dips; no splitting reported");
    }
    res.finished_utc = detail::utc_now();
    return res;
}

/// Probe frequency x probe power (dB relative to power.reference_dBm). The
/// saturation knee is the lowest power whose |r| trace departs from the
/// lowest-power trace by at least half of that trace's deepest dip.
inline SweepResult run_power_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    if (!cfg.power) throw ConfigError("power-sweep: config has no 'power' block");
    if (cfg.solver.method == SolverConfig::Method::linear_response) {
        throw ConfigError("power-sweep: linear_response ignores the probe power; use master_equation");
    }
    ExperimentConfig local = cfg;
    local.power_dBm = cfg.power->reference_dBm;
    local.V0_V.reset();

    SweepResult res;
    res.kind = SweepResult::Kind::power;
    res.config_hash = config_hash(cfg);
    res.started_utc = detail::utc_now();
    res.probe_GHz = cfg.probe_GHz.values();
    res.axis = cfg.power->dB.values();
    res.axis_name = "power_dB";
    const OperatingPoint pt = detail::base_point(local);
    detail::check_probe_band(local, pt, res.warnings);
    std::vector<std::string> labels;
    for (double dB : res.axis) labels.push_back("power " + std::to_string(cfg.power->reference_dBm + dB) + " dBm");
    detail::solve_grid(local, std::vector<OperatingPoint>(res.axis.size(), pt), res.axis, labels, res, opts);

    res.column_splitting_GHz.resize(res.axis.size());
    std::vector<double> max_depth(res.axis.size(), 0.0);
    for (std::size_t col = 0; col < res.axis.size(); ++col) {
        for (const auto& d : res.dips[col]) max_depth[col] = std::max(max_depth[col], d.depth);
        if (res.dips[col].size() >= 2) {
            const auto two = deepest_dips(res.dips[col], 2);
            res.column_splitting_GHz[col] = std::abs(two[0].center_GHz - two[1].center_GHz);
        }
    }
    const std::size_t np = res.probe_GHz.size();
    for (std::size_t col = 1; col < res.axis.size() && max_depth[0] > 0.0; ++col) {
        double departure = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
            departure = std::max(departure, std::abs(std::abs(res.at(col, i)) - std::abs(res.at(0, i))));
        }
        if (departure >= 0.5 * max_depth[0]) {
            res.knee_dB = res.axis[col];
            break;
        }
    }
    if (!res.knee_dB) res.warnings.push_back("no saturation knee inside the power axis");
    res.finished_utc = detail::utc_now();
    return res;
}

// ---------------------------------------------------------------- calibration

struct NodeObservation {
    double frequency_GHz;
    int order; // L = order * lambda / 4
};

struct VelocityCalibration {
    double v_m_per_s{0.0};
    double max_relative_spread{0.0}; // max |v_i - mean| / mean
    std::vector<double> per_node_m_per_s;
};

/// Line velocity from field nodes at a known distance L from the mirror.
inline VelocityCalibration calibrate_velocity(const std::vector<NodeObservation>& nodes, double L_mm,
                                              double max_spread = 0.02)
{
    if (nodes.empty()) throw ConfigError("calibrate_velocity: no nodes given");
    if (!(L_mm > 0.0)) throw ConfigError("calibrate_velocity: L must be > 0");
    VelocityCalibration out;
    for (const auto& n : nodes) {
        if (n.order <= 0 || n.order % 2 == 0) {
            throw ConfigError("calibrate_velocity: order " + std::to_string(n.order) + " is not a positive odd integer");
        }
        if (!(n.frequency_GHz > 0.0)) throw ConfigError("calibrate_velocity: node frequency must be > 0");
        // v = f lambda = 4 f L / order
        out.per_node_m_per_s.push_back(4.0 * n.frequency_GHz * 1e9 * L_mm * 1e-3 / n.order);
    }
    double sum = 0.0;
    for (double v : out.per_node_m_per_s) sum += v;
    out.v_m_per_s = sum / static_cast<double>(nodes.size());
    for (double v : out.per_node_m_per_s) {
        out.max_relative_spread = std::max(out.max_relative_spread, std::abs(v - out.v_m_per_s) / out.v_m_per_s);
    }
    if (out.max_relative_spread > max_spread) {
        throw InconsistencyError("calibrate_velocity: node velocities spread by " +
                                 std::to_string(100.0 * out.max_relative_spread) + "%, above the " +
                                 std::to_string(100.0 * max_spread) + "% limit");
    }
    return out;
}

} // namespace wqed
