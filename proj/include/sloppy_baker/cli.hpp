#pragma once

// Experiment driver behind the command-line tool: a validated RunConfig, one
// function per subcommand, and the run manifest. Each subcommand writes its
// data files into config.out_dir; data files depend only on the config, the
// manifest additionally records wall time.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "classical.hpp"
#include "io.hpp"
#include "phasespace.hpp"
#include "quantum.hpp"
#include "spectral.hpp"

#define SLOPPY_BAKER_VERSION "0.1.0"

namespace sloppy_baker::cli {

using nlohmann::json;

enum class ExitCode : int { ok = 0, io_error = 1, config_error = 2, numerical_failure = 3 };

struct RunConfig {
    std::string subcommand;
    int n = 64;
    double delta = 0.25;
    int steps = 1;                       // T for husimi / return-prob / orbits
    std::vector<int> step_list{1, 2, 5, 30};
    int t_max = 30;
    int resolution = 64;                 // classical grid M
    int samples = 10;
    std::uint64_t seed = 7;
    double q0 = 0.25;
    double p0 = 0.25;
    std::string out_dir = ".";
    std::string format = "csv";
    bool fractional = false;
    bool plot_script = false;
    // return-prob window, half-open lattice index ranges (-1 = N)
    int stride = 1;
    int q_begin = 0, q_end = -1;
    int p_begin = 0, p_end = -1;
    // spectrum
    std::string channel = "sloppy";
    int max_dense_dim = 48;
    bool allow_large = false;
    int leading = 10;
    // invariant
    double tolerance = 1e-12;
    int max_iter = 100000;
    // husimi
    std::string state_path;              // JSON density matrix; empty = coherent state at (q0, p0)
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"classical-evolve", "quantum-evolve", "husimi",    "orbits",
                                                "return-prob",      "spectrum",       "invariant", "entropy"};
    return names;
}

inline json config_to_json(const RunConfig& c) {
    return {{"subcommand", c.subcommand}, {"N", c.n},
            {"delta", c.delta},           {"T", c.steps},
            {"steps", c.step_list},       {"tmax", c.t_max},
            {"M", c.resolution},          {"samples", c.samples},
            {"seed", c.seed},             {"q0", c.q0},
            {"p0", c.p0},                 {"out", c.out_dir},
            {"format", c.format},         {"fractional", c.fractional},
            {"stride", c.stride},         {"q_range", {c.q_begin, c.q_end}},
            {"p_range", {c.p_begin, c.p_end}},
            {"channel", c.channel},       {"max_dense_dim", c.max_dense_dim},
            {"allow_large", c.allow_large}, {"leading", c.leading},
            {"tol", c.tolerance},         {"max_iter", c.max_iter},
            {"state", c.state_path}};
}

namespace detail {

inline void check(bool ok, const std::string& constraint) {
    if (!ok) throw PreconditionError("invalid configuration: " + constraint);
}

inline bool uses_quantum_dim(const std::string& s) {
    return s == "quantum-evolve" || s == "husimi" || s == "return-prob" || s == "spectrum" || s == "invariant" ||
           s == "entropy";
}

} // namespace detail

/// Throws PreconditionError naming the first violated constraint.
inline void validate(const RunConfig& c) {
    using detail::check;
    const auto& names = subcommands();
    check(std::find(names.begin(), names.end(), c.subcommand) != names.end(), "unknown subcommand '" + c.subcommand + "'");
    check(c.format == "csv" || c.format == "json", "format must be csv or json");
    check(std::isfinite(c.delta) && c.delta >= 0.0 && c.delta <= 1.0, "0 <= delta <= 1");
    check(c.n >= 2 && c.n % 2 == 0, "N must be even and >= 2");
    if (detail::uses_quantum_dim(c.subcommand) && !(c.subcommand == "spectrum" && c.channel == "measurement")) {
        check(c.fractional || sloppy_baker::detail::is_integer_value(c.n * c.delta / 2.0),
              "N*delta/2 must be an integer (pass --fractional for non-integer shifts)");
    }
    check(std::isfinite(c.q0) && std::isfinite(c.p0) && c.q0 >= 0.0 && c.q0 < 1.0 && c.p0 >= 0.0 && c.p0 < 1.0,
          "q0 and p0 must lie in [0, 1)");

    if (c.subcommand == "classical-evolve") {
        check(c.resolution >= 2 && c.resolution % 2 == 0, "M must be even and >= 2");
        check(c.fractional || sloppy_baker::detail::is_integer_value(c.resolution * c.delta / 2.0),
              "M*delta/2 must be an integer (pass --fractional for area-weighted splitting)");
    }
    if (c.subcommand == "classical-evolve" || c.subcommand == "quantum-evolve") {
        check(!c.step_list.empty(), "steps list must not be empty");
        for (int t : c.step_list) check(t >= 0, "steps must be nonnegative");
    }
    if (c.subcommand == "husimi") check(c.steps >= 0, "T must be >= 0");
    if (c.subcommand == "return-prob") {
        check(c.steps >= 1, "T must be >= 1");
        check(c.stride >= 1, "stride must be >= 1");
        auto range_ok = [&](int b, int e) { return b >= 0 && b < c.n && (e == -1 || (e > b && e <= c.n)); };
        check(range_ok(c.q_begin, c.q_end), "q range must satisfy 0 <= begin < end <= N");
        check(range_ok(c.p_begin, c.p_end), "p range must satisfy 0 <= begin < end <= N");
    }
    if (c.subcommand == "orbits") check(c.steps >= 1 && c.steps <= 20, "1 <= T <= 20");
    if (c.subcommand == "spectrum") {
        check(c.channel == "sloppy" || c.channel == "shift" || c.channel == "measurement",
              "channel must be sloppy, shift or measurement");
        check(c.max_dense_dim >= 2, "max dense dimension must be >= 2");
        check(c.leading >= 1, "leading count must be >= 1");
    }
    if (c.subcommand == "invariant") check(c.tolerance > 0.0 && c.max_iter >= 1, "tol > 0 and max-iter >= 1");
    if (c.subcommand == "entropy") {
        check(c.samples >= 1, "samples must be >= 1");
        check(c.t_max >= 1, "tmax must be >= 1");
    }
}

struct RunResult {
    std::vector<std::string> files;  // data files, relative to out_dir
    json summary;                    // headline numbers, also stored in the manifest
};

namespace detail {

class Writer {
public:
    explicit Writer(const RunConfig& c) : dir_(c.out_dir) { std::filesystem::create_directories(dir_); }

    void text(const std::string& name, const std::string& content) {
        io::write_file((dir_ / name).string(), content);
        files_.push_back(name);
    }

    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    std::vector<std::string> files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

inline ShiftMode shift_mode(const RunConfig& c) { return c.fractional ? ShiftMode::fractional : ShiftMode::integer; }

inline void write_grid(Writer& w, const RunConfig& c, const std::string& stem, const HusimiGrid& g,
                       const io::GridMetadata& meta, const json& extra = json::object()) {
    if (c.format == "csv") {
        w.text(stem + ".csv", io::grid_to_csv(g));
        json m = io::grid_metadata_json(g, meta);
        m.update(extra);
        w.json_file(stem + ".json", m);
    } else {
        json j = io::grid_to_json(g, meta);
        j.update(extra);
        w.json_file(stem + ".json", j);
    }
}

inline json peaks_json(const std::vector<Peak>& peaks, std::size_t limit) {
    json out = json::array();
    for (std::size_t i = 0; i < std::min(limit, peaks.size()); ++i) {
        out.push_back({{"q_index", peaks[i].index.q}, {"p_index", peaks[i].index.p}, {"value", peaks[i].value}});
    }
    return out;
}

inline std::string plot_script(const std::vector<std::string>& grids) {
    std::string s =
        "# Renders the lattice grids written by this run as heatmaps.\n"
        "import json, sys\n"
        "import numpy as np\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n\n"
        "def load(stem):\n"
        "    meta = json.load(open(stem + '.json'))\n"
        "    if 'values' in meta:\n"
        "        return np.array(meta['values']), meta\n"
        "    return np.loadtxt(stem + '.csv', delimiter=',', ndmin=2), meta\n\n"
        "for stem in " +
        json(grids).dump() +
        ":\n"
        "    values, meta = load(stem)\n"
        "    n = meta.get('N', meta.get('M', values.shape[0]))\n"
        "    plt.figure(figsize=(4, 4))\n"
        "    plt.imshow(values.T, origin='lower', extent=(0, 1, 0, 1), cmap='viridis')\n"
        "    plt.xlabel('q'); plt.ylabel('p'); plt.title(stem)\n"
        "    plt.colorbar()\n"
        "    plt.savefig(stem + '.png', dpi=120, bbox_inches='tight')\n"
        "    plt.close()\n";
    return s;
}

// --- subcommands -----------------------------------------------------------

inline json classical_evolve(const RunConfig& c, Writer& w, std::vector<std::string>& grids) {
    const SloppyParams params(c.delta);
    const auto alignment = c.fractional ? GridAlignment::area_weighted : GridAlignment::strict;
    ClassicalDensity f = gaussian_density(c.resolution, {c.q0, c.p0}, c.n);
    std::vector<int> wanted = c.step_list;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    json snapshots = json::array();
    const double band = 1.0 - c.delta;
    int t = 0;
    for (int target : wanted) {
        for (; t < target; ++t) f = frobenius_perron_step(f, params, alignment);
        const std::string stem = "density_T" + std::to_string(target);
        if (c.format == "csv") {
            w.text(stem + ".csv", io::density_to_csv(f, c.delta));
        } else {
            w.json_file(stem + ".json", io::density_to_json(f, c.delta));
        }
        grids.push_back(stem);
        snapshots.push_back({{"T", target}, {"mass_above_support", f.mass_above(band)}});
    }
    return {{"snapshots", snapshots}};
}

inline json quantum_evolve(const RunConfig& c, Writer& w, std::vector<std::string>& grids) {
    const CoherentFrame frame(c.n);
    const LatticeIndex start = nearest_lattice_index({c.q0, c.p0}, c.n);
    const KrausChannel channel = sloppy_channel(c.n, c.delta, shift_mode(c));
    QuantumState state = pure_state(frame.state(start));
    std::vector<int> wanted = c.step_list;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
    const double band = 1.0 - c.delta + 2.0 / std::sqrt(static_cast<double>(c.n));
    json snapshots = json::array();
    int t = 0;
    for (int target : wanted) {
        for (; t < target; ++t) state = apply_channel(channel, state);
        const HusimiGrid g = husimi(state, frame);
        const LatticeIndex peak = g.argmax();
        const std::string stem = "husimi_T" + std::to_string(target);
        write_grid(w, c, stem, g, {"husimi", c.delta, target},
                   {{"initial_index", {start.q, start.p}}, {"argmax", {peak.q, peak.p}}});
        grids.push_back(stem);
        snapshots.push_back({{"T", target},
                             {"argmax", {peak.q, peak.p}},
                             {"mass_above_band", g.mass_fraction_above(band)},
                             {"entropy", von_neumann_entropy(state)}});
    }
    return {{"initial_index", {start.q, start.p}}, {"snapshots", snapshots}};
}

inline json husimi_cmd(const RunConfig& c, Writer& w, std::vector<std::string>& grids) {
    const CoherentFrame frame(c.n);
    QuantumState state = c.state_path.empty() ? pure_state(frame.state(nearest_lattice_index({c.q0, c.p0}, c.n)))
                                              : io::state_from_json(json::parse(io::read_file(c.state_path)));
    if (state.dim() != c.n) throw PreconditionError("invalid configuration: state dimension differs from N");
    if (c.steps > 0) state = evolve(sloppy_channel(c.n, c.delta, shift_mode(c)), state, c.steps);
    const HusimiGrid g = husimi(state, frame);
    const std::string stem = "husimi_T" + std::to_string(c.steps);
    write_grid(w, c, stem, g, {"husimi", c.delta, c.steps});
    grids.push_back(stem);
    const LatticeIndex peak = g.argmax();
    return {{"total", g.total()}, {"argmax", {peak.q, peak.p}}, {"min", g.values.minCoeff()}};
}

inline json orbits_cmd(const RunConfig& c, Writer& w) {
    const auto orbits = periodic_orbits(c.steps, SloppyParams(c.delta));
    if (c.format == "json") {
        w.json_file("orbits_T" + std::to_string(c.steps) + ".json", io::orbits_to_json(orbits, c.steps));
    } else {
        std::string csv = "T,n,period,k,q,p\n";
        for (const auto& o : orbits) {
            for (std::size_t k = 0; k < o.points.size(); ++k) {
                csv += std::to_string(c.steps) + "," + std::to_string(o.label) + "," + std::to_string(o.period) + "," +
                       std::to_string(k) + "," + io::format_double(o.points[k].q) + "," +
                       io::format_double(o.points[k].p) + "\n";
            }
        }
        w.text("orbits_T" + std::to_string(c.steps) + ".csv", csv);
    }
    return {{"cycles", orbits.size()}};
}

inline json return_prob_cmd(const RunConfig& c, Writer& w, std::vector<std::string>& grids) {
    const CoherentFrame frame(c.n);
    const LatticeWindow window{c.stride, c.q_begin, c.q_end, c.p_begin, c.p_end};
    const HusimiGrid g = return_probability(sloppy_channel(c.n, c.delta, shift_mode(c)), c.steps, frame, window);
    json extra = {{"median", g.median()}};
    if (g.is_full()) extra["peaks"] = peaks_json(lattice_peaks(g), 64);
    const std::string stem = "return_T" + std::to_string(c.steps);
    write_grid(w, c, stem, g, {"return_probability", c.delta, c.steps}, extra);
    grids.push_back(stem);
    json summary = {{"median", g.median()}, {"max", g.values.maxCoeff()}};
    if (extra.contains("peaks")) summary["peaks"] = extra["peaks"];
    return summary;
}

inline json spectrum_cmd(const RunConfig& c, Writer& w) {
    const ShiftMode mode = shift_mode(c);
    const KrausChannel channel = c.channel == "sloppy"  ? sloppy_channel(c.n, c.delta, mode)
                                 : c.channel == "shift" ? shift_channel(c.n, c.delta, mode)
                                                        : measurement_channel(c.n);
    SpectrumOptions options;
    options.superoperator.max_dim = c.max_dense_dim;
    options.superoperator.allow_large = c.allow_large;
    options.leading_count = c.leading;
    const SpectralReport report = channel_spectrum(channel, options);
    json j = io::spectral_report_to_json(report);
    j["channel"] = c.channel;
    j["delta"] = c.delta;
    if (c.format == "csv") w.text("spectrum.csv", io::spectrum_to_csv(report.eigenvalues));
    w.json_file("spectrum_report.json", j);
    json summary = {{"lambda1", {report.lambda1.real(), report.lambda1.imag()}},
                    {"lambda2_modulus", report.lambda2_modulus},
                    {"gap", report.gap},
                    {"zero_multiplicity", report.zero_multiplicity},
                    {"count", report.eigenvalues.size()}};
    if (report.zero_defect) summary["zero_defective"] = report.zero_defect->defective;
    return summary;
}

inline json invariant_cmd(const RunConfig& c, Writer& w, std::vector<std::string>& grids) {
    const InvariantStateResult result =
        invariant_state(sloppy_channel(c.n, c.delta, shift_mode(c)), c.tolerance, c.max_iter);
    const double entropy = von_neumann_entropy(result.state);
    const double reference = c.delta < 1.0 ? std::log(c.n * (1.0 - c.delta)) : 0.0;
    const CoherentFrame frame(c.n);
    const HusimiGrid g = husimi(result.state, frame);
    const double band = 1.0 - c.delta + 2.0 / std::sqrt(static_cast<double>(c.n));
    json summary = {{"iterations", result.iterations},
                    {"residual", result.residual},
                    {"entropy", entropy},
                    {"ln_N_1_minus_delta", reference},
                    {"husimi_mass_above_band", g.mass_fraction_above(band)}};
    w.json_file("invariant_state.json", io::state_to_json(result.state));
    write_grid(w, c, "invariant_husimi", g, {"husimi", c.delta, result.iterations}, summary);
    grids.push_back("invariant_husimi");
    return summary;
}

inline json entropy_cmd(const RunConfig& c, Writer& w) {
    const EntropyCurve curve = entropy_curve(c.n, c.delta, c.t_max, c.samples, c.seed, shift_mode(c));
    if (c.format == "csv") {
        w.text("entropy.csv", io::entropy_curve_to_csv(curve));
    } else {
        w.json_file("entropy.json", {{"kind", "entropy_curve"},
                                     {"N", curve.n},
                                     {"delta", curve.delta},
                                     {"samples", curve.samples},
                                     {"seed", curve.seed},
                                     {"slope", curve.slope},
                                     {"intercept", curve.intercept},
                                     {"window_end", curve.window_end},
                                     {"T", curve.times},
                                     {"mean", curve.mean},
                                     {"std", curve.stddev}});
    }
    return {{"final_mean", curve.final_mean()},
            {"slope", curve.slope},
            {"window_end", curve.window_end},
            {"ln_N_1_minus_delta", c.delta < 1.0 ? std::log(c.n * (1.0 - c.delta)) : 0.0}};
}

} // namespace detail

/// Validates the config, runs one subcommand and writes its data files plus
/// manifest.json into config.out_dir.
inline RunResult run(const RunConfig& c) {
    validate(c);
    const auto started = std::chrono::steady_clock::now();
    detail::Writer w(c);
    std::vector<std::string> grids;
    json summary;
    const std::string& s = c.subcommand;
    if (s == "classical-evolve") summary = detail::classical_evolve(c, w, grids);
    else if (s == "quantum-evolve") summary = detail::quantum_evolve(c, w, grids);
    else if (s == "husimi") summary = detail::husimi_cmd(c, w, grids);
    else if (s == "orbits") summary = detail::orbits_cmd(c, w);
    else if (s == "return-prob") summary = detail::return_prob_cmd(c, w, grids);
    else if (s == "spectrum") summary = detail::spectrum_cmd(c, w);
    else if (s == "invariant") summary = detail::invariant_cmd(c, w, grids);
    else summary = detail::entropy_cmd(c, w);

    if (c.plot_script && !grids.empty()) w.text("plot.py", detail::plot_script(grids));

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const json manifest = {{"tool", "sloppy_baker"},
                           {"version", SLOPPY_BAKER_VERSION},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                         "." + std::to_string(EIGEN_MINOR_VERSION)},
                           {"compiler", __VERSION__},
                           {"threads", thread_count()},
                           {"config", config_to_json(c)},
                           {"files", w.files()},
                           {"summary", summary},
                           {"wall_time_seconds", seconds}};
    io::write_file((std::filesystem::path(c.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return {w.files(), summary};
}

} // namespace sloppy_baker::cli
