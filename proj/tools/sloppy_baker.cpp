// Command-line front end: parses flags into a RunConfig and maps failures to
// exit codes (0 ok, 1 I/O, 2 configuration, 3 numerical failure).

#include <iostream>

#include <CLI11.hpp>

#include <sloppy_baker/cli.hpp>

namespace sb = sloppy_baker;

namespace {

void add_common(CLI::App* app, sb::cli::RunConfig& c) {
    app->add_option("--N", c.n, "Hilbert-space dimension (even)");
    app->add_option("--delta", c.delta, "sloppiness parameter in [0, 1]");
    app->add_option("--out", c.out_dir, "output directory");
    app->add_option("--format", c.format, "data format")->check(CLI::IsMember({"csv", "json"}));
    app->add_flag("--fractional", c.fractional, "allow non-integer momentum shifts / misaligned grids");
    app->add_flag("--plot-script", c.plot_script, "also write plot.py rendering grids as heatmaps");
}

void add_point(CLI::App* app, sb::cli::RunConfig& c) {
    app->add_option("--q0", c.q0, "initial position in [0, 1)");
    app->add_option("--p0", c.p0, "initial momentum in [0, 1)");
}

void add_range(CLI::App* app, const std::string& name, int& begin, int& end) {
    app->add_option_function<std::string>(
        name,
        [&begin, &end, name](const std::string& text) {
            const auto colon = text.find(':');
            if (colon == std::string::npos) throw CLI::ValidationError(name, "expected begin:end");
            begin = std::stoi(text.substr(0, colon));
            end = std::stoi(text.substr(colon + 1));
        },
        "half-open lattice index range begin:end");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Irreversible baker map simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SLOPPY_BAKER_VERSION);
    sb::cli::RunConfig c;

    auto* classical = app.add_subcommand("classical-evolve", "Frobenius-Perron evolution of a Gaussian density");
    add_common(classical, c);
    add_point(classical, c);
    classical->add_option("--M", c.resolution, "grid resolution (even)");
    classical->add_option("--steps", c.step_list, "snapshot times")->delimiter(',');

    auto* quantum = app.add_subcommand("quantum-evolve", "Husimi snapshots of an evolved coherent state");
    add_common(quantum, c);
    add_point(quantum, c);
    quantum->add_option("--steps", c.step_list, "snapshot times")->delimiter(',');

    auto* husimi = app.add_subcommand("husimi", "Husimi function of a state");
    add_common(husimi, c);
    add_point(husimi, c);
    husimi->add_option("--T", c.steps, "channel steps applied before sampling");
    husimi->add_option("--state", c.state_path, "density-matrix JSON (default: coherent state at q0, p0)");

    auto* orbits = app.add_subcommand("orbits", "classical periodic orbits of period dividing T");
    orbits->add_option("--delta", c.delta, "sloppiness parameter in [0, 1]");
    orbits->add_option("--T", c.steps, "period");
    orbits->add_option("--out", c.out_dir, "output directory");
    orbits->add_option("--format", c.format, "data format")->check(CLI::IsMember({"csv", "json"}));

    auto* ret = app.add_subcommand("return-prob", "return probability over the coherent-state lattice");
    add_common(ret, c);
    ret->add_option("--T", c.steps, "number of channel steps");
    ret->add_option("--stride", c.stride, "lattice stride");
    add_range(ret, "--q-range", c.q_begin, c.q_end);
    add_range(ret, "--p-range", c.p_begin, c.p_end);

    auto* spectrum = app.add_subcommand("spectrum", "superoperator spectrum");
    add_common(spectrum, c);
    spectrum->add_option("--channel", c.channel, "sloppy | shift | measurement")
        ->check(CLI::IsMember({"sloppy", "shift", "measurement"}));
    spectrum->add_option("--max-dense-N", c.max_dense_dim, "largest N solved densely");
    spectrum->add_flag("--allow-large", c.allow_large, "solve densely beyond --max-dense-N");
    spectrum->add_option("--leading", c.leading, "eigenvalue count on the iterative path");

    auto* invariant = app.add_subcommand("invariant", "invariant state by power iteration");
    add_common(invariant, c);
    invariant->add_option("--tol", c.tolerance, "max-entry change between iterates");
    invariant->add_option("--max-iter", c.max_iter, "iteration limit");

    auto* entropy = app.add_subcommand("entropy", "mean entropy growth of random pure states");
    add_common(entropy, c);
    entropy->add_option("--tmax", c.t_max, "last time step");
    entropy->add_option("--samples", c.samples, "number of random states");
    entropy->add_option("--seed", c.seed, "seed of sample 0 (sample s uses seed + s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(sb::cli::ExitCode::config_error);
    }
    c.subcommand = app.get_subcommands().front()->get_name();

    try {
        const auto result = sb::cli::run(c);
        std::cout << result.summary.dump() << "\n";
        return static_cast<int>(sb::cli::ExitCode::ok);
    } catch (const sb::PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(sb::cli::ExitCode::config_error);
    } catch (const sb::ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return static_cast<int>(sb::cli::ExitCode::numerical_failure);
    } catch (const sb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return static_cast<int>(sb::cli::ExitCode::numerical_failure);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(sb::cli::ExitCode::io_error);
    }
}
