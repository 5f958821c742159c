// qbm — batch front end: kernels | elementary | coeffs | evolve | verify
//
// stdout carries machine-readable JSON (output paths or the verify report),
// stderr carries diagnostics.  Exit codes: 0 ok, 2 configuration/usage error,
// 3 numerical error, 4 verification failure.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbm/config.hpp"
#include "qbm/csv.hpp"
#include "qbm/oracle.hpp"
#include "qbm/threads.hpp"
#include "qbm/verify.hpp"

namespace {

using namespace qbm;

struct CliOptions {
    std::string config_path;
    std::string out_dir;  // overrides config output.directory when set
    unsigned threads{0};
};

std::filesystem::path ensure_out_dir(const RunConfig& cfg, const CliOptions& opt) {
    std::filesystem::path dir = opt.out_dir.empty() ? cfg.output_dir : opt.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory " + dir.string());
    return dir;
}

unsigned thread_count(const CliOptions& opt) {
    return opt.threads == 0 ? default_threads() : opt.threads;
}

void print_outputs(const std::vector<std::string>& paths) {
    nlohmann::json j;
    j["outputs"] = paths;
    std::cout << j.dump() << "\n";
}

int cmd_kernels(const RunConfig& cfg, const CliOptions& opt) {
    auto dir = ensure_out_dir(cfg, opt);
    auto table = tabulate_kernels(cfg.bath, cfg.ds, cfg.t_max, thread_count(opt));
    const auto path = (dir / "kernels.csv").string();
    write_file(path, [&](std::ostream& os) { write_kernels_csv(os, table); });
    print_outputs({path});
    return 0;
}

int cmd_elementary(const RunConfig& cfg, const CliOptions& opt) {
    auto dir = ensure_out_dir(cfg, opt);
    auto table = tabulate_kernels(cfg.bath, cfg.ds, cfg.t_max, thread_count(opt));
    auto sol = elementary(cfg.system, table, cfg.t_max, cfg.ds, cfg.tolerances.solver_residual);
    const auto path = (dir / "elementary.csv").string();
    write_file(path, [&](std::ostream& os) { write_elementary_csv(os, sol); });
    print_outputs({path});
    return 0;
}

int cmd_coeffs(const RunConfig& cfg, const CliOptions& opt) {
    auto dir = ensure_out_dir(cfg, opt);
    auto table = tabulate_kernels(cfg.bath, cfg.ds, std::max(cfg.ds, cfg.t_max), thread_count(opt));
    auto traj = trajectory(cfg.system, cfg.bath, table, cfg.mode, cfg.t_max, cfg.dt_out, cfg.ds,
                           cfg.tolerances.solver_residual);
    const auto csv_path = (dir / "coefficients.csv").string();
    const auto json_path = (dir / "coefficients.json").string();
    write_file(csv_path, [&](std::ostream& os) {
        write_coefficients_csv(os, traj, cfg.system.M, cfg.bath.hbar);
    });
    write_file(json_path, [&](std::ostream& os) {
        os << coefficients_json(traj, cfg.system.M, cfg.bath.hbar).dump(1) << "\n";
    });
    print_outputs({csv_path, json_path});
    return 0;
}

int cmd_evolve(const RunConfig& cfg, const CliOptions& opt) {
    auto dir = ensure_out_dir(cfg, opt);
    auto table = tabulate_kernels(cfg.bath, cfg.ds, std::max(cfg.ds, cfg.t_max), thread_count(opt));
    // full-resolution rows so every integrator stage sits on a row
    auto traj = trajectory(cfg.system, cfg.bath, table, cfg.mode, cfg.t_max, cfg.ds, cfg.ds,
                           cfg.tolerances.solver_residual);
    auto series = evolve(cfg.initial_state, traj, cfg.system, cfg.dt_out);
    const auto path = (dir / "moments.csv").string();
    write_file(path, [&](std::ostream& os) { write_moments_csv(os, series); });
    std::vector<std::string> outputs{path};
    if (cfg.wigner) {
        for (std::size_t i = 0; i < cfg.wigner->times.size(); ++i) {
            const double t = cfg.wigner->times[i];
            // snap to the nearest emitted sample
            std::size_t best = 0;
            for (std::size_t k = 0; k < series.t.size(); ++k)
                if (std::abs(series.t[k] - t) < std::abs(series.t[best] - t)) best = k;
            WignerGaussian w{series.states[best]};
            const auto wpath = (dir / ("wigner_" + std::to_string(i) + ".csv")).string();
            write_file(wpath, [&](std::ostream& os) {
                write_wigner_csv(os, w, cfg.wigner->half_width_sigmas, cfg.wigner->points);
            });
            outputs.push_back(wpath);
        }
    }
    print_outputs(outputs);
    return 0;
}

int cmd_verify(const RunConfig& cfg, const CliOptions& opt) {
    auto dir = ensure_out_dir(cfg, opt);
    auto report = run_verify(cfg);
    const auto path = (dir / "verify.json").string();
    write_file(path, [&](std::ostream& os) { os << report.to_json().dump(1) << "\n"; });
    if (!report.pipeline_moments.t.empty()) {
        // same schema on both sides, so the two files diff line for line
        write_file((dir / "pipeline_moments.csv").string(),
                   [&](std::ostream& os) { write_moments_csv(os, report.pipeline_moments); });
        write_file((dir / "oracle_moments.csv").string(),
                   [&](std::ostream& os) { write_moments_csv(os, report.oracle_moments); });
    }
    std::cout << report.to_json().dump() << "\n";
    for (const auto& c : report.checks)
        std::cerr << (c.pass ? "[pass] " : "[FAIL] ") << c.name << " measured=" << c.measured
                  << " tol=" << c.tolerance << " (" << c.note << ")\n";
    return report.pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-dependent coefficients of the quantum Brownian motion master equation"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "run configuration file (JSON)")->required();
    app.add_option("--out", opt.out_dir, "output directory (overrides the config)");
    app.add_option("--threads", opt.threads, "worker threads (0 = hardware)");

    auto* kernels = app.add_subcommand("kernels", "tabulate gamma and nu on the grid");
    auto* elem = app.add_subcommand("elementary", "solve the boundary-value elementary functions");
    auto* coeffs = app.add_subcommand("coeffs", "compute the coefficient trajectory");
    auto* evolve_cmd = app.add_subcommand("evolve", "evolve the initial Gaussian state");
    auto* verify = app.add_subcommand("verify", "check the pipeline against the exact oracle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = load_config(opt.config_path);
        if (kernels->parsed()) return cmd_kernels(cfg, opt);
        if (elem->parsed()) return cmd_elementary(cfg, opt);
        if (coeffs->parsed()) return cmd_coeffs(cfg, opt);
        if (evolve_cmd->parsed()) return cmd_evolve(cfg, opt);
        if (verify->parsed()) return cmd_verify(cfg, opt);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
