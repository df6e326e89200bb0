// xft: configuration-driven verification runs for exchange fluctuation
// identities on correlated bipartite states.
//
// Exit status: 0 all requested checks pass, 1 a check failed, 2 usage or
// configuration error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xft/config.hpp"
#include "xft/runner.hpp"
#include "xft/version.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string formats;
};

void apply_overrides(xft::ExperimentConfig& config, const CommonOptions& options) {
    if (!options.out_dir.empty()) config.output_directory = options.out_dir;
    if (options.seed) config.seed = *options.seed;
    if (!options.formats.empty()) {
        config.write_json = false;
        config.write_csv = false;
        std::string token;
        for (char c : options.formats + ",") {
            if (c == ',') {
                if (token == "json")
                    config.write_json = true;
                else if (token == "csv")
                    config.write_csv = true;
                else if (!token.empty())
                    throw xft::ValidationError("unknown format \"" + token + "\"");
                token.clear();
            } else {
                token += c;
            }
        }
    }
}

void print_check_lines(const xft::RunReport& report) {
    for (const xft::TheoremReport& check : report.checks) {
        const bool skipped = check.values.count("skipped") != 0;
        std::printf("%-22s %s  max_violation=%.3e  skipped_pairs=%ld\n", check.name.c_str(),
                    skipped ? "SKIP" : (check.pass ? "PASS" : "FAIL"), check.max_violation,
                    check.skipped_pairs);
    }
    std::printf("%-22s %s  dev_A=%.3e dev_B=%.3e\n", "thermal_marginals",
                report.marginals.pass ? "PASS" : "FAIL", report.marginals.deviation_a,
                report.marginals.deviation_b);
    std::printf("energy_conservation=%.3e  trs_deviation=%.3e  transition_symmetry=%.3e\n",
                report.energy_conservation, report.trs_deviation, report.transition_symmetry);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exchange fluctuation theorem laboratory"};
    app.set_version_flag("--version", std::string("xft ") + xft::kVersion);
    app.require_subcommand(1);

    CommonOptions options;
    std::string axis_name;
    std::vector<double> values;

    CLI::App* run_cmd = app.add_subcommand("run", "run the pipeline and write report + tables");
    run_cmd->add_option("config", options.config_path, "configuration file")->required();

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run once per axis value and summarize");
    sweep_cmd->add_option("config", options.config_path, "configuration file")->required();
    sweep_cmd->add_option("--axis", axis_name, "lambda, beta_A, beta_B, strength or t")->required();
    sweep_cmd->add_option("--values", values, "axis values")->required()->delimiter(',');

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the checks only, write no tables");
    verify_cmd->add_option("config", options.config_path, "configuration file")->required();

    for (CLI::App* cmd : {run_cmd, sweep_cmd, verify_cmd}) {
        cmd->add_option("--out", options.out_dir, "output directory (default: $XFT_OUT_DIR or ./xft-out)");
        cmd->add_option("--seed", options.seed, "override the configured seed");
        cmd->add_option("--format", options.formats, "comma-separated subset of json,csv");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        xft::ExperimentConfig config = xft::parse_config(options.config_path);
        apply_overrides(config, options);

        if (run_cmd->parsed()) {
            const xft::RunReport report = xft::run_experiment(config);
            const auto dir = xft::resolve_output_directory(config);
            xft::write_run_outputs(report, dir);
            print_check_lines(report);
            std::printf("report written to %s\n", dir.string().c_str());
            return report.all_pass ? 0 : 1;
        }
        if (sweep_cmd->parsed()) {
            const xft::SweepAxis axis = xft::parse_axis(axis_name);
            const xft::SweepResult result = xft::run_sweep(config, axis, values);
            const auto dir = xft::resolve_output_directory(config);
            xft::write_sweep_outputs(result, config, dir);
            std::printf("%zu runs written to %s (%zu max-work reports)\n", result.runs.size(),
                        dir.string().c_str(), result.max_work.size());
            return result.all_pass ? 0 : 1;
        }
        // verify
        const xft::RunReport report = xft::run_experiment(config);
        print_check_lines(report);
        return report.all_pass ? 0 : 1;
    } catch (const xft::XftError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "unexpected error: " << err.what() << "\n";
        return 2;
    }
}
