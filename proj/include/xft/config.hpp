#pragma once

// Experiment configuration: JSON schema with hard validation. Unknown keys
// are rejected and every default is filled in explicitly, so the echoed
// configuration reproduces the run exactly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "xft/errors.hpp"
#include "xft/history.hpp"
#include "xft/reversal.hpp"
#include "xft/thermal.hpp"

namespace xft {

struct CheckRequest {
    std::string name;
    double tolerance = -1.0; // <0 means the check's default
};

struct ExperimentConfig {
    std::vector<double> spectrum_a;
    std::vector<double> spectrum_b;
    double beta_a = 1.0;
    double beta_b = 1.0;
    StateFamily family = StateFamily::product;
    double lambda = 0.0;
    InteractionMode mode = InteractionMode::strict;
    double t = 1.0;
    double strength = 0.0;
    double mean_tol = -1.0;
    bool swap_preset = false;
    std::vector<int> theta_permutation; // empty = identity
    std::vector<CheckRequest> checks;   // resolved to the full default list when absent
    double bin_tol = kBinTol;
    std::string output_directory; // resolved by the runner if empty
    bool write_json = true;
    bool write_csv = true;
    std::uint64_t seed = 0;
};

inline const std::vector<std::string>& known_check_names() {
    static const std::vector<std::string> names = {
        "per_history_ratio", "class_bounds",         "integral_equality", "averaged_inequality",
        "baseline_xft",      "clausius",             "mutual_information", "povm_pairing",
    };
    return names;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ParseError("unknown key \"" + key + "\" in " + where);
}

inline double require_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw ValidationError(what + " must be finite");
    return x;
}

// Spectrum value: a real list, or "qubit", "qutrit", "ladder(d,gap)".
inline std::vector<double> parse_spectrum(const nlohmann::json& value, const std::string& key) {
    if (value.is_array()) {
        std::vector<double> spectrum;
        for (const auto& entry : value) {
            if (!entry.is_number()) throw ValidationError(key + " entries must be numbers");
            spectrum.push_back(require_finite(entry.get<double>(), key + " entry"));
        }
        if (spectrum.empty()) throw ValidationError(key + " must not be empty");
        return spectrum;
    }
    if (value.is_string()) {
        const std::string name = value.get<std::string>();
        if (name == "qubit") return {0.0, 1.0};
        if (name == "qutrit") return {0.0, 1.0, 2.0};
        if (name.rfind("ladder(", 0) == 0 && name.back() == ')') {
            const std::string args = name.substr(7, name.size() - 8);
            const std::size_t comma = args.find(',');
            if (comma != std::string::npos) {
                try {
                    const int d = std::stoi(args.substr(0, comma));
                    const double gap = std::stod(args.substr(comma + 1));
                    if (d >= 1 && std::isfinite(gap)) {
                        std::vector<double> spectrum(static_cast<std::size_t>(d));
                        for (int k = 0; k < d; ++k) spectrum[static_cast<std::size_t>(k)] = k * gap;
                        return spectrum;
                    }
                } catch (const std::exception&) {
                    // falls through to the error below
                }
            }
            throw ValidationError(key + ": malformed ladder preset \"" + name + "\"");
        }
        throw ValidationError(key + ": unknown spectrum preset \"" + name + "\"");
    }
    throw ValidationError(key + " must be a real list or a preset name");
}

inline StateFamily parse_family(const std::string& name) {
    if (name == "product") return StateFamily::product;
    if (name == "classical_coupled") return StateFamily::classical_coupled;
    if (name == "thermofield_pure") return StateFamily::thermofield_pure;
    if (name == "interpolated") return StateFamily::interpolated;
    throw ValidationError("unknown state family \"" + name + "\"");
}

} // namespace detail

inline ExperimentConfig parse_config_json(const nlohmann::json& root) {
    if (!root.is_object()) throw ParseError("configuration root must be an object");
    detail::reject_unknown_keys(root, {"system", "thermal", "state", "dynamics", "checks", "output",
                                       "bin_tol", "seed"},
                                "configuration root");

    ExperimentConfig config;

    if (!root.contains("system")) throw ValidationError("missing required section \"system\"");
    const auto& system = root.at("system");
    detail::reject_unknown_keys(system, {"H_A", "H_B"}, "system");
    if (!system.contains("H_A") || !system.contains("H_B"))
        throw ValidationError("system requires H_A and H_B");
    config.spectrum_a = detail::parse_spectrum(system.at("H_A"), "system.H_A");
    config.spectrum_b = detail::parse_spectrum(system.at("H_B"), "system.H_B");

    if (!root.contains("thermal")) throw ValidationError("missing required section \"thermal\"");
    const auto& thermal = root.at("thermal");
    detail::reject_unknown_keys(thermal, {"beta_A", "beta_B"}, "thermal");
    if (!thermal.contains("beta_A") || !thermal.contains("beta_B"))
        throw ValidationError("thermal requires beta_A and beta_B");
    config.beta_a = detail::require_finite(thermal.at("beta_A").get<double>(), "beta_A");
    config.beta_b = detail::require_finite(thermal.at("beta_B").get<double>(), "beta_B");
    if (config.beta_a < 0.0 || config.beta_b < 0.0) throw ValidationError("betas must be >= 0");

    if (root.contains("state")) {
        const auto& state = root.at("state");
        detail::reject_unknown_keys(state, {"family", "lambda"}, "state");
        if (state.contains("family")) config.family = detail::parse_family(state.at("family").get<std::string>());
        if (state.contains("lambda")) {
            config.lambda = detail::require_finite(state.at("lambda").get<double>(), "lambda");
            if (config.lambda < 0.0 || config.lambda > 1.0) throw ValidationError("lambda must lie in [0,1]");
        }
    }

    if (root.contains("dynamics")) {
        const auto& dynamics = root.at("dynamics");
        detail::reject_unknown_keys(dynamics, {"mode", "t", "strength", "mean_tol", "preset", "theta"},
                                    "dynamics");
        if (dynamics.contains("mode")) {
            const std::string mode = dynamics.at("mode").get<std::string>();
            if (mode == "strict")
                config.mode = InteractionMode::strict;
            else if (mode == "mean_conserving")
                config.mode = InteractionMode::mean_conserving;
            else
                throw ValidationError("unknown dynamics mode \"" + mode + "\"");
        }
        if (dynamics.contains("t")) config.t = detail::require_finite(dynamics.at("t").get<double>(), "t");
        if (dynamics.contains("strength")) {
            config.strength = detail::require_finite(dynamics.at("strength").get<double>(), "strength");
            if (config.strength < 0.0) throw ValidationError("strength must be >= 0");
        }
        if (dynamics.contains("mean_tol")) {
            config.mean_tol = detail::require_finite(dynamics.at("mean_tol").get<double>(), "mean_tol");
            if (config.mean_tol < 0.0) throw ValidationError("mean_tol must be >= 0");
        }
        if (dynamics.contains("preset")) {
            const std::string preset = dynamics.at("preset").get<std::string>();
            if (preset == "swap")
                config.swap_preset = true;
            else if (preset != "none")
                throw ValidationError("unknown dynamics preset \"" + preset + "\"");
        }
        if (dynamics.contains("theta")) {
            for (const auto& entry : dynamics.at("theta")) config.theta_permutation.push_back(entry.get<int>());
        }
    }

    if (root.contains("checks")) {
        for (const auto& entry : root.at("checks")) {
            CheckRequest request;
            if (entry.is_string()) {
                request.name = entry.get<std::string>();
            } else if (entry.is_object()) {
                detail::reject_unknown_keys(entry, {"name", "tolerance"}, "checks entry");
                request.name = entry.at("name").get<std::string>();
                if (entry.contains("tolerance"))
                    request.tolerance = detail::require_finite(entry.at("tolerance").get<double>(), "tolerance");
            } else {
                throw ValidationError("checks entries must be names or {name, tolerance} objects");
            }
            const auto& names = known_check_names();
            if (std::find(names.begin(), names.end(), request.name) == names.end())
                throw ValidationError("unknown check \"" + request.name + "\"");
            config.checks.push_back(std::move(request));
        }
        if (config.checks.empty()) throw ValidationError("checks list must not be empty when present");
    } else {
        for (const std::string& name : known_check_names()) config.checks.push_back(CheckRequest{name, -1.0});
    }

    if (root.contains("output")) {
        const auto& output = root.at("output");
        detail::reject_unknown_keys(output, {"directory", "formats"}, "output");
        if (output.contains("directory")) config.output_directory = output.at("directory").get<std::string>();
        if (output.contains("formats")) {
            config.write_json = false;
            config.write_csv = false;
            for (const auto& fmt : output.at("formats")) {
                const std::string name = fmt.get<std::string>();
                if (name == "json")
                    config.write_json = true;
                else if (name == "csv")
                    config.write_csv = true;
                else
                    throw ValidationError("unknown output format \"" + name + "\"");
            }
        }
    }

    if (root.contains("bin_tol")) {
        config.bin_tol = detail::require_finite(root.at("bin_tol").get<double>(), "bin_tol");
        if (config.bin_tol < 0.0) throw ValidationError("bin_tol must be >= 0");
    }

    if (root.contains("seed")) {
        if (!root.at("seed").is_number_unsigned())
            throw ValidationError("seed must be an unsigned integer");
        config.seed = root.at("seed").get<std::uint64_t>();
    }

    return config;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read configuration file " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw ParseError("malformed configuration: " + std::string(err.what()));
    }
    try {
        return parse_config_json(root);
    } catch (const nlohmann::json::exception& err) {
        throw ValidationError("configuration type error: " + std::string(err.what()));
    }
}

// Fully resolved echo: defaults filled, enough to reproduce the run.
inline nlohmann::json config_echo(const ExperimentConfig& config) {
    nlohmann::json j;
    j["system"]["H_A"] = config.spectrum_a;
    j["system"]["H_B"] = config.spectrum_b;
    j["thermal"]["beta_A"] = config.beta_a;
    j["thermal"]["beta_B"] = config.beta_b;
    j["state"]["family"] = to_string(config.family);
    j["state"]["lambda"] = config.lambda;
    j["dynamics"]["mode"] = to_string(config.mode);
    j["dynamics"]["t"] = config.t;
    j["dynamics"]["strength"] = config.strength;
    j["dynamics"]["mean_tol"] = config.mean_tol;
    j["dynamics"]["preset"] = config.swap_preset ? "swap" : "none";
    j["dynamics"]["theta"] = config.theta_permutation;
    nlohmann::json checks = nlohmann::json::array();
    for (const CheckRequest& request : config.checks) {
        nlohmann::json entry;
        entry["name"] = request.name;
        entry["tolerance"] = request.tolerance;
        checks.push_back(entry);
    }
    j["checks"] = checks;
    j["bin_tol"] = config.bin_tol;
    j["output"]["directory"] = config.output_directory;
    nlohmann::json formats = nlohmann::json::array();
    if (config.write_json) formats.push_back("json");
    if (config.write_csv) formats.push_back("csv");
    j["output"]["formats"] = formats;
    j["seed"] = config.seed;
    return j;
}

} // namespace xft
