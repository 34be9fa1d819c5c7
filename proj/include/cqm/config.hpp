#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cqm/dynamics.hpp"
#include "cqm/estimator.hpp"
#include "cqm/model.hpp"

namespace cqm {

struct EnsembleSettings {
    std::uint64_t n_traj = 1000;
    std::uint64_t master_seed = 1;
    int workers = 0;
    bool operator==(const EnsembleSettings&) const = default;
};

struct CalibrationSettings {
    double initial_delta = 0.34;
    double tolerance = 0.01;
    int max_iterations = 10;
    MedianSource median_source = MedianSource::pooled_samples;
    bool operator==(const CalibrationSettings&) const = default;
};

/// Reference dynamics for variance-report: the model with this U and gate mode.
struct ReferenceSettings {
    double hubbard_u = 0.0;
    GateMode mode = GateMode::off;
    bool operator==(const ReferenceSettings&) const = default;
};

struct OutputSettings {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
    bool operator==(const OutputSettings&) const = default;
};

struct RunConfig {
    ModelConfig model;
    HubbardQuantization quant;
    IntegratorConfig integrator;  // output_grid materialized from output_dt
    double output_dt = 0.1;
    EnsembleSettings ensemble;
    std::vector<std::string> observables{"population"};
    std::optional<SteadyWindow> steady_state;
    CalibrationSettings calibration;
    ReferenceSettings reference;
    OutputSettings output;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    /// Observables to integrate; current-left-squared brings its three terms.
    std::vector<Observable> integrated_observables() const;
    bool wants_occupation_distribution() const;
    EnsembleSpec ensemble_spec() const;

    bool operator==(const RunConfig& o) const;
};

/// Throws ConfigError on unknown keys, wrong types or invariant violations.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Every field with defaults materialized.
nlohmann::json echo(const RunConfig& config);

/// Hash of the echo without the output block and the worker count.
std::string config_hash(const RunConfig& config);

}  // namespace cqm
