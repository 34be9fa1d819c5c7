#include "cqm/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cqm/config.hpp"
#include "cqm/estimator.hpp"
#include "cqm/exact.hpp"
#include "cqm/io.hpp"

#ifndef CQM_VERSION
#define CQM_VERSION "unknown"
#endif

namespace cqm {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<double> parse_grid(const std::string& text) {
    auto number = [](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("grid: bad number '" + s + "'");
        }
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("grid: bad number '" + s + "'");
        return v;
    };
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw std::invalid_argument("grid: expected start:stop:step");
        const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
        if (!(step > 0.0) || b < a) throw std::invalid_argument("grid: need step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-6));
        for (std::size_t i = 0; i <= n; ++i) grid.push_back(a + static_cast<double>(i) * step);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) grid.push_back(number(p));
    }
    if (grid.empty()) throw std::invalid_argument("grid: empty");
    return grid;
}

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n_traj;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Override ensemble.master_seed");
    app->add_option("--n-traj", c.n_traj, "Override ensemble.n_traj");
    app->add_option("--workers", c.workers, "Override ensemble.workers (0: all cores)");
    app->add_option("--out-dir", c.out_dir, "Override output.directory");
}

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config_path);
    if (c.seed) cfg.ensemble.master_seed = *c.seed;
    if (c.n_traj) cfg.ensemble.n_traj = *c.n_traj;
    if (c.workers) cfg.ensemble.workers = *c.workers;
    if (c.out_dir) cfg.output.directory = *c.out_dir;
    cfg.validate();
    return cfg;
}

bool wants(const RunConfig& cfg, const char* format) {
    for (const auto& f : cfg.output.formats) {
        if (f == format) return true;
    }
    return false;
}

class Outputs {
  public:
    explicit Outputs(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.output.directory) {
        fs::create_directories(dir_);
    }

    template <class Writer>
    void csv(const std::string& file, Writer&& w) {
        if (!wants(cfg_, "csv")) return;
        const fs::path p = dir_ / file;
        std::ofstream os(p, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + p.string());
        w(os);
        files_.push_back(p.string());
    }

    void manifest(const std::string& command, double wall, json extra) {
        if (!wants(cfg_, "json")) return;
        json m;
        m["command"] = command;
        m["config"] = echo(cfg_);
        m["config_hash"] = config_hash(cfg_);
        m["seed"] = cfg_.ensemble.master_seed;
        m["version"] = CQM_VERSION;
        m["wall_time_seconds"] = wall;
        m["outputs"] = files_;
        for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
        std::ofstream os(dir_ / (command + ".json"));
        os << m.dump(2) << '\n';
    }

  private:
    const RunConfig& cfg_;
    fs::path dir_;
    std::vector<std::string> files_;
};

json stats_json(const IntegrationStats& s) {
    return {{"accepted_steps", s.accepted}, {"rejected_steps", s.rejected}, {"rhs_evaluations", s.rhs_evaluations}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SteadyWindow require_window(const RunConfig& cfg, const char* command) {
    if (!cfg.steady_state) throw ConfigError("steady_state", std::string(command) + " needs a steady-state window");
    return *cfg.steady_state;
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string hash = config_hash(cfg);
    const EnsembleResult r = run_ensemble(cfg.ensemble_spec());
    Outputs o(cfg);
    o.csv("run.csv", [&](std::ostream& os) { write_series_csv(os, r.series, hash); });
    if (cfg.wants_occupation_distribution()) {
        o.csv("occupation_distribution.csv",
              [&](std::ostream& os) { write_distribution_csv(os, r.dot_samples, 0.05, hash); });
    }
    json steady = json::object();
    for (std::size_t k = 0; k < r.window_averages.size(); ++k) {
        const ScalarEstimate& s = r.window_averages[k];
        steady[std::string(name(r.series[k].observable))] = {{"mean", s.mean}, {"stderr", s.stderr_of_mean}};
        out << name(r.series[k].observable) << " steady " << format_double(s.mean) << " +- "
            << format_double(s.stderr_of_mean) << '\n';
    }
    if (r.beyond_recurrence_horizon) out << "warning: t_max exceeds half the recurrence horizon\n";
    o.manifest("run", seconds_since(t0),
               {{"stats", stats_json(r.stats)},
                {"steady_state", steady},
                {"beyond_recurrence_horizon", r.beyond_recurrence_horizon}});
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::string& grid, bool chain,
              const std::string& observable, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepSpec spec;
    spec.base = cfg.ensemble_spec();
    spec.axis = sweep_axis_from_name(axis);
    spec.grid = parse_grid(grid);
    spec.observable = observable.empty() ? spec.base.observables.front() : observable_from_name(observable);
    spec.window = require_window(cfg, "sweep");
    spec.chain_reference = chain;
    const SweepCurve curve = sweep(spec);
    Outputs o(cfg);
    const std::string hash = config_hash(cfg);
    o.csv("sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, curve, hash); });
    std::size_t failures = 0;
    for (const SweepPoint& p : curve.points) {
        if (p.value) {
            out << name(curve.axis) << '=' << format_double(p.x) << ' ' << format_double(p.value->mean)
                << " +- " << format_double(p.value->stderr_of_mean) << '\n';
        } else {
            ++failures;
            out << name(curve.axis) << '=' << format_double(p.x) << " failed: " << p.error << '\n';
        }
    }
    o.manifest("sweep", seconds_since(t0),
               {{"axis", axis}, {"grid", spec.grid}, {"chain_reference", chain}, {"failed_points", failures}});
    return failures == 0 ? 0 : 1;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    CalibrationSpec spec;
    spec.base = cfg.ensemble_spec();
    spec.window = require_window(cfg, "calibrate-delta");
    spec.initial_delta = cfg.calibration.initial_delta;
    spec.tolerance = cfg.calibration.tolerance;
    spec.max_iterations = cfg.calibration.max_iterations;
    spec.source = cfg.calibration.median_source;
    const CalibrationResult r = calibrate_delta(spec);
    const std::string hash = config_hash(cfg);
    Outputs o(cfg);
    o.csv("calibrate.csv", [&](std::ostream& os) { write_calibration_csv(os, r, hash); });
    json trace = json::array();
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const CalibrationStep& s = r.trace[i];
        out << "iteration " << i + 1 << ": delta " << format_double(s.delta) << " -> median "
            << format_double(s.median) << ", <n_sigma> " << format_double(s.occupation.mean) << " +- "
            << format_double(s.occupation.stderr_of_mean) << '\n';
        trace.push_back({{"delta", s.delta}, {"median", s.median}, {"occupation", s.occupation.mean},
                         {"stderr", s.occupation.stderr_of_mean}});
    }
    out << "delta " << format_double(r.delta) << (r.converged ? " (converged)" : " (not converged)") << '\n';
    o.manifest("calibrate-delta", seconds_since(t0),
               {{"trace", trace}, {"delta", r.delta}, {"converged", r.converged}});
    if (!r.converged) {
        err << json{{"error", {{"type", "not_converged"},
                               {"message", "delta did not converge within max_iterations"},
                               {"trace", trace}}}}
                   .dump()
            << '\n';
        return 3;
    }
    return 0;
}

std::vector<Observable> exact_observables(const RunConfig& cfg) {
    std::vector<Observable> out;
    for (Observable o : cfg.integrated_observables()) {
        switch (o) {
            case Observable::current_left_squared_up_term1:
            case Observable::current_left_squared_up_term2:
            case Observable::current_left_squared_up_term3:
                break;
            default:
                out.push_back(o);
        }
    }
    return out;
}

int cmd_exact(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const LeadDiscretization leads = build_leads(cfg.model);
    const ExactSeries ex = exact_series(cfg.model, leads, cfg.integrator.output_grid);
    const std::string hash = config_hash(cfg);
    const std::vector<Observable> obs = exact_observables(cfg);
    Outputs o(cfg);
    o.csv("exact.csv", [&](std::ostream& os) { write_exact_csv(os, ex, obs, hash); });
    o.manifest("exact-reference", seconds_since(t0), {{"hubbard_U_ignored", cfg.model.hubbard_u != 0.0}});
    return 0;
}

int cmd_variance(const RunConfig& cfg, const std::string& observable, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.reference.mode != GateMode::off && cfg.reference.hubbard_u != 0.0) {
        throw ConfigError("reference", "the reference must be noninteracting (hubbard_U 0 or mode off)");
    }
    PairedSpec spec;
    spec.target = cfg.ensemble_spec();
    spec.target.collect_dot_samples = false;
    const Observable obs =
        observable.empty() ? exact_observables(cfg).front() : observable_from_name(observable);
    spec.target.observables = {obs};
    spec.reference_model = cfg.model;
    spec.reference_model.hubbard_u = cfg.reference.hubbard_u;
    spec.reference_quant = cfg.quant;
    spec.reference_quant.mode = cfg.reference.mode;

    const PairedResult p = run_paired_ensemble(spec);
    const LeadDiscretization leads = build_leads(cfg.model);
    const ExactSeries ex = exact_series(spec.reference_model, leads, cfg.integrator.output_grid);
    const ControlVariateEstimate cv =
        control_variate(p.target.front(), p.reference.front(), p.difference.front(), exact_values(ex, obs),
                        "exact U=0");
    const std::string hash = config_hash(cfg);
    Outputs o(cfg);
    o.csv("variance.csv", [&](std::ostream& os) { write_variance_csv(os, cv, p.target.front(), hash); });
    json extra{{"observable", name(obs)}, {"stats", stats_json(p.stats)}};
    if (cfg.steady_state) {
        const ScalarEstimate a = steady_state_average(p.target.front(), *cfg.steady_state);
        double ratio_sum = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < cv.times.size(); ++i) {
            if (cfg.steady_state->contains(cv.times[i]) && cv.variance_ratio[i]) {
                ratio_sum += *cv.variance_ratio[i];
                ++n;
            }
        }
        const double ratio = n > 0 ? ratio_sum / n : std::nan("");
        out << "steady variance ratio " << format_double(ratio) << (ratio > 0.5 ? " (exceeds 1/2)" : "") << '\n';
        out << "steady plain mean " << format_double(a.mean) << " +- " << format_double(a.stderr_of_mean) << '\n';
        extra["steady_variance_ratio"] = n > 0 ? json(ratio) : json(nullptr);
    }
    o.manifest("variance-report", seconds_since(t0), extra);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quasiclassical trajectory simulator for the Anderson impurity model", "cqm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CQM_VERSION);

    Common run_opts, sweep_opts, cal_opts, exact_opts, var_opts;
    CLI::App* run = app.add_subcommand("run", "Ensemble time series");
    add_common(run, run_opts);

    CLI::App* sw = app.add_subcommand("sweep", "Steady-state values along a parameter axis");
    add_common(sw, sweep_opts);
    std::string axis, grid, sweep_obs;
    bool chain = false;
    sw->add_option("--axis", axis, "bias | gate | interaction")->required();
    sw->add_option("--grid", grid, "start:stop:step or comma list")->required();
    sw->add_option("--observable", sweep_obs, "Observable (default: first configured)");
    sw->add_flag("--chain", chain, "Previous point as paired reference (gate/interaction)");

    CLI::App* cal = app.add_subcommand("calibrate-delta", "Self-consistent quantization onset");
    add_common(cal, cal_opts);

    CLI::App* exact = app.add_subcommand("exact-reference", "Noninteracting exact curves");
    add_common(exact, exact_opts);

    CLI::App* var = app.add_subcommand("variance-report", "Paired control-variate diagnostics");
    add_common(var, var_opts);
    std::string var_obs;
    var->add_option("--observable", var_obs, "Observable (default: first configured)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*run) return cmd_run(load(run_opts), out);
        if (*sw) return cmd_sweep(load(sweep_opts), axis, grid, chain, sweep_obs, out);
        if (*cal) return cmd_calibrate(load(cal_opts), out, err);
        if (*exact) return cmd_exact(load(exact_opts));
        if (*var) return cmd_variance(load(var_opts), var_obs, out);
    } catch (const ConfigError& e) {
        err << json{{"error", {{"type", "config"}, {"key", e.key()}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    } catch (const TrajectoryError& e) {
        err << json{{"error", {{"type", "trajectory"}, {"trajectory", e.trajectory()}, {"message", e.what()}}}}
                   .dump()
            << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", {{"type", "runtime"}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace cqm
