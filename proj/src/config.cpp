#include "cqm/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cqm/hash.hpp"

namespace cqm {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
  public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_, "expected an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        try {
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                if (!it->is_number_integer()) throw ConfigError(key, "expected an integer");
                if constexpr (std::is_same_v<T, std::uint64_t>) {
                    if (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)
                        throw ConfigError(key, "expected a non-negative integer");
                }
            }
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(key, "has the wrong type");
        }
    }

    void read_optional_double(const char* key, double& out, double if_null) {
        seen_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        if (it->is_null()) {
            out = if_null;
            return;
        }
        if (!it->is_number()) throw ConfigError(key, "expected a number or null");
        out = it->get<double>();
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(path_.empty() ? it.key() : path_ + "." + it.key(), "unknown key");
            }
        }
    }

  private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

const char* mode_name(GateMode m) {
    switch (m) {
        case GateMode::step: return "step";
        case GateMode::continuous: return "continuous";
        case GateMode::off: return "off";
    }
    return "step";
}

GateMode mode_from(const std::string& s, const char* key) {
    if (s == "step") return GateMode::step;
    if (s == "continuous") return GateMode::continuous;
    if (s == "off") return GateMode::off;
    throw ConfigError(key, "expected step, continuous or off");
}

const char* median_name(MedianSource s) {
    return s == MedianSource::pooled_samples ? "pooled-samples" : "trajectory-averages";
}

const std::set<std::string> kObservableNames{
    "population", "population-up", "current-left", "current-left-up", "current-left-squared",
    "occupation-distribution"};

}  // namespace

void RunConfig::validate() const {
    model.validate();
    quant.validate();
    if (!(output_dt > 0.0)) throw ConfigError("output_dt", "must be > 0");
    integrator.validate();
    if (ensemble.n_traj < 2) throw ConfigError("n_traj", "at least two trajectories are required");
    if (ensemble.workers < 0) throw ConfigError("workers", "must be non-negative");
    if (observables.empty()) throw ConfigError("observables", "at least one observable is required");
    for (const std::string& o : observables) {
        if (!kObservableNames.count(o)) throw ConfigError("observables", "unknown observable '" + o + "'");
    }
    if (steady_state) {
        if (!(steady_state->t1 >= steady_state->t0) || steady_state->t0 < 0.0 ||
            steady_state->t1 > integrator.t_max * (1.0 + 1e-12)) {
            throw ConfigError("steady_state", "window must satisfy 0 <= t0 <= t1 <= t_max");
        }
    }
    if (wants_occupation_distribution() && !steady_state) {
        throw ConfigError("steady_state", "occupation-distribution needs a steady-state window");
    }
    if (!(calibration.initial_delta >= 0.0 && calibration.initial_delta <= 1.0))
        throw ConfigError("initial_delta", "must lie in [0, 1]");
    if (!(calibration.tolerance > 0.0)) throw ConfigError("tolerance", "must be > 0");
    if (calibration.max_iterations < 1) throw ConfigError("max_iterations", "must be >= 1");
    for (const std::string& f : output.formats) {
        if (f != "csv" && f != "json") throw ConfigError("formats", "expected csv or json");
    }
}

std::vector<Observable> RunConfig::integrated_observables() const {
    std::vector<Observable> out;
    auto add = [&](Observable o) {
        for (Observable e : out) {
            if (e == o) return;
        }
        out.push_back(o);
    };
    for (const std::string& o : observables) {
        if (o == "occupation-distribution") continue;
        if (o == "current-left-squared") {
            add(Observable::current_left_squared_up);
            add(Observable::current_left_squared_up_term1);
            add(Observable::current_left_squared_up_term2);
            add(Observable::current_left_squared_up_term3);
            continue;
        }
        add(observable_from_name(o));
    }
    if (out.empty()) out.push_back(Observable::population);
    return out;
}

bool RunConfig::wants_occupation_distribution() const {
    for (const std::string& o : observables) {
        if (o == "occupation-distribution") return true;
    }
    return false;
}

EnsembleSpec RunConfig::ensemble_spec() const {
    EnsembleSpec s;
    s.model = model;
    s.quant = quant;
    s.integrator = integrator;
    s.seeds.master_seed = ensemble.master_seed;
    s.n_traj = ensemble.n_traj;
    s.workers = ensemble.workers;
    s.observables = integrated_observables();
    s.window = steady_state;
    s.collect_dot_samples = wants_occupation_distribution();
    s.config_hash = config_hash(*this);
    return s;
}

bool RunConfig::operator==(const RunConfig& o) const {
    auto same_window = [](const std::optional<SteadyWindow>& a, const std::optional<SteadyWindow>& b) {
        if (a.has_value() != b.has_value()) return false;
        return !a || (a->t0 == b->t0 && a->t1 == b->t1);
    };
    return model == o.model && quant == o.quant && integrator == o.integrator &&
           output_dt == o.output_dt && ensemble == o.ensemble && observables == o.observables &&
           same_window(steady_state, o.steady_state) && calibration == o.calibration &&
           reference == o.reference && output == o.output;
}

RunConfig parse_config(const json& doc) {
    RunConfig c;
    Section root(doc, "");

    if (const json* m = root.child("model")) {
        Section s(*m, "model");
        s.read("gamma_L", c.model.gamma_left);
        s.read("gamma_R", c.model.gamma_right);
        s.read("eps_up", c.model.eps_up);
        s.read("eps_down", c.model.eps_down);
        s.read("hubbard_U", c.model.hubbard_u);
        s.read("temp_L", c.model.temp_left);
        s.read("temp_R", c.model.temp_right);
        s.read("mu_L", c.model.mu_left);
        s.read("mu_R", c.model.mu_right);
        s.read("band_A", c.model.band_a);
        s.read("band_B", c.model.band_b);
        s.read("n_modes_per_lead", c.model.n_modes_per_lead);
        s.read("eps_max", c.model.eps_max);
        s.read("dot_init_up", c.model.dot_init_up);
        s.read("dot_init_down", c.model.dot_init_down);
        s.finish();
    }
    if (const json* q = root.child("quantization")) {
        Section s(*q, "quantization");
        s.read("delta_up", c.quant.delta_up);
        s.read("delta_down", c.quant.delta_down);
        std::string mode = mode_name(c.quant.mode);
        s.read("mode", mode);
        c.quant.mode = mode_from(mode, "mode");
        s.finish();
    }
    if (const json* i = root.child("integrator")) {
        Section s(*i, "integrator");
        s.read("rel_tol", c.integrator.rel_tol);
        s.read("abs_tol", c.integrator.abs_tol);
        s.read("t_max", c.integrator.t_max);
        s.read("output_dt", c.output_dt);
        s.read_optional_double("max_step", c.integrator.max_step,
                               std::numeric_limits<double>::infinity());
        s.read("max_steps", c.integrator.max_steps);
        s.finish();
    }
    if (const json* e = root.child("ensemble")) {
        Section s(*e, "ensemble");
        s.read("n_traj", c.ensemble.n_traj);
        s.read("master_seed", c.ensemble.master_seed);
        s.read("workers", c.ensemble.workers);
        s.finish();
    }
    if (const json* o = root.child("observables")) {
        if (!o->is_array()) throw ConfigError("observables", "expected a list");
        c.observables.clear();
        for (const json& v : *o) {
            if (!v.is_string()) throw ConfigError("observables", "expected names");
            c.observables.push_back(v.get<std::string>());
        }
    }
    if (const json* w = root.child("steady_state")) {
        if (!w->is_null()) {
            Section s(*w, "steady_state");
            SteadyWindow win;
            s.read("t0", win.t0);
            s.read("t1", win.t1);
            s.finish();
            c.steady_state = win;
        }
    }
    if (const json* k = root.child("calibration")) {
        Section s(*k, "calibration");
        s.read("initial_delta", c.calibration.initial_delta);
        s.read("tolerance", c.calibration.tolerance);
        s.read("max_iterations", c.calibration.max_iterations);
        std::string src = median_name(c.calibration.median_source);
        s.read("median_source", src);
        if (src == "pooled-samples") c.calibration.median_source = MedianSource::pooled_samples;
        else if (src == "trajectory-averages") c.calibration.median_source = MedianSource::trajectory_averages;
        else throw ConfigError("median_source", "expected pooled-samples or trajectory-averages");
        s.finish();
    }
    if (const json* r = root.child("reference")) {
        Section s(*r, "reference");
        s.read("hubbard_U", c.reference.hubbard_u);
        std::string mode = mode_name(c.reference.mode);
        s.read("mode", mode);
        c.reference.mode = mode_from(mode, "reference.mode");
        s.finish();
    }
    if (const json* o = root.child("output")) {
        Section s(*o, "output");
        s.read("directory", c.output.directory);
        s.read("formats", c.output.formats);
        s.finish();
    }
    root.finish();

    if (!(c.output_dt > 0.0)) throw ConfigError("output_dt", "must be > 0");
    if (!(c.integrator.t_max > 0.0)) throw ConfigError("t_max", "must be > 0");
    c.integrator.output_grid = IntegratorConfig::uniform_grid(c.integrator.t_max, c.output_dt);
    c.validate();
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json echo(const RunConfig& c) {
    json doc;
    doc["model"] = {
        {"gamma_L", c.model.gamma_left},   {"gamma_R", c.model.gamma_right},
        {"eps_up", c.model.eps_up},        {"eps_down", c.model.eps_down},
        {"hubbard_U", c.model.hubbard_u},  {"temp_L", c.model.temp_left},
        {"temp_R", c.model.temp_right},    {"mu_L", c.model.mu_left},
        {"mu_R", c.model.mu_right},        {"band_A", c.model.band_a},
        {"band_B", c.model.band_b},        {"n_modes_per_lead", c.model.n_modes_per_lead},
        {"eps_max", c.model.eps_max},      {"dot_init_up", c.model.dot_init_up},
        {"dot_init_down", c.model.dot_init_down},
    };
    doc["quantization"] = {{"delta_up", c.quant.delta_up},
                           {"delta_down", c.quant.delta_down},
                           {"mode", mode_name(c.quant.mode)}};
    doc["integrator"] = {{"rel_tol", c.integrator.rel_tol},
                         {"abs_tol", c.integrator.abs_tol},
                         {"t_max", c.integrator.t_max},
                         {"output_dt", c.output_dt},
                         {"max_step", std::isfinite(c.integrator.max_step) ? json(c.integrator.max_step)
                                                                           : json(nullptr)},
                         {"max_steps", c.integrator.max_steps}};
    doc["ensemble"] = {{"n_traj", c.ensemble.n_traj},
                       {"master_seed", c.ensemble.master_seed},
                       {"workers", c.ensemble.workers}};
    doc["observables"] = c.observables;
    doc["steady_state"] = c.steady_state ? json{{"t0", c.steady_state->t0}, {"t1", c.steady_state->t1}}
                                         : json(nullptr);
    doc["calibration"] = {{"initial_delta", c.calibration.initial_delta},
                          {"tolerance", c.calibration.tolerance},
                          {"max_iterations", c.calibration.max_iterations},
                          {"median_source", median_name(c.calibration.median_source)}};
    doc["reference"] = {{"hubbard_U", c.reference.hubbard_u}, {"mode", mode_name(c.reference.mode)}};
    doc["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
    return doc;
}

std::string config_hash(const RunConfig& config) {
    json doc = echo(config);
    doc.erase("output");
    doc["ensemble"].erase("workers");
    return hash_hex(doc.dump());
}

}  // namespace cqm
