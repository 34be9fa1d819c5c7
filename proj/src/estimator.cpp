#include "cqm/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include <omp.h>

#include "cqm/hash.hpp"
#include "cqm/mapping.hpp"

namespace cqm {

namespace {

constexpr std::uint64_t kBlockSize = 32;
constexpr std::uint64_t kNoFailure = std::numeric_limits<std::uint64_t>::max();

void put(std::ostringstream& os, const char* key, double v) { os << key << '=' << v << ';'; }

void put_model(std::ostringstream& os, const ModelConfig& m) {
    put(os, "gamma_L", m.gamma_left);
    put(os, "gamma_R", m.gamma_right);
    put(os, "temp_L", m.temp_left);
    put(os, "temp_R", m.temp_right);
    put(os, "mu_L", m.mu_left);
    put(os, "mu_R", m.mu_right);
    put(os, "band_A", m.band_a);
    put(os, "band_B", m.band_b);
    put(os, "n_modes_per_lead", m.n_modes_per_lead);
    put(os, "eps_max", m.eps_max);
    put(os, "dot_init_up", m.dot_init_up);
    put(os, "dot_init_down", m.dot_init_down);
}

std::vector<std::size_t> window_indices(const std::vector<double>& grid,
                                        const std::optional<SteadyWindow>& window) {
    std::vector<std::size_t> idx;
    if (!window) return idx;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (window->contains(grid[i])) idx.push_back(i);
    }
    if (idx.empty()) throw std::invalid_argument("steady window contains no output time");
    return idx;
}

// Values of one trajectory on the output grid.
struct TrajectoryRecord {
    std::vector<double> values;  // [time][observable]
    std::vector<double> dots;    // [time][spin], only when requested
};

struct Context {
    const EnsembleSpec& spec;
    LeadDiscretization leads;
    std::vector<std::size_t> window_idx;
    std::size_t n_obs;
    std::size_t n_t;
};

PropagationReport simulate(const Context& ctx, const EquationsOfMotion& eom,
                           const PhaseState& initial, TrajectoryRecord& rec) {
    rec.values.assign(ctx.n_t * ctx.n_obs, 0.0);
    const bool dots = ctx.spec.collect_dot_samples;
    if (dots) rec.dots.assign(ctx.n_t * 2, 0.0);
    return integrate(initial, eom, ctx.spec.integrator, [&](std::size_t i, const PhaseState& s) {
        evaluate_observables(ctx.spec.observables, s, ctx.leads,
                             std::span<double>(rec.values).subspan(i * ctx.n_obs, ctx.n_obs));
        if (dots) {
            rec.dots[2 * i] = occupation(s, dot_site(Spin::up));
            rec.dots[2 * i + 1] = occupation(s, dot_site(Spin::down));
        }
    });
}

struct Accumulator {
    std::size_t n_obs = 0;
    std::size_t n_t = 0;
    std::vector<RunningMoments> series;  // [observable][time]
    std::vector<RunningMoments> window;
    std::vector<double> dot_samples;
    std::vector<double> dot_averages;

    Accumulator(std::size_t obs, std::size_t t, bool with_window)
        : n_obs(obs), n_t(t), series(obs * t), window(with_window ? obs : 0) {}

    void add(const TrajectoryRecord& rec, const std::vector<std::size_t>& window_idx) {
        for (std::size_t i = 0; i < n_t; ++i) {
            for (std::size_t o = 0; o < n_obs; ++o) series[o * n_t + i].add(rec.values[i * n_obs + o]);
        }
        if (window_idx.empty()) return;
        const double count = static_cast<double>(window_idx.size());
        for (std::size_t o = 0; o < window.size(); ++o) {
            double sum = 0.0;
            for (std::size_t i : window_idx) sum += rec.values[i * n_obs + o];
            window[o].add(sum / count);
        }
        if (!rec.dots.empty()) {
            double sum = 0.0;
            for (std::size_t i : window_idx) {
                dot_samples.push_back(rec.dots[2 * i]);
                dot_samples.push_back(rec.dots[2 * i + 1]);
                sum += rec.dots[2 * i] + rec.dots[2 * i + 1];
            }
            dot_averages.push_back(sum / (2.0 * count));
        }
    }

    void merge(const Accumulator& o) {
        for (std::size_t k = 0; k < series.size(); ++k) series[k].merge(o.series[k]);
        for (std::size_t k = 0; k < window.size(); ++k) window[k].merge(o.window[k]);
        dot_samples.insert(dot_samples.end(), o.dot_samples.begin(), o.dot_samples.end());
        dot_averages.insert(dot_averages.end(), o.dot_averages.begin(), o.dot_averages.end());
    }
};

struct Failure {
    std::uint64_t trajectory = kNoFailure;
    std::string what;
};

// Shared block bookkeeping: integration statistics and the first failure.
template <class Acc>
struct Block {
    Acc acc;
    IntegrationStats stats;
    bool beyond = false;
    Failure failure;

    void merge(const Block& o) {
        acc.merge(o.acc);
        stats += o.stats;
        beyond = beyond || o.beyond;
        if (o.failure.trajectory < failure.trajectory) failure = o.failure;
    }
};

// Runs `body(trajectory, block)` for every trajectory in fixed blocks and
// merges the blocks along a fixed pairwise tree.
template <class Acc, class Make, class Body>
Block<Acc> run_blocks(std::uint64_t first, std::uint64_t n_traj, int workers, Make make, Body body) {
    const std::uint64_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
    std::vector<Block<Acc>> blocks;
    blocks.reserve(n_blocks);
    for (std::uint64_t b = 0; b < n_blocks; ++b) blocks.push_back(Block<Acc>{make(), {}, false, {}});

    std::atomic<std::uint64_t> lowest_failure{kNoFailure};
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
        Block<Acc>& block = blocks[static_cast<std::size_t>(b)];
        const std::uint64_t begin = first + static_cast<std::uint64_t>(b) * kBlockSize;
        const std::uint64_t end = std::min(begin + kBlockSize, first + n_traj);
        for (std::uint64_t traj = begin; traj < end; ++traj) {
            if (traj > lowest_failure.load(std::memory_order_relaxed)) break;
            try {
                body(traj, block);
            } catch (const std::exception& e) {
                block.failure = {traj, e.what()};
                std::uint64_t seen = lowest_failure.load();
                while (traj < seen && !lowest_failure.compare_exchange_weak(seen, traj)) {
                }
                break;
            }
        }
    }

    for (std::uint64_t stride = 1; stride < n_blocks; stride *= 2) {
        for (std::uint64_t b = 0; b + stride < n_blocks; b += 2 * stride) {
            blocks[b].merge(blocks[b + stride]);
        }
    }
    if (blocks[0].failure.trajectory != kNoFailure) {
        throw TrajectoryError(blocks[0].failure.trajectory, blocks[0].failure.what);
    }
    return std::move(blocks[0]);
}

std::vector<TimeSeriesEstimate> to_series(const Accumulator& acc, const EnsembleSpec& spec,
                                          const Provenance& prov) {
    std::vector<TimeSeriesEstimate> out;
    for (std::size_t o = 0; o < acc.n_obs; ++o) {
        TimeSeriesEstimate est;
        est.observable = spec.observables[o];
        est.times = spec.integrator.output_grid;
        est.moments.assign(acc.series.begin() + static_cast<std::ptrdiff_t>(o * acc.n_t),
                           acc.series.begin() + static_cast<std::ptrdiff_t>((o + 1) * acc.n_t));
        est.provenance = prov;
        out.push_back(std::move(est));
    }
    return out;
}

std::vector<ScalarEstimate> to_scalars(const std::vector<RunningMoments>& window) {
    std::vector<ScalarEstimate> out;
    for (const RunningMoments& m : window) out.push_back({m.mean, m.stderr_of_mean(), m.count});
    return out;
}

Provenance provenance_of(const EnsembleSpec& spec) {
    return {spec.seeds.master_seed, spec.first_trajectory,
            spec.config_hash.empty() ? spec_hash(spec) : spec.config_hash,
            initial_condition_hash(spec), false};
}

EnsembleResult finish(const Block<Accumulator>& block, const EnsembleSpec& spec) {
    EnsembleResult r;
    r.series = to_series(block.acc, spec, provenance_of(spec));
    r.window_averages = to_scalars(block.acc.window);
    r.dot_samples = block.acc.dot_samples;
    r.dot_trajectory_averages = block.acc.dot_averages;
    r.stats = block.stats;
    r.beyond_recurrence_horizon = block.beyond;
    return r;
}

}  // namespace

std::vector<double> TimeSeriesEstimate::means() const {
    std::vector<double> out;
    for (const auto& m : moments) out.push_back(m.mean);
    return out;
}

std::vector<double> TimeSeriesEstimate::stderrs() const {
    std::vector<double> out;
    for (const auto& m : moments) out.push_back(m.stderr_of_mean());
    return out;
}

TimeSeriesEstimate merge(const TimeSeriesEstimate& a, const TimeSeriesEstimate& b) {
    if (a.observable != b.observable) throw std::invalid_argument("merge: observables differ");
    if (a.times != b.times) throw std::invalid_argument("merge: time grids differ");
    if (a.provenance.master_seed != b.provenance.master_seed ||
        a.provenance.config_hash != b.provenance.config_hash ||
        a.provenance.paired_difference != b.provenance.paired_difference) {
        throw std::invalid_argument("merge: provenance differs");
    }
    const std::uint64_t a0 = a.provenance.first_trajectory, a1 = a0 + a.n_traj();
    const std::uint64_t b0 = b.provenance.first_trajectory, b1 = b0 + b.n_traj();
    if (a0 < b1 && b0 < a1) throw std::invalid_argument("merge: trajectory ranges overlap");

    // Merge in trajectory order so the result does not depend on argument order.
    const TimeSeriesEstimate& lo = a0 <= b0 ? a : b;
    const TimeSeriesEstimate& hi = a0 <= b0 ? b : a;
    TimeSeriesEstimate out = lo;
    for (std::size_t i = 0; i < out.moments.size(); ++i) out.moments[i].merge(hi.moments[i]);
    return out;
}

void EnsembleSpec::validate() const {
    model.validate();
    quant.validate();
    integrator.validate();
    if (n_traj < 2) throw ConfigError("n_traj", "at least two trajectories are required");
    if (workers < 0) throw ConfigError("workers", "must be non-negative");
    if (observables.empty()) throw ConfigError("observables", "at least one observable is required");
    if (window && !(window->t1 >= window->t0)) throw ConfigError("window", "t1 must not precede t0");
}

std::string spec_hash(const EnsembleSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    put_model(os, spec.model);
    put(os, "eps_up", spec.model.eps_up);
    put(os, "eps_down", spec.model.eps_down);
    put(os, "hubbard_U", spec.model.hubbard_u);
    put(os, "delta_up", spec.quant.delta_up);
    put(os, "delta_down", spec.quant.delta_down);
    put(os, "mode", static_cast<int>(spec.quant.mode));
    put(os, "rel_tol", spec.integrator.rel_tol);
    put(os, "abs_tol", spec.integrator.abs_tol);
    put(os, "t_max", spec.integrator.t_max);
    put(os, "max_step", spec.integrator.max_step);
    put(os, "max_steps", static_cast<double>(spec.integrator.max_steps));
    for (double t : spec.integrator.output_grid) os << t << ',';
    os << "seed=" << spec.seeds.master_seed << ";first=" << spec.first_trajectory
       << ";n_traj=" << spec.n_traj << ';';
    for (Observable o : spec.observables) os << name(o) << ',';
    if (spec.window) os << "window=" << spec.window->t0 << ',' << spec.window->t1;
    return hash_hex(os.str());
}

std::string initial_condition_hash(const EnsembleSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    put_model(os, spec.model);
    os << "seed=" << spec.seeds.master_seed;
    return hash_hex(os.str());
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    spec.validate();
    Context ctx{spec, build_leads(spec.model),
                window_indices(spec.integrator.output_grid, spec.window), spec.observables.size(),
                spec.integrator.output_grid.size()};
    const EquationsOfMotion eom(spec.model, ctx.leads, spec.quant);
    auto block = run_blocks<Accumulator>(
        spec.first_trajectory, spec.n_traj, spec.workers,
        [&] { return Accumulator(ctx.n_obs, ctx.n_t, spec.window.has_value()); },
        [&](std::uint64_t traj, Block<Accumulator>& b) {
            TrajectoryRecord rec;
            const PhaseState s0 = sample_initial_state(spec.seeds, traj, ctx.leads, spec.model);
            const PropagationReport rep = simulate(ctx, eom, s0, rec);
            b.acc.add(rec, ctx.window_idx);
            b.stats += rep.stats;
            b.beyond = b.beyond || rep.beyond_recurrence_horizon;
        });
    return finish(block, spec);
}

EnsembleResult run_ensemble_serial(const EnsembleSpec& spec) {
    spec.validate();
    Context ctx{spec, build_leads(spec.model),
                window_indices(spec.integrator.output_grid, spec.window), spec.observables.size(),
                spec.integrator.output_grid.size()};
    const EquationsOfMotion eom(spec.model, ctx.leads, spec.quant);
    Block<Accumulator> block{Accumulator(ctx.n_obs, ctx.n_t, spec.window.has_value()), {}, false, {}};
    for (std::uint64_t traj = spec.first_trajectory; traj < spec.first_trajectory + spec.n_traj;
         ++traj) {
        TrajectoryRecord rec;
        PropagationReport rep;
        try {
            const PhaseState s0 = sample_initial_state(spec.seeds, traj, ctx.leads, spec.model);
            rep = simulate(ctx, eom, s0, rec);
        } catch (const std::exception& e) {
            throw TrajectoryError(traj, e.what());
        }
        block.acc.add(rec, ctx.window_idx);
        block.stats += rep.stats;
        block.beyond = block.beyond || rep.beyond_recurrence_horizon;
    }
    return finish(block, spec);
}

namespace {

struct PairedAccumulator {
    Accumulator target, reference, difference;

    void merge(const PairedAccumulator& o) {
        target.merge(o.target);
        reference.merge(o.reference);
        difference.merge(o.difference);
    }
};

}  // namespace

PairedResult run_paired_ensemble(const PairedSpec& spec) {
    const EnsembleSpec& t = spec.target;
    t.validate();
    EnsembleSpec ref = t;
    ref.model = spec.reference_model;
    ref.quant = spec.reference_quant;
    ref.config_hash.clear();
    ref.validate();
    if (initial_condition_hash(ref) != initial_condition_hash(t)) {
        throw std::invalid_argument(
            "paired ensemble: reference model samples different initial conditions");
    }

    EnsembleSpec no_dots = t;
    no_dots.collect_dot_samples = false;
    Context ctx{no_dots, build_leads(t.model), window_indices(t.integrator.output_grid, t.window),
                t.observables.size(), t.integrator.output_grid.size()};
    const EquationsOfMotion eom_target(t.model, ctx.leads, t.quant);
    const EquationsOfMotion eom_ref(ref.model, ctx.leads, ref.quant);
    const bool win = t.window.has_value();

    auto block = run_blocks<PairedAccumulator>(
        t.first_trajectory, t.n_traj, t.workers,
        [&] {
            return PairedAccumulator{Accumulator(ctx.n_obs, ctx.n_t, win),
                                     Accumulator(ctx.n_obs, ctx.n_t, false),
                                     Accumulator(ctx.n_obs, ctx.n_t, win)};
        },
        [&](std::uint64_t traj, Block<PairedAccumulator>& b) {
            const PhaseState s0 = sample_initial_state(t.seeds, traj, ctx.leads, t.model);
            TrajectoryRecord a, r;
            const PropagationReport ra = simulate(ctx, eom_target, s0, a);
            const PropagationReport rr = simulate(ctx, eom_ref, s0, r);
            TrajectoryRecord d;
            d.values.resize(a.values.size());
            for (std::size_t k = 0; k < a.values.size(); ++k) d.values[k] = a.values[k] - r.values[k];
            b.acc.target.add(a, ctx.window_idx);
            b.acc.reference.add(r, {});
            b.acc.difference.add(d, ctx.window_idx);
            b.stats += ra.stats;
            b.stats += rr.stats;
            b.beyond = b.beyond || ra.beyond_recurrence_horizon;
        });

    PairedResult out;
    Provenance prov = provenance_of(t);
    out.target = to_series(block.acc.target, t, prov);
    Provenance ref_prov = prov;
    ref_prov.config_hash = spec_hash(ref);
    out.reference = to_series(block.acc.reference, t, ref_prov);
    Provenance diff_prov = prov;
    diff_prov.paired_difference = true;
    out.difference = to_series(block.acc.difference, t, diff_prov);
    out.target_window = to_scalars(block.acc.target.window);
    out.difference_window = to_scalars(block.acc.difference.window);
    out.stats = block.stats;
    return out;
}

ControlVariateEstimate control_variate(const TimeSeriesEstimate& target,
                                       const TimeSeriesEstimate& reference,
                                       const TimeSeriesEstimate& difference,
                                       std::span<const double> exact_reference,
                                       std::string reference_source) {
    auto paired = [](const Provenance& a, const Provenance& b) {
        return a.master_seed == b.master_seed && a.first_trajectory == b.first_trajectory &&
               a.initial_condition_hash == b.initial_condition_hash;
    };
    if (!paired(target.provenance, reference.provenance) ||
        !paired(target.provenance, difference.provenance) || !difference.provenance.paired_difference ||
        target.n_traj() != reference.n_traj() || target.n_traj() != difference.n_traj()) {
        throw std::invalid_argument("control_variate: seed-plan mismatch");
    }
    if (target.observable != reference.observable || target.observable != difference.observable) {
        throw std::invalid_argument("control_variate: observables differ");
    }
    if (target.times != reference.times || target.times != difference.times ||
        exact_reference.size() != target.size()) {
        throw std::invalid_argument("control_variate: time grids differ");
    }
    ControlVariateEstimate cv;
    cv.observable = target.observable;
    cv.times = target.times;
    cv.n_traj = target.n_traj();
    cv.reference_source = std::move(reference_source);
    for (std::size_t i = 0; i < target.size(); ++i) {
        cv.mean.push_back(exact_reference[i] + difference.mean(i));
        cv.stderr_of_mean.push_back(difference.stderr_of_mean(i));
        const double var_a = target.variance(i);
        cv.variance_ratio.push_back(var_a > 0.0 ? std::optional<double>(difference.variance(i) / var_a)
                                                : std::nullopt);
    }
    return cv;
}

VarianceRatioSeries variance_ratio_series(const ControlVariateEstimate& cv) {
    VarianceRatioSeries out;
    out.times = cv.times;
    out.ratio = cv.variance_ratio;
    for (const auto& r : cv.variance_ratio) out.exceeds_half.push_back(r.has_value() && *r > 0.5);
    return out;
}

ScalarEstimate steady_state_average(const TimeSeriesEstimate& series, SteadyWindow window) {
    if (series.times.empty() || window.t1 < window.t0 || window.t0 < series.times.front() - 1e-12 ||
        window.t1 > series.times.back() + 1e-12) {
        throw std::invalid_argument("steady_state_average: window outside data");
    }
    std::vector<std::size_t> idx = window_indices(series.times, window);
    const double n = static_cast<double>(idx.size());
    double mean = 0.0, ensemble = 0.0;
    for (std::size_t i : idx) {
        mean += series.mean(i);
        ensemble += series.stderr_of_mean(i);
    }
    mean /= n;
    ensemble /= n;

    double block_err = 0.0;
    constexpr std::size_t kBlocks = 4;
    if (idx.size() >= 2 * kBlocks) {
        RunningMoments blocks;
        const std::size_t per = idx.size() / kBlocks;
        for (std::size_t b = 0; b < kBlocks; ++b) {
            double s = 0.0;
            for (std::size_t k = b * per; k < (b + 1) * per; ++k) s += series.mean(idx[k]);
            blocks.add(s / static_cast<double>(per));
        }
        block_err = blocks.stderr_of_mean();
    }
    return {mean, std::max(ensemble, block_err), series.n_traj()};
}

void CalibrationSpec::validate() const {
    const ModelConfig& m = base.model;
    const double scale = std::max(1.0, std::abs(m.hubbard_u));
    if (std::abs(m.eps_up - m.eps_down) > 1e-12 * scale || std::abs(m.eps_up + 0.5 * m.hubbard_u) > 1e-12 * scale) {
        throw ConfigError("eps_up", "calibration requires eps_up = eps_down = -hubbard_U/2");
    }
    if (m.mu_left != m.mu_right) throw ConfigError("mu_L", "calibration requires mu_L = mu_R");
    if (m.temp_left != m.temp_right) throw ConfigError("temp_L", "calibration requires temp_L = temp_R");
    if (!(initial_delta >= 0.0 && initial_delta <= 1.0)) throw ConfigError("delta", "must lie in [0, 1]");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance", "must be positive");
    if (max_iterations < 1) throw ConfigError("max_iterations", "must be at least 1");
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

CalibrationResult calibrate_delta(const CalibrationSpec& spec) {
    spec.validate();
    CalibrationResult out;
    double delta = spec.initial_delta;
    for (int it = 0; it < spec.max_iterations; ++it) {
        EnsembleSpec run = spec.base;
        run.quant.mode = GateMode::step;
        run.quant.delta_up = run.quant.delta_down = delta;
        run.window = spec.window;
        run.collect_dot_samples = true;
        run.config_hash.clear();
        const EnsembleResult r = run_ensemble(run);

        RunningMoments occ;
        for (double v : r.dot_trajectory_averages) occ.add(v);
        const double next = median(spec.source == MedianSource::pooled_samples
                                       ? r.dot_samples
                                       : r.dot_trajectory_averages);
        out.trace.push_back({delta, next, {occ.mean, occ.stderr_of_mean(), occ.count}});
        const bool done = std::abs(next - delta) < spec.tolerance;
        delta = next;
        if (done) {
            out.converged = true;
            break;
        }
    }
    out.delta = delta;
    return out;
}

std::string_view name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::bias: return "bias";
        case SweepAxis::gate: return "gate";
        case SweepAxis::interaction: return "interaction";
    }
    return "unknown";
}

SweepAxis sweep_axis_from_name(std::string_view n) {
    for (SweepAxis a : {SweepAxis::bias, SweepAxis::gate, SweepAxis::interaction}) {
        if (name(a) == n) return a;
    }
    throw std::invalid_argument("unknown sweep axis '" + std::string(n) + "'");
}

ModelConfig apply_axis(ModelConfig config, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::bias: {
            const double centre = 0.5 * (config.mu_left + config.mu_right);
            config.mu_left = centre + 0.5 * value;
            config.mu_right = centre - 0.5 * value;
            break;
        }
        case SweepAxis::gate:
            config.eps_up = config.eps_down = value;
            break;
        case SweepAxis::interaction:
            config.hubbard_u = value;
            break;
    }
    return config;
}

void SweepSpec::validate() const {
    if (grid.empty()) throw ConfigError("grid", "sweep grid is empty");
    for (double x : grid) {
        if (!std::isfinite(x)) throw ConfigError("grid", "sweep grid values must be finite");
    }
    if (chain_reference && axis == SweepAxis::bias) {
        throw ConfigError("chain_reference", "chaining changes the initial conditions on a bias axis");
    }
    if (!(window.t1 >= window.t0)) throw ConfigError("window", "t1 must not precede t0");
}

SweepCurve sweep(const SweepSpec& spec) {
    spec.validate();
    SweepCurve curve{spec.axis, spec.observable, {}};
    EnsembleSpec base = spec.base;
    base.observables = {spec.observable};
    base.window = spec.window;
    base.collect_dot_samples = false;
    base.config_hash.clear();

    std::optional<ModelConfig> previous_model;
    for (double x : spec.grid) {
        SweepPoint point{x, std::nullopt, {}};
        EnsembleSpec run = base;
        run.model = apply_axis(base.model, spec.axis, x);
        try {
            const bool chained = spec.chain_reference && previous_model && !curve.points.empty() &&
                                 curve.points.back().value.has_value();
            if (chained) {
                const PairedResult p = run_paired_ensemble({run, *previous_model, run.quant});
                const ScalarEstimate& prev = *curve.points.back().value;
                const ScalarEstimate& d = p.difference_window.front();
                point.value = ScalarEstimate{prev.mean + d.mean,
                                             std::hypot(prev.stderr_of_mean, d.stderr_of_mean), d.n_traj};
            } else {
                point.value = run_ensemble(run).window_averages.front();
            }
            previous_model = run.model;
        } catch (const std::exception& e) {
            point.error = e.what();
            previous_model.reset();
        }
        curve.points.push_back(std::move(point));
    }
    return curve;
}

}  // namespace cqm
