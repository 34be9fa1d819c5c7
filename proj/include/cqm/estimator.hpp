#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqm/dynamics.hpp"
#include "cqm/model.hpp"
#include "cqm/observables.hpp"
#include "cqm/sampling.hpp"
#include "cqm/statistics.hpp"

namespace cqm {

struct Provenance {
    std::uint64_t master_seed = 0;
    std::uint64_t first_trajectory = 0;
    std::string config_hash;
    /// Hash of everything that fixes the initial phase points.
    std::string initial_condition_hash;
    bool paired_difference = false;
    bool operator==(const Provenance&) const = default;
};

struct TimeSeriesEstimate {
    Observable observable = Observable::population;
    std::vector<double> times;
    std::vector<RunningMoments> moments;
    Provenance provenance;

    std::size_t size() const { return times.size(); }
    std::uint64_t n_traj() const { return moments.empty() ? 0 : moments.front().count; }
    double mean(std::size_t i) const { return moments[i].mean; }
    double variance(std::size_t i) const { return moments[i].variance(); }
    double stderr_of_mean(std::size_t i) const { return moments[i].stderr_of_mean(); }
    std::vector<double> means() const;
    std::vector<double> stderrs() const;
};

/// Combines estimates over disjoint trajectory ranges of one seed plan.
/// Throws std::invalid_argument on differing grids, observables, seeds or
/// overlapping ranges.
TimeSeriesEstimate merge(const TimeSeriesEstimate& a, const TimeSeriesEstimate& b);

struct ScalarEstimate {
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    std::uint64_t n_traj = 0;
};

struct SteadyWindow {
    double t0 = 0.0;
    double t1 = 0.0;
    bool contains(double t) const { return t >= t0 - 1e-12 && t <= t1 + 1e-12; }
};

struct EnsembleSpec {
    ModelConfig model;
    HubbardQuantization quant;
    IntegratorConfig integrator;
    SeedPlan seeds;
    std::uint64_t first_trajectory = 0;
    std::uint64_t n_traj = 2;
    int workers = 0;  // 0: OpenMP default
    std::vector<Observable> observables{Observable::population};
    /// Per-trajectory time averages over this window are accumulated too.
    std::optional<SteadyWindow> window;
    /// Keep every instantaneous dot occupation sampled in the window.
    bool collect_dot_samples = false;
    /// Label stored in provenance; computed from the spec when empty.
    std::string config_hash;

    void validate() const;
};

struct TrajectoryError : std::runtime_error {
    TrajectoryError(std::uint64_t trajectory, const std::string& what)
        : std::runtime_error("trajectory " + std::to_string(trajectory) + ": " + what),
          trajectory_(trajectory) {}
    std::uint64_t trajectory() const { return trajectory_; }

  private:
    std::uint64_t trajectory_;
};

struct EnsembleResult {
    std::vector<TimeSeriesEstimate> series;  // one per requested observable
    /// Ensemble statistics of per-trajectory window averages (empty without a window).
    std::vector<ScalarEstimate> window_averages;
    /// Instantaneous n_↑, n_↓ over the window, trajectory-major.
    std::vector<double> dot_samples;
    /// Per-trajectory window average of n_σ, both spins pooled.
    std::vector<double> dot_trajectory_averages;
    IntegrationStats stats;
    bool beyond_recurrence_horizon = false;
};

std::string spec_hash(const EnsembleSpec& spec);
std::string initial_condition_hash(const EnsembleSpec& spec);

/// OpenMP ensemble. Trajectories are processed in fixed blocks merged by a
/// fixed pairwise tree, so the result is bit-identical for any worker count.
/// Throws TrajectoryError (lowest failing index) if any trajectory fails.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

/// Single-threaded reference accumulating trajectories one by one.
EnsembleResult run_ensemble_serial(const EnsembleSpec& spec);

/// Target and reference dynamics driven from identical initial phase points.
struct PairedSpec {
    EnsembleSpec target;
    ModelConfig reference_model;
    HubbardQuantization reference_quant;
};

struct PairedResult {
    std::vector<TimeSeriesEstimate> target;
    std::vector<TimeSeriesEstimate> reference;
    std::vector<TimeSeriesEstimate> difference;  // target − reference per trajectory
    std::vector<ScalarEstimate> target_window;
    std::vector<ScalarEstimate> difference_window;
    IntegrationStats stats;
};

/// Throws std::invalid_argument when the reference model would sample
/// different initial conditions.
PairedResult run_paired_ensemble(const PairedSpec& spec);

struct ControlVariateEstimate {
    Observable observable = Observable::population;
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_of_mean;
    /// Var(ΔA)/Var(A); empty where Var(A) = 0.
    std::vector<std::optional<double>> variance_ratio;
    std::uint64_t n_traj = 0;
    std::string reference_source;
};

/// ⟨A⟩ = Ā_r + ⟨ΔA⟩. Throws std::invalid_argument unless all three series
/// come from the same seed plan, range and initial conditions.
ControlVariateEstimate control_variate(const TimeSeriesEstimate& target,
                                       const TimeSeriesEstimate& reference,
                                       const TimeSeriesEstimate& difference,
                                       std::span<const double> exact_reference,
                                       std::string reference_source = "exact");

struct VarianceRatioSeries {
    std::vector<double> times;
    std::vector<std::optional<double>> ratio;
    std::vector<bool> exceeds_half;
};

VarianceRatioSeries variance_ratio_series(const ControlVariateEstimate& cv);

/// Mean of the series over the window. The error is the larger of the mean
/// ensemble stderr and a block-averaging estimate over time.
/// Throws std::invalid_argument if the window lies outside the data.
ScalarEstimate steady_state_average(const TimeSeriesEstimate& series, SteadyWindow window);

enum class MedianSource {
    pooled_samples,        // instantaneous n_σ at every window grid point
    trajectory_averages,   // one window average per trajectory
};

struct CalibrationSpec {
    EnsembleSpec base;
    double initial_delta = 0.34;
    SteadyWindow window;
    double tolerance = 0.01;
    int max_iterations = 10;
    MedianSource source = MedianSource::pooled_samples;

    void validate() const;
};

struct CalibrationStep {
    double delta = 0.0;   // Δ used for this ensemble
    double median = 0.0;  // next Δ
    ScalarEstimate occupation;  // steady ⟨n_σ⟩, spins pooled
};

struct CalibrationResult {
    std::vector<CalibrationStep> trace;
    double delta = 0.0;
    bool converged = false;
};

double median(std::vector<double> values);

CalibrationResult calibrate_delta(const CalibrationSpec& spec);

enum class SweepAxis { bias, gate, interaction };

std::string_view name(SweepAxis axis);
SweepAxis sweep_axis_from_name(std::string_view name);

/// Applies one grid value: bias sets μ_L,R = μ̄ ± V/2 around the mean μ̄ of
/// the given config, gate sets both levels, interaction sets U.
ModelConfig apply_axis(ModelConfig config, SweepAxis axis, double value);

struct SweepSpec {
    EnsembleSpec base;
    SweepAxis axis = SweepAxis::bias;
    std::vector<double> grid;
    Observable observable = Observable::current_left;
    SteadyWindow window;
    /// Estimate each point as previous + paired difference (gate/interaction only).
    bool chain_reference = false;

    void validate() const;
};

struct SweepPoint {
    double x = 0.0;
    std::optional<ScalarEstimate> value;
    std::string error;
};

struct SweepCurve {
    SweepAxis axis = SweepAxis::bias;
    Observable observable = Observable::current_left;
    std::vector<SweepPoint> points;
};

SweepCurve sweep(const SweepSpec& spec);

}  // namespace cqm
