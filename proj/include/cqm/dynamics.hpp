#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cqm/dopri5.hpp"
#include "cqm/model.hpp"
#include "cqm/phase_state.hpp"

namespace cqm {

/// How the Hubbard term enters the dot equations of motion.
enum class GateMode {
    step,        // θ(n_σ̄ − Δ_σ̄), θ(0) = 1
    continuous,  // n_σ̄ (mapped U n_↑ n_↓, the quaternion-map baseline)
    off,         // U ignored
};

struct HubbardQuantization {
    double delta_up = 0.5;
    double delta_down = 0.5;
    GateMode mode = GateMode::step;

    double delta(Spin s) const { return s == Spin::up ? delta_up : delta_down; }
    /// Factor multiplying U in the equations of spin σ, given n_σ̄ and Δ_σ̄.
    double gate(double n_other, Spin other) const;
    void validate() const;
    bool operator==(const HubbardQuantization&) const = default;
};

struct IntegratorConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    double t_max = 10.0;
    std::vector<double> output_grid;
    double max_step = std::numeric_limits<double>::infinity();
    std::uint64_t max_steps = 50'000'000;

    /// Grid {0, dt, 2dt, ...} up to and including t_max (within dt/1e6).
    static std::vector<double> uniform_grid(double t_max, double dt);
    void validate() const;
    Dopri5Options dopri5_options() const;
    bool operator==(const IntegratorConfig&) const = default;
};

/// 2π/Δε: time after which the discretized leads feed reflections back.
double recurrence_horizon(const LeadDiscretization& leads);

/// Right-hand side of the mapped equations of motion on the flat
/// PhaseState layout. Per spin, both (x, y) and (p_x, p_y) follow
///   u̇ = −H v,  v̇ = H u
/// with H the single-particle Hamiltonian whose dot level is
/// ε_σ + U·gate(n_σ̄).
class EquationsOfMotion {
  public:
    EquationsOfMotion(const ModelConfig& config, const LeadDiscretization& leads,
                      const HubbardQuantization& quant);

    void operator()(double t, std::span<const double> y, std::span<double> dydt) const;

    std::size_t n_sites() const { return n_sites_; }
    double recurrence_horizon() const { return horizon_; }

  private:
    std::size_t n_sites_;
    std::size_t modes_per_spin_;
    double dot_level_[2];
    double hubbard_u_;
    HubbardQuantization quant_;
    std::vector<double> energies_;   // per site; dot entries unused
    std::vector<double> couplings_;  // per site; dot entries unused
    double horizon_;
};

/// Convenience wrapper returning the time derivative as a PhaseState.
PhaseState rhs(const PhaseState& state, const LeadDiscretization& leads,
               const ModelConfig& config, const HubbardQuantization& quant);

struct PropagationReport {
    IntegrationStats stats;
    /// Set when t_max exceeds half the recurrence horizon.
    bool beyond_recurrence_horizon = false;
};

/// Integrates one trajectory and calls `observe(i, state)` on every output
/// grid point with the interpolated PhaseState (its `time` field set).
template <class Observer>
PropagationReport integrate(const PhaseState& initial, const EquationsOfMotion& eom,
                            const IntegratorConfig& cfg, Observer&& observe) {
    PropagationReport report;
    report.beyond_recurrence_horizon = cfg.t_max > 0.5 * eom.recurrence_horizon();

    std::vector<double> y(initial.data().begin(), initial.data().end());
    PhaseState snapshot(initial.n_sites());
    report.stats = dopri5(
        eom, y, initial.time, cfg.output_grid, cfg.dopri5_options(),
        [&](std::size_t i, double t, std::span<const double> values) {
            std::copy(values.begin(), values.end(), snapshot.data().begin());
            snapshot.time = t;
            observe(i, static_cast<const PhaseState&>(snapshot));
        });
    return report;
}

}  // namespace cqm
