#pragma once

#include <complex>
#include <functional>
#include <random>

#include "cqm/mapping.hpp"
#include "cqm/model.hpp"
#include "cqm/phase_state.hpp"

namespace cqm::testing {

/// Generic phase point with every coordinate uniform in [−1, 1].
PhaseState random_phase_point(std::mt19937_64& rng, std::size_t n_sites);

using PhaseFunction = std::function<std::complex<double>(const PhaseState&)>;

/// Σ_sites ∂f/∂q ∂g/∂p − ∂f/∂p ∂g/∂q over (x, p_x) and (y, p_y).
/// Central differences with unit step, exact for functions of degree ≤ 2.
std::complex<double> poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                                     const PhaseState& at);

struct LiteralCurrentSquared {
    std::complex<double> term1, term2, term3;
};

/// Double sum over left-lead modes j, k of the three operator strings of
/// the second moment, each pair replaced by its image. O(N²).
LiteralCurrentSquared literal_current_squared(const PhaseState& state,
                                              const LeadDiscretization& leads, Spin spin);

/// Σ_ij h_ij image(a_i† a_j) over both spins: the classical U = 0 energy.
double classical_energy(const PhaseState& state, const ModelConfig& config, const LeadDiscretization& leads);

/// Sum over one spin's sites of the occupation, or of x² + y² with `circle`.
double spin_total(const PhaseState& state, const LeadDiscretization& leads, Spin spin, bool circle = false);

/// Leads with one mode per (lead, spin) channel, built by hand.
LeadDiscretization single_mode_leads(double eps_left, double t_left, double eps_right,
                                     double t_right);

}  // namespace cqm::testing
