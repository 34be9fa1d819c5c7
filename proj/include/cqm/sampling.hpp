#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cqm/model.hpp"
#include "cqm/phase_state.hpp"

namespace cqm {

using RandomStream = std::mt19937_64;

/// Per-trajectory random substreams derived from one master seed.
///
/// Trajectory i draws from mt19937_64 seeded through std::seed_seq with
/// the words {lo(master), hi(master), lo(i), hi(i), 0x43514d31}. Both the
/// engine and seed_seq are fully specified by the standard, so a given
/// (master_seed, i) yields the same stream on every platform and for any
/// worker count.
struct SeedPlan {
    std::uint64_t master_seed = 0;

    RandomStream stream(std::uint64_t trajectory) const;
    bool operator==(const SeedPlan&) const = default;
};

/// Uniform double on [0, 1) with 53 random bits. Independent of the
/// (implementation-defined) std distributions, so draws are portable.
double uniform01(RandomStream& rng);

/// Lead occupations n_k ∈ {0, 1}: n_k = 1 iff ξ_k ≤ f_ℓ(ε_k). One ξ is drawn
/// per mode in LeadDiscretization order.
std::vector<std::uint8_t> sample_occupations(RandomStream& rng, const LeadDiscretization& leads,
                                             const ModelConfig& config);

/// Places each site on the circle: θ uniform on [0, 2π), x = cos θ,
/// y = sin θ, p_x = −n sin θ, p_y = n cos θ. Angles are drawn for dot-up,
/// dot-down, then the modes in order; dot occupations come from config.
PhaseState sample_phase(RandomStream& rng, std::span<const std::uint8_t> lead_occupations,
                        const ModelConfig& config);

/// Full initial condition of one trajectory (occupations, then angles).
PhaseState sample_initial_state(const SeedPlan& plan, std::uint64_t trajectory,
                                const LeadDiscretization& leads, const ModelConfig& config);

}  // namespace cqm
