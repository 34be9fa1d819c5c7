#include "cqm/sampling.hpp"

#include <cmath>
#include <numbers>

namespace cqm {

RandomStream SeedPlan::stream(std::uint64_t trajectory) const {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master_seed), hi(master_seed), lo(trajectory), hi(trajectory),
                      std::uint32_t{0x43514d31}};
    return RandomStream(seq);
}

double uniform01(RandomStream& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<std::uint8_t> sample_occupations(RandomStream& rng, const LeadDiscretization& leads,
                                             const ModelConfig& config) {
    std::vector<std::uint8_t> occ(leads.size());
    for (std::size_t k = 0; k < leads.size(); ++k) {
        const Lead l = leads.lead_of[k];
        const double f =
            fermi(leads.energies[k], config.chemical_potential(l), config.temperature(l));
        const double xi = uniform01(rng);
        occ[k] = xi <= f ? 1 : 0;
    }
    return occ;
}

PhaseState sample_phase(RandomStream& rng, std::span<const std::uint8_t> lead_occupations,
                        const ModelConfig& config) {
    PhaseState state(2 + lead_occupations.size());
    auto place = [&](Site site, double n) {
        const double theta = 2.0 * std::numbers::pi * uniform01(rng);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        state.x(site) = c;
        state.y(site) = s;
        state.px(site) = -n * s;
        state.py(site) = n * c;
    };
    for (Spin s : kSpins) place(dot_site(s), config.dot_init(s));
    for (std::size_t k = 0; k < lead_occupations.size(); ++k) {
        place(mode_site(k), lead_occupations[k]);
    }
    return state;
}

PhaseState sample_initial_state(const SeedPlan& plan, std::uint64_t trajectory,
                                const LeadDiscretization& leads, const ModelConfig& config) {
    RandomStream rng = plan.stream(trajectory);
    const auto occ = sample_occupations(rng, leads, config);
    return sample_phase(rng, occ, config);
}

}  // namespace cqm
