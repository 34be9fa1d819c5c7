#include "cqm/model.hpp"

#include <cmath>
#include <numbers>

namespace cqm {

void ModelConfig::validate() const {
    if (n_modes_per_lead % 2 != 0) throw ConfigError("n_modes_per_lead", "must be even");
    if (n_modes_per_lead < 4) throw ConfigError("n_modes_per_lead", "must be >= 4");
    if (!(temp_left > 0.0)) throw ConfigError("temp_L", "must be > 0");
    if (!(temp_right > 0.0)) throw ConfigError("temp_R", "must be > 0");
    if (!(gamma_left >= 0.0)) throw ConfigError("gamma_L", "must be >= 0");
    if (!(gamma_right >= 0.0)) throw ConfigError("gamma_R", "must be >= 0");
    if (!(eps_max > 0.0)) throw ConfigError("eps_max", "must be > 0");
    if (!(band_a > 0.0)) throw ConfigError("band_A", "must be > 0");
    if (!(band_b > 0.0)) throw ConfigError("band_B", "must be > 0");
    if (dot_init_up != 0 && dot_init_up != 1) throw ConfigError("dot_init_up", "must be 0 or 1");
    if (dot_init_down != 0 && dot_init_down != 1)
        throw ConfigError("dot_init_down", "must be 0 or 1");
    for (double v : {eps_up, eps_down, hubbard_u, mu_left, mu_right}) {
        if (!std::isfinite(v)) throw ConfigError("model", "non-finite energy parameter");
    }
}

double ModelConfig::grid_spacing() const {
    return 2.0 * eps_max / (static_cast<double>(modes_per_channel()) - 1.0);
}

bool SingleParticleHamiltonian::is_hermitian(double tol) const {
    return matrix.rows() == matrix.cols() && (matrix - matrix.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

double spectral_density(double eps, Lead lead, const ModelConfig& config) {
    const double a = config.band_a;
    const double half_b = 0.5 * config.band_b;
    // exp overflow saturates to +inf, which drives the density to 0 as it should.
    const double upper = 1.0 + std::exp(a * (eps - half_b));
    const double lower = 1.0 + std::exp(-a * (eps + half_b));
    return config.gamma(lead) / (upper * lower);
}

LeadDiscretization build_leads(const ModelConfig& config) {
    if (config.n_modes_per_lead / 2 < 2) {
        throw ConfigError("n_modes_per_lead", "N_l/2 < 2 gives a degenerate energy grid");
    }
    config.validate();

    LeadDiscretization leads;
    leads.modes_per_channel = config.modes_per_channel();
    leads.spacing = config.grid_spacing();
    const std::size_t total = 4 * leads.modes_per_channel;
    leads.energies.reserve(total);
    leads.couplings.reserve(total);
    leads.lead_of.reserve(total);
    leads.spin_of.reserve(total);

    for (Spin s : kSpins) {
        for (Lead l : kLeads) {
            for (std::size_t k = 0; k < leads.modes_per_channel; ++k) {
                const double eps = -config.eps_max + static_cast<double>(k) * leads.spacing;
                const double j = spectral_density(eps, l, config);
                leads.energies.push_back(eps);
                leads.couplings.push_back(std::sqrt(j * leads.spacing / (2.0 * std::numbers::pi)));
                leads.lead_of.push_back(l);
                leads.spin_of.push_back(s);
            }
        }
    }
    return leads;
}

SingleParticleHamiltonian single_particle_matrix(const ModelConfig& config,
                                                 const LeadDiscretization& leads, Spin spin,
                                                 double u_shift) {
    const auto m = static_cast<Eigen::Index>(leads.modes_per_spin());
    SingleParticleHamiltonian h;
    h.matrix = Eigen::MatrixXcd::Zero(m + 1, m + 1);
    h.matrix(0, 0) = config.dot_level(spin) + u_shift;
    const std::size_t offset = leads.spin_offset(spin);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto mode = offset + static_cast<std::size_t>(k);
        h.matrix(k + 1, k + 1) = leads.energies[mode];
        h.matrix(0, k + 1) = leads.couplings[mode];
        h.matrix(k + 1, 0) = leads.couplings[mode];
    }
    return h;
}

double fermi(double eps, double mu, double temperature) {
    const double x = (eps - mu) / temperature;
    if (x > 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

}  // namespace cqm
