#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cqm {

enum class Lead : std::uint8_t { left = 0, right = 1 };
enum class Spin : std::uint8_t { up = 0, down = 1 };

constexpr Spin opposite(Spin s) { return s == Spin::up ? Spin::down : Spin::up; }
constexpr std::size_t index_of(Spin s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(Lead l) { return static_cast<std::size_t>(l); }

inline constexpr Spin kSpins[] = {Spin::up, Spin::down};
inline constexpr Lead kLeads[] = {Lead::left, Lead::right};

/// Raised when a configuration violates a physical or structural invariant.
/// `key()` names the offending configuration key.
class ConfigError : public std::invalid_argument {
  public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

/// Physical and discretization parameters of the Anderson impurity model.
/// Energies are in units of Γ = Γ_L + Γ_R, with ħ = k_B = e = 1.
struct ModelConfig {
    double gamma_left = 0.5;
    double gamma_right = 0.5;
    double eps_up = 0.0;
    double eps_down = 0.0;
    double hubbard_u = 0.0;
    double temp_left = 1.0;
    double temp_right = 1.0;
    double mu_left = 0.0;
    double mu_right = 0.0;
    double band_a = 5.0;   // cutoff sharpness A
    double band_b = 20.0;  // band width B
    int n_modes_per_lead = 200;
    double eps_max = 10.0;
    int dot_init_up = 0;
    int dot_init_down = 0;

    /// Throws ConfigError naming the first violated key.
    void validate() const;

    /// Modes per (lead, spin) channel: N_ℓ/2.
    std::size_t modes_per_channel() const { return static_cast<std::size_t>(n_modes_per_lead / 2); }
    /// Δε = 2 ε_max / (N_ℓ/2 − 1).
    double grid_spacing() const;

    double dot_level(Spin s) const { return s == Spin::up ? eps_up : eps_down; }
    int dot_init(Spin s) const { return s == Spin::up ? dot_init_up : dot_init_down; }
    double gamma(Lead l) const { return l == Lead::left ? gamma_left : gamma_right; }
    double temperature(Lead l) const { return l == Lead::left ? temp_left : temp_right; }
    double chemical_potential(Lead l) const { return l == Lead::left ? mu_left : mu_right; }

    bool operator==(const ModelConfig&) const = default;
};

/// Discretized lead modes for both leads and spins.
///
/// Mode ordering is spin-major, then lead, then energy:
///   [up: L_0 .. L_{K-1}, R_0 .. R_{K-1}][down: L_0 .. L_{K-1}, R_0 .. R_{K-1}]
/// with K = N_ℓ/2, so the modes of one spin form a contiguous block.
struct LeadDiscretization {
    std::vector<double> energies;
    std::vector<double> couplings;
    std::vector<Lead> lead_of;
    std::vector<Spin> spin_of;
    std::size_t modes_per_channel = 0;
    double spacing = 0.0;

    std::size_t size() const { return energies.size(); }
    std::size_t modes_per_spin() const { return 2 * modes_per_channel; }
    /// First mode index of the block belonging to `s`.
    std::size_t spin_offset(Spin s) const { return index_of(s) * modes_per_spin(); }
    std::size_t index(Spin s, Lead l, std::size_t k) const {
        return spin_offset(s) + index_of(l) * modes_per_channel + k;
    }
};

/// One-spin single-particle Hamiltonian. Basis: dot first, then that spin's
/// lead modes in LeadDiscretization order (left block, then right block).
struct SingleParticleHamiltonian {
    Eigen::MatrixXcd matrix;

    Eigen::Index dimension() const { return matrix.rows(); }
    bool is_hermitian(double tol = 1e-12) const;
};

/// J_ℓ(ε) = Γ_ℓ / [(1 + e^{A(ε − B/2)}) (1 + e^{−A(ε + B/2)})].
double spectral_density(double eps, Lead lead, const ModelConfig& config);

/// Uniform grid on [−ε_max, ε_max] per (lead, spin) channel with
/// t_k = sqrt(J_ℓ(ε_k) Δε / 2π).
LeadDiscretization build_leads(const ModelConfig& config);

SingleParticleHamiltonian single_particle_matrix(const ModelConfig& config,
                                                 const LeadDiscretization& leads, Spin spin,
                                                 double u_shift = 0.0);

/// Fermi-Dirac occupation 1/(1 + e^{(ε − μ)/T}), evaluated without overflow.
double fermi(double eps, double mu, double temperature);

}  // namespace cqm
