#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cqm/model.hpp"

namespace cqm {

/// One-body correlation matrix C_nm = ⟨a_n† a_m⟩ for one spin, in the
/// SingleParticleHamiltonian basis (dot first, then that spin's modes).
struct CorrelationMatrix {
    Eigen::MatrixXcd c;

    Eigen::Index dimension() const { return c.rows(); }
};

/// Uncorrelated product state: dot occupation from config, lead modes
/// Fermi-Dirac at their lead's (μ, T), no coherences.
CorrelationMatrix initial_correlations(const ModelConfig& config, const LeadDiscretization& leads,
                                       Spin spin);

/// Exact U = 0 evolution C(t) = e^{iht} C0 e^{−iht} (for real h; in general
/// conj(V) C0 Vᵀ with V = e^{−iht}). The eigendecomposition of h is done once.
class CorrelationPropagator {
  public:
    /// Throws std::invalid_argument if h is not Hermitian.
    explicit CorrelationPropagator(const Eigen::MatrixXcd& h);

    /// Throws std::invalid_argument if C0 is not Hermitian.
    CorrelationMatrix propagate(const CorrelationMatrix& c0, double t) const;
    /// e^{−iht}.
    Eigen::MatrixXcd evolution(double t) const;

  private:
    Eigen::MatrixXcd vectors_;
    Eigen::VectorXd values_;
};

CorrelationMatrix propagate_correlations(const Eigen::MatrixXcd& h, const CorrelationMatrix& c0,
                                         double t);

/// ⟨I_Lσ⟩ = 2 Σ_{k∈L} t_k Im C_{dot,k} for the spin whose basis C uses.
double exact_current(const CorrelationMatrix& c, const LeadDiscretization& leads, Spin spin);

/// ⟨I_Lσ²⟩ by Wick contraction of the quartic strings for a Gaussian,
/// number-conserving state: ⟨a1† a2 a3† a4⟩ = C12 C34 + C14 (δ23 − C32).
double exact_current_squared(const CorrelationMatrix& c, const LeadDiscretization& leads,
                             Spin spin);

/// ⟨n_dot⟩ for the spin whose basis C uses.
double exact_population(const CorrelationMatrix& c);

/// Exact U = 0 reference curves on a time grid.
struct ExactSeries {
    std::vector<double> times;
    std::vector<double> population;             // ⟨n_↑ + n_↓⟩
    std::vector<double> population_up;
    std::vector<double> current_left;           // both spins
    std::vector<double> current_left_up;
    std::vector<double> current_left_squared_up;
};

/// Evaluates the noninteracting problem (U ignored, optional dot shift) on
/// every grid time.
ExactSeries exact_series(const ModelConfig& config, const LeadDiscretization& leads,
                         std::span<const double> times, double u_shift = 0.0);

}  // namespace cqm
