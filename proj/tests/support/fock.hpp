#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace cqm::testing {

/// Jordan-Wigner representation of `levels` spinless fermionic modes.
/// Basis state b has mode i occupied when bit i of b is set.
class FockSpace {
  public:
    explicit FockSpace(int levels);

    int levels() const { return levels_; }
    Eigen::Index dimension() const { return Eigen::Index{1} << levels_; }

    const Eigen::MatrixXcd& annihilate(int i) const { return a_[static_cast<std::size_t>(i)]; }
    Eigen::MatrixXcd create(int i) const { return annihilate(i).adjoint(); }
    Eigen::MatrixXcd identity() const { return Eigen::MatrixXcd::Identity(dimension(), dimension()); }

    /// Σ_ij h_ij a_i† a_j.
    Eigen::MatrixXcd one_body(const Eigen::MatrixXcd& h) const;
    /// Uncorrelated state with ⟨n_i⟩ = occupations[i].
    Eigen::MatrixXcd product_state(const std::vector<double>& occupations) const;

  private:
    int levels_;
    std::vector<Eigen::MatrixXcd> a_;
};

/// ρ(t) = e^{−iHt} ρ e^{iHt} by diagonalizing the many-body H.
Eigen::MatrixXcd evolve(const Eigen::MatrixXcd& hamiltonian, const Eigen::MatrixXcd& rho, double t);

std::complex<double> expectation(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& op);

/// ⟨a_n† a_m⟩ of a many-body density matrix.
Eigen::MatrixXcd correlations(const FockSpace& fs, const Eigen::MatrixXcd& rho);

}  // namespace cqm::testing
