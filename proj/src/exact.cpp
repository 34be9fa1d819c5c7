#include "cqm/exact.hpp"

#include <complex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace cqm {

namespace {

bool hermitian(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Left-lead couplings of `spin` laid out in the one-spin basis.
Eigen::VectorXd left_couplings(const LeadDiscretization& leads, Spin spin) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(leads.modes_per_spin()) + 1);
    for (std::size_t k = 0; k < leads.modes_per_channel; ++k) {
        t(static_cast<Eigen::Index>(k) + 1) = leads.couplings[leads.index(spin, Lead::left, k)];
    }
    return t;
}

}  // namespace

CorrelationMatrix initial_correlations(const ModelConfig& config, const LeadDiscretization& leads,
                                       Spin spin) {
    const auto m = static_cast<Eigen::Index>(leads.modes_per_spin());
    CorrelationMatrix c{Eigen::MatrixXcd::Zero(m + 1, m + 1)};
    c.c(0, 0) = static_cast<double>(config.dot_init(spin));
    const std::size_t offset = leads.spin_offset(spin);
    for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t mode = offset + static_cast<std::size_t>(k);
        const Lead l = leads.lead_of[mode];
        c.c(k + 1, k + 1) =
            fermi(leads.energies[mode], config.chemical_potential(l), config.temperature(l));
    }
    return c;
}

CorrelationPropagator::CorrelationPropagator(const Eigen::MatrixXcd& h) {
    if (!hermitian(h)) throw std::invalid_argument("CorrelationPropagator: h is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    vectors_ = solver.eigenvectors();
    values_ = solver.eigenvalues();
}

Eigen::MatrixXcd CorrelationPropagator::evolution(double t) const {
    const Eigen::VectorXcd phases =
        (values_.cast<std::complex<double>>() * std::complex<double>(0.0, -t)).array().exp();
    return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

CorrelationMatrix CorrelationPropagator::propagate(const CorrelationMatrix& c0, double t) const {
    if (!hermitian(c0.c)) throw std::invalid_argument("propagate: C0 is not Hermitian");
    if (c0.c.rows() != vectors_.rows()) throw std::invalid_argument("propagate: dimension mismatch");
    // a_m(t) = Σ_b V_mb a_b  =>  C(t) = conj(V) C0 Vᵀ
    const Eigen::MatrixXcd v = evolution(t);
    return {v.conjugate() * c0.c * v.transpose()};
}

CorrelationMatrix propagate_correlations(const Eigen::MatrixXcd& h, const CorrelationMatrix& c0,
                                         double t) {
    return CorrelationPropagator(h).propagate(c0, t);
}

double exact_current(const CorrelationMatrix& c, const LeadDiscretization& leads, Spin spin) {
    const Eigen::VectorXd t = left_couplings(leads, spin);
    return 2.0 * (c.c.row(0) * t.cast<std::complex<double>>()).value().imag();
}

double exact_current_squared(const CorrelationMatrix& c, const LeadDiscretization& leads,
                             Spin spin) {
    const Eigen::VectorXcd t = left_couplings(leads, spin).cast<std::complex<double>>();
    const Eigen::MatrixXcd& m = c.c;
    const std::complex<double> c_dd = m(0, 0);
    const std::complex<double> row_t = (m.row(0) * t).value();        // Σ_k t_k C_dk
    const std::complex<double> col_t = (t.transpose() * m.col(0)).value();  // Σ_j t_j C_jd
    const std::complex<double> lead_form = (t.transpose() * m * t).value();  // Σ t_j t_k C_jk
    const double t2 = t.squaredNorm();
    // Σ t_j t_k ⟨d† c_j c_k† d⟩ + ⟨c_j† d d† c_k⟩; the d†c_j d†c_k and
    // c_j†d c_k†d strings contract to zero.
    const std::complex<double> s2 = row_t * col_t + c_dd * (t2 - lead_form);
    const std::complex<double> s3 = col_t * row_t + lead_form * (1.0 - c_dd);
    return (s2 + s3).real();
}

double exact_population(const CorrelationMatrix& c) { return c.c(0, 0).real(); }

ExactSeries exact_series(const ModelConfig& config, const LeadDiscretization& leads,
                         std::span<const double> times, double u_shift) {
    using cd = std::complex<double>;
    ExactSeries out;
    out.times.assign(times.begin(), times.end());
    const std::size_t n_t = times.size();
    out.population.assign(n_t, 0.0);
    out.population_up.assign(n_t, 0.0);
    out.current_left.assign(n_t, 0.0);
    out.current_left_up.assign(n_t, 0.0);
    out.current_left_squared_up.assign(n_t, 0.0);

    for (Spin spin : kSpins) {
        const SingleParticleHamiltonian h = single_particle_matrix(config, leads, spin, u_shift);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
        const Eigen::MatrixXcd& q = solver.eigenvectors();
        const Eigen::VectorXd& lambda = solver.eigenvalues();
        const CorrelationMatrix c0 = initial_correlations(config, leads, spin);

        // C(t) = conj(Q) D̄ G0 D Qᵀ with G0 = Qᵀ C0 conj(Q), D = diag(e^{−iλt}).
        // Each needed quantity is a form xᵀ C(t) y = (D̄ Q†x)ᵀ G0 (D Qᵀy), O(N²) per time.
        const Eigen::MatrixXcd g0 = q.transpose() * c0.c * q.conjugate();
        const Eigen::VectorXd tl = left_couplings(leads, spin);
        const Eigen::VectorXcd u = q.conjugate().row(0).transpose();  // xᵀ conj(Q) with x = e_d
        const Eigen::VectorXcd w = q.transpose() * tl.cast<cd>();     // Qᵀ t
        const Eigen::VectorXcd u_right = u.conjugate();               // Qᵀ e_d
        const Eigen::VectorXcd w_left = w.conjugate();                // (tᵀ conj(Q))ᵀ
        const double t2 = tl.squaredNorm();

        for (std::size_t i = 0; i < n_t; ++i) {
            const Eigen::VectorXcd d =
                (lambda.cast<cd>() * cd(0.0, -times[i])).array().exp().matrix();
            const Eigen::VectorXcd dbar = d.conjugate();
            auto form = [&](const Eigen::VectorXcd& left, const Eigen::VectorXcd& right) {
                const Eigen::VectorXcd l = dbar.cwiseProduct(left);
                const Eigen::VectorXcd r = d.cwiseProduct(right);
                return (l.transpose() * g0 * r).value();
            };
            const cd c_dd = form(u, u_right);
            const cd row_t = form(u, w);
            const cd col_t = form(w_left, u_right);
            const cd lead_form = form(w_left, w);

            const double n = c_dd.real();
            const double current = 2.0 * row_t.imag();
            out.population[i] += n;
            out.current_left[i] += current;
            if (spin == Spin::up) {
                out.population_up[i] = n;
                out.current_left_up[i] = current;
                const cd s2 = row_t * col_t + c_dd * (t2 - lead_form);
                const cd s3 = col_t * row_t + lead_form * (1.0 - c_dd);
                out.current_left_squared_up[i] = (s2 + s3).real();
            }
        }
    }
    return out;
}

}  // namespace cqm
