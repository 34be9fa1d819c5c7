#include "cqm/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cqm {

double HubbardQuantization::gate(double n_other, Spin other) const {
    switch (mode) {
        case GateMode::step:
            return n_other >= delta(other) ? 1.0 : 0.0;
        case GateMode::continuous:
            return n_other;
        case GateMode::off:
            return 0.0;
    }
    return 0.0;
}

void HubbardQuantization::validate() const {
    if (!(delta_up >= 0.0 && delta_up <= 1.0)) throw ConfigError("delta_up", "must lie in [0, 1]");
    if (!(delta_down >= 0.0 && delta_down <= 1.0))
        throw ConfigError("delta_down", "must lie in [0, 1]");
}

std::vector<double> IntegratorConfig::uniform_grid(double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw ConfigError("output_dt", "must be > 0");
    const auto n = static_cast<std::size_t>(std::floor(t_max / dt + 1e-6));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = static_cast<double>(i) * dt;
    return grid;
}

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0)) throw ConfigError("rel_tol", "must be > 0");
    if (!(abs_tol > 0.0)) throw ConfigError("abs_tol", "must be > 0");
    if (!(t_max > 0.0)) throw ConfigError("t_max", "must be > 0");
    if (!(max_step > 0.0)) throw ConfigError("max_step", "must be > 0");
    if (max_steps == 0) throw ConfigError("max_steps", "must be > 0");
    if (output_grid.empty()) throw ConfigError("output_grid", "must not be empty");
    for (std::size_t i = 1; i < output_grid.size(); ++i) {
        if (!(output_grid[i] > output_grid[i - 1]))
            throw ConfigError("output_grid", "must be strictly increasing");
    }
    if (output_grid.front() < 0.0 || output_grid.back() > t_max * (1.0 + 1e-12))
        throw ConfigError("output_grid", "must lie inside [0, t_max]");
}

Dopri5Options IntegratorConfig::dopri5_options() const {
    Dopri5Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    opt.max_step = max_step;
    opt.max_steps = max_steps;
    return opt;
}

double recurrence_horizon(const LeadDiscretization& leads) {
    if (!(leads.spacing > 0.0)) throw std::invalid_argument("recurrence_horizon: spacing must be > 0");
    return 2.0 * std::numbers::pi / leads.spacing;
}

EquationsOfMotion::EquationsOfMotion(const ModelConfig& config, const LeadDiscretization& leads,
                                     const HubbardQuantization& quant)
    : n_sites_(2 + leads.size()),
      modes_per_spin_(leads.modes_per_spin()),
      dot_level_{config.eps_up, config.eps_down},
      hubbard_u_(config.hubbard_u),
      quant_(quant),
      energies_(n_sites_, 0.0),
      couplings_(n_sites_, 0.0),
      horizon_(cqm::recurrence_horizon(leads)) {
    for (std::size_t k = 0; k < leads.size(); ++k) {
        energies_[mode_site(k).index] = leads.energies[k];
        couplings_[mode_site(k).index] = leads.couplings[k];
    }
    if (quant_.mode == GateMode::off) hubbard_u_ = 0.0;
}

void EquationsOfMotion::operator()(double, std::span<const double> y,
                                   std::span<double> dydt) const {
    const std::size_t s = n_sites_;
    const double* x = y.data();
    const double* yy = y.data() + s;
    const double* px = y.data() + 2 * s;
    const double* py = y.data() + 3 * s;
    double* dx = dydt.data();
    double* dy = dydt.data() + s;
    double* dpx = dydt.data() + 2 * s;
    double* dpy = dydt.data() + 3 * s;

    const double n_dot[2] = {x[0] * py[0] - yy[0] * px[0], x[1] * py[1] - yy[1] * px[1]};
    const double* e = energies_.data();
    const double* t = couplings_.data();

    // (u, v) -> (−H v, H u) restricted to one spin block.
    auto apply = [&](const double* u, const double* v, double* du, double* dv, std::size_t d,
                     std::size_t first, double level) {
        const double ud = u[d];
        const double vd = v[d];
        double sum_u = 0.0;
        double sum_v = 0.0;
        const std::size_t last = first + modes_per_spin_;
        for (std::size_t j = first; j < last; ++j) {
            du[j] = -(e[j] * v[j] + t[j] * vd);
            dv[j] = e[j] * u[j] + t[j] * ud;
            sum_u += t[j] * u[j];
            sum_v += t[j] * v[j];
        }
        du[d] = -(level * vd + sum_v);
        dv[d] = level * ud + sum_u;
    };

    for (Spin spin : kSpins) {
        const std::size_t d = index_of(spin);
        const Spin other = opposite(spin);
        double level = dot_level_[d];
        if (hubbard_u_ != 0.0) level += hubbard_u_ * quant_.gate(n_dot[index_of(other)], other);
        const std::size_t first = 2 + d * modes_per_spin_;
        apply(x, yy, dx, dy, d, first, level);
        apply(px, py, dpx, dpy, d, first, level);
    }
}

PhaseState rhs(const PhaseState& state, const LeadDiscretization& leads,
               const ModelConfig& config, const HubbardQuantization& quant) {
    EquationsOfMotion eom(config, leads, quant);
    PhaseState out(state.n_sites());
    out.time = state.time;
    eom(state.time, state.data(), out.data());
    return out;
}

}  // namespace cqm
