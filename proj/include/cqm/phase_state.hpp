#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cqm/model.hpp"

namespace cqm {

/// Index of a mapped fermionic level (dot or lead mode) in a PhaseState.
struct Site {
    std::size_t index = 0;
    bool operator==(const Site&) const = default;
};

constexpr Site dot_site(Spin s) { return Site{index_of(s)}; }
constexpr Site mode_site(std::size_t mode) { return Site{2 + mode}; }

/// Classical phase vector (x, y, p_x, p_y) for every site.
///
/// Sites are dot-up, dot-down, then the lead modes in LeadDiscretization
/// order. The flat storage is four contiguous blocks of length n_sites:
///   [x_0 .. x_{S-1} | y_0 .. | p_x,0 .. | p_y,0 ..]
/// which is also the layout handed to the ODE integrator.
class PhaseState {
  public:
    enum Component : std::size_t { kX = 0, kY = 1, kPx = 2, kPy = 3 };

    PhaseState() = default;
    explicit PhaseState(std::size_t n_sites) : n_sites_(n_sites), data_(4 * n_sites, 0.0) {}
    static PhaseState for_leads(const LeadDiscretization& leads) {
        return PhaseState(2 + leads.size());
    }

    std::size_t n_sites() const { return n_sites_; }
    double time = 0.0;

    double& x(Site s) { return data_[s.index]; }
    double& y(Site s) { return data_[n_sites_ + s.index]; }
    double& px(Site s) { return data_[2 * n_sites_ + s.index]; }
    double& py(Site s) { return data_[3 * n_sites_ + s.index]; }
    double x(Site s) const { return data_[s.index]; }
    double y(Site s) const { return data_[n_sites_ + s.index]; }
    double px(Site s) const { return data_[2 * n_sites_ + s.index]; }
    double py(Site s) const { return data_[3 * n_sites_ + s.index]; }

    std::span<double> block(Component c) { return {data_.data() + c * n_sites_, n_sites_}; }
    std::span<const double> block(Component c) const {
        return {data_.data() + c * n_sites_, n_sites_};
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool operator==(const PhaseState&) const = default;

  private:
    std::size_t n_sites_ = 0;
    std::vector<double> data_;
};

}  // namespace cqm
