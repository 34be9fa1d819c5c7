#include "cqm/mapping.hpp"

#include <stdexcept>

namespace cqm {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

// Σ_{k∈L, spin} t_k (x_k, y_k, p_x,k, p_y,k).
SiteVariables aggregate_left(const PhaseState& state, const LeadDiscretization& leads, Spin spin) {
    SiteVariables agg;
    const std::size_t first = leads.index(spin, Lead::left, 0);
    const std::size_t n = leads.modes_per_channel;
    const auto xs = state.block(PhaseState::kX);
    const auto ys = state.block(PhaseState::kY);
    const auto pxs = state.block(PhaseState::kPx);
    const auto pys = state.block(PhaseState::kPy);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t mode = first + k;
        const std::size_t s = mode_site(mode).index;
        const double t = leads.couplings[mode];
        agg.x += t * xs[s];
        agg.y += t * ys[s];
        agg.px += t * pxs[s];
        agg.py += t * pys[s];
    }
    return agg;
}

double squared_coupling_sum(const LeadDiscretization& leads, Spin spin) {
    double sum = 0.0;
    const std::size_t first = leads.index(spin, Lead::left, 0);
    for (std::size_t k = 0; k < leads.modes_per_channel; ++k) {
        const double t = leads.couplings[first + k];
        sum += t * t;
    }
    return sum;
}

double current_from(const SiteVariables& d, const SiteVariables& lead) {
    return d.y * lead.py - d.py * lead.y + d.x * lead.px - d.px * lead.x;
}

}  // namespace

SiteVariables variables(const PhaseState& state, Site site) {
    return {state.x(site), state.y(site), state.px(site), state.py(site)};
}

namespace image {

double number(const SiteVariables& n) { return n.x * n.py - n.y * n.px; }

std::complex<double> hop(const SiteVariables& n, const SiteVariables& m) {
    const double im = n.x * m.px - n.px * m.x + n.y * m.py - n.py * m.y;
    const double re = n.x * m.py - n.px * m.y + m.x * n.py - m.px * n.y;
    return 0.5 * (kI * im + re);
}

std::complex<double> pair_create(const SiteVariables& n, const SiteVariables& m) {
    const double im = n.x * m.px - n.px * m.x - n.y * m.py + n.py * m.y;
    const double re = n.x * m.py - n.px * m.y - m.x * n.py + m.px * n.y;
    return 0.5 * (kI * im - re);
}

std::complex<double> pair_annihilate(const SiteVariables& n, const SiteVariables& m) {
    const double im = n.x * m.px - n.px * m.x - n.y * m.py + n.py * m.y;
    const double re = n.x * m.py - n.px * m.y - m.x * n.py + m.px * n.y;
    return 0.5 * (kI * im + re);
}

}  // namespace image

double occupation(const PhaseState& state, Site site) {
    return state.x(site) * state.py(site) - state.y(site) * state.px(site);
}

BilinearValue bilinear(const PhaseState& state, Site n, Site m, PairKind kind) {
    const SiteVariables vn = variables(state, n);
    switch (kind) {
        case PairKind::create_annihilate:
            if (n == m) return {image::number(vn), false};
            return {image::hop(vn, variables(state, m)), false};
        case PairKind::create_create:
            if (n == m) return {0.0, true};
            return {image::pair_create(vn, variables(state, m)), false};
        case PairKind::annihilate_annihilate:
            if (n == m) return {0.0, true};
            return {image::pair_annihilate(vn, variables(state, m)), false};
    }
    return {0.0, false};
}

std::complex<double> quartic_expectation(const PhaseState& state, const QuarticIndices& idx,
                                         const QuarticCoefficients& c) {
    if (!(idx.m == idx.m_dagger)) {
        throw std::invalid_argument("quartic_expectation: expected the pattern a_n† a_m a_m† a_k");
    }
    const auto n = variables(state, idx.n);
    const auto m = variables(state, idx.m);
    const auto k = variables(state, idx.k);
    // a_m a_m† ↦ 1 − n_m
    const double hole_m = 1.0 - image::number(m);
    const std::complex<double> hop_nk = image::hop(n, k);

    std::complex<double> total = 0.0;
    total += c.c1 * image::hop(n, m) * image::hop(m, k);
    total += c.c2 * (hop_nk - image::pair_create(n, m) * image::pair_annihilate(m, k));
    total += c.c3 * hop_nk * hole_m;
    const double delta_nk = idx.n == idx.k ? 1.0 : 0.0;
    total += c.c4 * (delta_nk * hole_m - image::pair_annihilate(k, m) * image::pair_create(m, n));
    return total;
}

double left_current(const PhaseState& state, const LeadDiscretization& leads,
                    std::optional<Spin> spin) {
    double total = 0.0;
    for (Spin s : kSpins) {
        if (spin && *spin != s) continue;
        total += current_from(variables(state, dot_site(s)), aggregate_left(state, leads, s));
    }
    return total;
}

CurrentSquared left_current_squared(const PhaseState& state, const LeadDiscretization& leads,
                                    Spin spin) {
    const SiteVariables d = variables(state, dot_site(spin));
    const SiteVariables e = aggregate_left(state, leads, spin);
    const double t2 = squared_coupling_sum(leads, spin);
    const double n_d = image::number(d);
    const double lead_hop = image::hop(e, e).real();

    CurrentSquared out;
    out.term1 = 2.0 * (image::hop(e, d) * image::hop(d, e)).real();
    out.term2 = lead_hop - (image::pair_create(e, d) * image::pair_annihilate(d, e)).real() +
                t2 * n_d - (image::pair_create(d, e) * image::pair_annihilate(e, d)).real();
    out.term3 = lead_hop * (1.0 - n_d) + n_d * (t2 - lead_hop);
    return out;
}

}  // namespace cqm
