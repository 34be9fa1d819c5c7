#pragma once

#include <complex>
#include <optional>

#include "cqm/model.hpp"
#include "cqm/phase_state.hpp"

namespace cqm {

/// Phase variables of one site. Also used for "aggregated" sites
/// Σ_k t_k (x_k, y_k, p_x,k, p_y,k), on which the pair images are linear.
struct SiteVariables {
    double x = 0.0;
    double y = 0.0;
    double px = 0.0;
    double py = 0.0;
};

SiteVariables variables(const PhaseState& state, Site site);

/// Operator pair kinds with a classical image.
enum class PairKind {
    create_annihilate,      // a_n† a_m
    create_create,          // a_n† a_m†
    annihilate_annihilate,  // a_n a_m
};

struct BilinearValue {
    std::complex<double> value;
    /// Set for a_n† a_n† and a_n a_n, which vanish by exclusion.
    bool excluded = false;
};

/// Images of fermionic pairs in terms of the phase variables of two sites.
namespace image {
/// a_n† a_n ↦ x p_y − y p_x.
double number(const SiteVariables& n);
/// a_n† a_m, n ≠ m. At n = m this reduces to number().
std::complex<double> hop(const SiteVariables& n, const SiteVariables& m);
/// a_n† a_m†, n ≠ m.
std::complex<double> pair_create(const SiteVariables& n, const SiteVariables& m);
/// a_n a_m, n ≠ m.
std::complex<double> pair_annihilate(const SiteVariables& n, const SiteVariables& m);
}  // namespace image

/// Occupation x·p_y − y·p_x of a site (no Langer shift).
double occupation(const PhaseState& state, Site site);

BilinearValue bilinear(const PhaseState& state, Site n, Site m, PairKind kind);

/// C-coefficients weighting the four classically distinct forms of
/// a_n† a_m a_m† a_k.
struct QuarticCoefficients {
    double c1 = 1.0;
    double c2 = -1.0;
    double c3 = 1.0;
    double c4 = 0.0;
};

/// Operator string a_n† a_m a_m'† a_k; only m == m' is accepted.
struct QuarticIndices {
    Site n;
    Site m;
    Site m_dagger;
    Site k;
};

/// Classical image of ⟨a_n† a_m a_m† a_k⟩ as the weighted sum of its four
/// forms. Throws std::invalid_argument if the middle indices differ.
std::complex<double> quartic_expectation(const PhaseState& state, const QuarticIndices& indices,
                                         const QuarticCoefficients& coeffs = {});

/// Left-lead current Σ_{k∈L} t_k (y_σ p_y,k − p_y,σ y_k + x_σ p_x,k − p_x,σ x_k),
/// for one spin or summed over both.
double left_current(const PhaseState& state, const LeadDiscretization& leads,
                    std::optional<Spin> spin = std::nullopt);

/// The three mapped terms of the second moment of the left current.
struct CurrentSquared {
    double term1 = 0.0;
    double term2 = 0.0;
    double term3 = 0.0;
    double value() const { return term1 - term2 + term3; }
};

/// ⟨I_Lσ²⟩ image for one spin. Evaluated in O(N) by aggregating the lead
/// sums, since every pair image is linear in each of its two sites.
CurrentSquared left_current_squared(const PhaseState& state, const LeadDiscretization& leads,
                                    Spin spin);

}  // namespace cqm
