#pragma once

#include <span>
#include <string_view>

#include "cqm/model.hpp"
#include "cqm/phase_state.hpp"

namespace cqm {

enum class Observable {
    population,                      // n_↑ + n_↓
    population_up,
    current_left,                    // both spins
    current_left_up,
    current_left_squared_up,         // term1 − term2 + term3
    current_left_squared_up_term1,
    current_left_squared_up_term2,
    current_left_squared_up_term3,
};

std::string_view name(Observable o);
/// Throws std::invalid_argument for unknown names.
Observable observable_from_name(std::string_view name);

/// Evaluates every requested observable on one phase point; the three
/// current-squared components share a single pass.
void evaluate_observables(std::span<const Observable> which, const PhaseState& state,
                          const LeadDiscretization& leads, std::span<double> out);

}  // namespace cqm
