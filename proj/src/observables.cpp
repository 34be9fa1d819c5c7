#include "cqm/observables.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

#include "cqm/mapping.hpp"

namespace cqm {

namespace {

constexpr std::array<std::pair<Observable, std::string_view>, 8> kNames{{
    {Observable::population, "population"},
    {Observable::population_up, "population-up"},
    {Observable::current_left, "current-left"},
    {Observable::current_left_up, "current-left-up"},
    {Observable::current_left_squared_up, "current-left-squared"},
    {Observable::current_left_squared_up_term1, "current-left-squared-term1"},
    {Observable::current_left_squared_up_term2, "current-left-squared-term2"},
    {Observable::current_left_squared_up_term3, "current-left-squared-term3"},
}};

bool needs_current_squared(Observable o) {
    return o == Observable::current_left_squared_up ||
           o == Observable::current_left_squared_up_term1 ||
           o == Observable::current_left_squared_up_term2 ||
           o == Observable::current_left_squared_up_term3;
}

}  // namespace

std::string_view name(Observable o) {
    for (const auto& [obs, str] : kNames) {
        if (obs == o) return str;
    }
    return "unknown";
}

Observable observable_from_name(std::string_view n) {
    for (const auto& [obs, str] : kNames) {
        if (str == n) return obs;
    }
    throw std::invalid_argument("unknown observable '" + std::string(n) + "'");
}

void evaluate_observables(std::span<const Observable> which, const PhaseState& state,
                          const LeadDiscretization& leads, std::span<double> out) {
    CurrentSquared sq;
    for (Observable o : which) {
        if (needs_current_squared(o)) {
            sq = left_current_squared(state, leads, Spin::up);
            break;
        }
    }
    for (std::size_t i = 0; i < which.size(); ++i) {
        switch (which[i]) {
            case Observable::population:
                out[i] = occupation(state, dot_site(Spin::up)) +
                         occupation(state, dot_site(Spin::down));
                break;
            case Observable::population_up:
                out[i] = occupation(state, dot_site(Spin::up));
                break;
            case Observable::current_left:
                out[i] = left_current(state, leads);
                break;
            case Observable::current_left_up:
                out[i] = left_current(state, leads, Spin::up);
                break;
            case Observable::current_left_squared_up:
                out[i] = sq.value();
                break;
            case Observable::current_left_squared_up_term1:
                out[i] = sq.term1;
                break;
            case Observable::current_left_squared_up_term2:
                out[i] = sq.term2;
                break;
            case Observable::current_left_squared_up_term3:
                out[i] = sq.term3;
                break;
        }
    }
}

}  // namespace cqm
