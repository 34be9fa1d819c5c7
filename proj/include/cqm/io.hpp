#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cqm/estimator.hpp"
#include "cqm/exact.hpp"

namespace cqm {

/// %.17g: round-trips every double.
std::string format_double(double v);

inline constexpr const char* kSeriesHeader = "t,mean,stderr,n_traj,observable,config_hash";

/// Long format: one row per (observable, time).
void write_series_csv(std::ostream& os, std::span<const TimeSeriesEstimate> series,
                      const std::string& config_hash);

/// Exact curves in the ensemble schema (stderr 0, n_traj 0).
void write_exact_csv(std::ostream& os, const ExactSeries& exact,
                     std::span<const Observable> observables, const std::string& config_hash);

/// First column is named after the axis; failed points carry an error text.
void write_sweep_csv(std::ostream& os, const SweepCurve& curve, const std::string& config_hash);

/// Series schema plus variance_ratio, exceeds_half and the plain estimator.
void write_variance_csv(std::ostream& os, const ControlVariateEstimate& cv,
                        const TimeSeriesEstimate& plain, const std::string& config_hash);

void write_calibration_csv(std::ostream& os, const CalibrationResult& result,
                           const std::string& config_hash);

/// Histogram of pooled instantaneous n_σ samples, bins of `width`.
void write_distribution_csv(std::ostream& os, std::span<const double> samples, double width,
                            const std::string& config_hash);

/// Values of one observable from an ExactSeries; throws for the squared-current terms.
const std::vector<double>& exact_values(const ExactSeries& exact, Observable o);

}  // namespace cqm
