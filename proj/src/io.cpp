#include "cqm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cqm {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_series_csv(std::ostream& os, std::span<const TimeSeriesEstimate> series,
                      const std::string& config_hash) {
    os << kSeriesHeader << '\n';
    for (const TimeSeriesEstimate& s : series) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            os << format_double(s.times[i]) << ',' << format_double(s.mean(i)) << ','
               << format_double(s.stderr_of_mean(i)) << ',' << s.moments[i].count << ','
               << name(s.observable) << ',' << config_hash << '\n';
        }
    }
}

const std::vector<double>& exact_values(const ExactSeries& exact, Observable o) {
    switch (o) {
        case Observable::population: return exact.population;
        case Observable::population_up: return exact.population_up;
        case Observable::current_left: return exact.current_left;
        case Observable::current_left_up: return exact.current_left_up;
        case Observable::current_left_squared_up: return exact.current_left_squared_up;
        default: break;
    }
    throw std::invalid_argument("no exact curve for " + std::string(name(o)));
}

void write_exact_csv(std::ostream& os, const ExactSeries& exact,
                     std::span<const Observable> observables, const std::string& config_hash) {
    os << kSeriesHeader << '\n';
    for (Observable o : observables) {
        const std::vector<double>& v = exact_values(exact, o);
        for (std::size_t i = 0; i < exact.times.size(); ++i) {
            os << format_double(exact.times[i]) << ',' << format_double(v[i]) << ",0,0," << name(o)
               << ',' << config_hash << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& os, const SweepCurve& curve, const std::string& config_hash) {
    os << name(curve.axis) << ",mean,stderr,n_traj,observable,config_hash,error\n";
    for (const SweepPoint& p : curve.points) {
        os << format_double(p.x) << ',';
        if (p.value) {
            os << format_double(p.value->mean) << ',' << format_double(p.value->stderr_of_mean) << ','
               << p.value->n_traj;
        } else {
            os << ",,0";
        }
        std::string err = p.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << ',' << name(curve.observable) << ',' << config_hash << ',' << err << '\n';
    }
}

void write_variance_csv(std::ostream& os, const ControlVariateEstimate& cv,
                        const TimeSeriesEstimate& plain, const std::string& config_hash) {
    os << kSeriesHeader << ",variance_ratio,exceeds_half,plain_mean,plain_stderr\n";
    for (std::size_t i = 0; i < cv.times.size(); ++i) {
        const auto& r = cv.variance_ratio[i];
        os << format_double(cv.times[i]) << ',' << format_double(cv.mean[i]) << ','
           << format_double(cv.stderr_of_mean[i]) << ',' << cv.n_traj << ',' << name(cv.observable)
           << ',' << config_hash << ',' << (r ? format_double(*r) : "undefined") << ','
           << (r && *r > 0.5 ? 1 : 0) << ',' << format_double(plain.mean(i)) << ','
           << format_double(plain.stderr_of_mean(i)) << '\n';
    }
}

void write_calibration_csv(std::ostream& os, const CalibrationResult& result,
                           const std::string& config_hash) {
    os << "iteration,delta,median,occupation,stderr,n_traj,converged,config_hash\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        const CalibrationStep& s = result.trace[i];
        os << i + 1 << ',' << format_double(s.delta) << ',' << format_double(s.median) << ','
           << format_double(s.occupation.mean) << ',' << format_double(s.occupation.stderr_of_mean)
           << ',' << s.occupation.n_traj << ',' << (result.converged ? 1 : 0) << ',' << config_hash
           << '\n';
    }
}

void write_distribution_csv(std::ostream& os, std::span<const double> samples, double width,
                            const std::string& config_hash) {
    os << "n,count,fraction,n_samples,observable,config_hash\n";
    if (samples.empty()) return;
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const auto first = static_cast<long>(std::floor(*lo_it / width));
    const auto last = static_cast<long>(std::floor(*hi_it / width));
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(last - first + 1), 0);
    for (double v : samples) ++counts[static_cast<std::size_t>(static_cast<long>(std::floor(v / width)) - first)];
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double centre = (static_cast<double>(first + static_cast<long>(b)) + 0.5) * width;
        os << format_double(centre) << ',' << counts[b] << ','
           << format_double(static_cast<double>(counts[b]) / static_cast<double>(samples.size())) << ','
           << samples.size() << ",occupation-distribution," << config_hash << '\n';
    }
}

}  // namespace cqm
