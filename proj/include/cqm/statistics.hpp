#pragma once

#include <cmath>
#include <cstdint>

namespace cqm {

/// Welford streaming mean/variance with Chan's pairwise merge.
struct RunningMoments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningMoments& other) {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(other.count);
        const double n = na + nb;
        const double delta = other.mean - mean;
        mean += delta * nb / n;
        m2 += other.m2 + delta * delta * na * nb / n;
        count += other.count;
    }

    /// Unbiased sample variance; 0 with fewer than two samples.
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
    double stderr_of_mean() const {
        return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
};

}  // namespace cqm
