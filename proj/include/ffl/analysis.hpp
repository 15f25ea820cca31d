#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ffl/parallel.hpp"

namespace ffl::analysis {

// Divergence-of-nearby-pairs curve for Lyapunov-exponent estimation.
struct DivergenceCurve {
    std::vector<int> ks;              // 1..k_max
    std::vector<double> mean_ln_d;    // mean ln d(k) over pairs
    std::vector<std::size_t> counts;  // contributing pairs per k
    double slope = 0;                 // least-squares fit over [fit_lo, fit_hi]
    int fit_lo = 1, fit_hi = 1;
    std::size_t pairs = 0;
};

struct LyapunovConfig {
    double eps = 0.1;           // pairing bound on the normalized series
    int k_max = 12;
    int min_pair_gap = 0;       // 0 = default (k_max)
    int fit_lo = 1, fit_hi = 0; // 0 = default (max(2, k_max/4))
};

// Series is normalized to zero mean and unit range before pairing, so eps
// is scale-free and the estimate is invariant under affine rescaling.
// For each index the nearest value-neighbor at least min_pair_gap away and
// closer than eps is tracked for k steps; the slope of mean ln d(k) over
// the initial region estimates the exponent.
// Throws DegenerateSeries (constant input) and InsufficientPairs.
DivergenceCurve lyapunov_curve(std::span<const double> series, const LyapunovConfig& cfg = {},
                               ExecPolicy policy = ExecPolicy::Parallel);

// --- hysteresis loop metrics ----------------------------------------------

struct LoopMetrics {
    double area = 0;           // signed shoelace area of the (V, zc) polygon
    double pinch_voltage = 0;  // branch-crossing voltage (NaN if none)
    bool has_pinch = false;
    double dynamic_range = 0;  // max - min of zc within the loop
};

// Splits the series into `loops` equal consecutive loops. Throws PartialLoop
// when the series does not divide evenly or a loop is too short.
std::vector<LoopMetrics> hysteresis_metrics(std::span<const double> volts,
                                            std::span<const double> zc, int loops);

// Mean of the two smallest values; the in-memory detection threshold.
// Throws InsufficientData for fewer than two values.
double detection_threshold(std::span<const double> finals);

struct SummaryStats {
    double mean = 0;
    double stddev = 0;          // n-1 denominator; 0 with degenerate=true for n=1
    bool degenerate = false;
    std::vector<std::size_t> histogram;
    double bin_lo = 0, bin_width = 0;
};

SummaryStats summary_stats(std::span<const double> values, std::size_t bins = 16);

// Spearman rank correlation (ties get average ranks).
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace ffl::analysis
