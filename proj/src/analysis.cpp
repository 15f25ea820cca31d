#include "ffl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ffl/errors.hpp"

namespace ffl::analysis {

DivergenceCurve lyapunov_curve(std::span<const double> series, const LyapunovConfig& cfg,
                               ExecPolicy policy) {
    const int k_max = cfg.k_max;
    const int gap = cfg.min_pair_gap > 0 ? cfg.min_pair_gap : k_max;
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    const std::size_t n = series.size();
    if (n <= static_cast<std::size_t>(k_max + gap))
        throw std::invalid_argument("series too short for k_max + min_pair_gap");

    const auto [mn_it, mx_it] = std::minmax_element(series.begin(), series.end());
    const double range = *mx_it - *mn_it;
    if (!(range > 0)) throw DegenerateSeries();
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) /
                        static_cast<double>(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (series[i] - mean) / range;

    // Nearest value-neighbor per index, temporally separated by >= gap.
    // Each index's search is independent; results land in per-index slots.
    const std::size_t usable = n - static_cast<std::size_t>(k_max);
    std::vector<std::ptrdiff_t> partner(usable, -1);
    parallel_for(usable, policy, [&](std::size_t i) {
        double best = cfg.eps;
        std::ptrdiff_t best_j = -1;
        for (std::size_t j = 0; j < usable; ++j) {
            const auto di = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j);
            if (di < gap && -di < gap) continue;
            const double d = std::abs(x[i] - x[j]);
            if (d < best) {
                best = d;
                best_j = static_cast<std::ptrdiff_t>(j);
            }
        }
        partner[i] = best_j;
    });

    DivergenceCurve out;
    out.ks.resize(static_cast<std::size_t>(k_max));
    out.mean_ln_d.assign(static_cast<std::size_t>(k_max), 0.0);
    out.counts.assign(static_cast<std::size_t>(k_max), 0);
    for (int k = 1; k <= k_max; ++k) out.ks[static_cast<std::size_t>(k - 1)] = k;

    // Ordered accumulation keeps the averages identical for any thread count.
    for (std::size_t i = 0; i < usable; ++i) {
        if (partner[i] < 0) continue;
        ++out.pairs;
        const auto j = static_cast<std::size_t>(partner[i]);
        for (int k = 1; k <= k_max; ++k) {
            const double d = std::abs(x[i + static_cast<std::size_t>(k)] -
                                      x[j + static_cast<std::size_t>(k)]);
            if (d > 0) {
                out.mean_ln_d[static_cast<std::size_t>(k - 1)] += std::log(d);
                ++out.counts[static_cast<std::size_t>(k - 1)];
            }
        }
    }
    if (out.pairs == 0) throw InsufficientPairs();
    for (int k = 1; k <= k_max; ++k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        if (out.counts[idx] > 0)
            out.mean_ln_d[idx] /= static_cast<double>(out.counts[idx]);
    }

    out.fit_lo = cfg.fit_lo;
    out.fit_hi = cfg.fit_hi > 0 ? cfg.fit_hi : std::max(2, k_max / 4);
    out.fit_hi = std::min(out.fit_hi, k_max);
    if (out.fit_lo >= out.fit_hi) throw std::invalid_argument("empty slope fit range");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int k = out.fit_lo; k <= out.fit_hi; ++k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        if (out.counts[idx] == 0) continue;
        sx += k;
        sy += out.mean_ln_d[idx];
        sxx += static_cast<double>(k) * k;
        sxy += k * out.mean_ln_d[idx];
        ++m;
    }
    if (m < 2) throw InsufficientPairs();
    out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return out;
}

std::vector<LoopMetrics> hysteresis_metrics(std::span<const double> volts,
                                            std::span<const double> zc, int loops) {
    if (volts.size() != zc.size()) throw std::invalid_argument("series length mismatch");
    if (loops < 1) throw std::invalid_argument("loop count must be >= 1");
    if (volts.empty() || volts.size() % static_cast<std::size_t>(loops) != 0)
        throw PartialLoop("series does not divide into " + std::to_string(loops) + " loops");
    const std::size_t per = volts.size() / static_cast<std::size_t>(loops);
    if (per < 3) throw PartialLoop("loops need at least 3 samples");

    std::vector<LoopMetrics> out;
    out.reserve(static_cast<std::size_t>(loops));
    for (int l = 0; l < loops; ++l) {
        const std::size_t off = static_cast<std::size_t>(l) * per;
        LoopMetrics m;

        double area2 = 0;
        double lo = zc[off], hi = zc[off];
        for (std::size_t i = 0; i < per; ++i) {
            const std::size_t j = (i + 1) % per;
            area2 += volts[off + i] * zc[off + j] - volts[off + j] * zc[off + i];
            lo = std::min(lo, zc[off + i]);
            hi = std::max(hi, zc[off + i]);
        }
        m.area = 0.5 * area2;
        m.dynamic_range = hi - lo;

        // Split at the maximum-voltage sample; interpolate the decreasing
        // branch onto the increasing branch's grid and look for a sign change.
        std::size_t peak = 0;
        for (std::size_t i = 1; i < per; ++i)
            if (volts[off + i] > volts[off + peak]) peak = i;
        auto down_at = [&](double vq) -> double {
            // samples peak..per-1 have decreasing voltage
            for (std::size_t i = peak; i + 1 < per; ++i) {
                const double v0 = volts[off + i], v1 = volts[off + i + 1];
                if ((vq <= v0 && vq >= v1)) {
                    const double f = (v0 - vq) / (v0 - v1);
                    return zc[off + i] * (1 - f) + zc[off + i + 1] * f;
                }
            }
            return std::numeric_limits<double>::quiet_NaN();
        };
        m.has_pinch = false;
        double best_slope = 0;
        for (std::size_t i = 1; i + 1 <= peak; ++i) {
            const double v0 = volts[off + i - 1], v1 = volts[off + i];
            const double d0 = zc[off + i - 1] - down_at(v0);
            const double d1 = zc[off + i] - down_at(v1);
            if (std::isnan(d0) || std::isnan(d1)) continue;
            if (d0 == 0 || (d0 < 0) != (d1 < 0)) {
                const double vx = v0 + (v1 - v0) * d0 / (d0 - d1);
                const double steep = std::abs(d1 - d0);
                // Keep the dominant crossing when several appear.
                if (!m.has_pinch || steep > best_slope) {
                    m.pinch_voltage = vx;
                    best_slope = steep;
                    m.has_pinch = true;
                }
            }
        }
        if (!m.has_pinch) m.pinch_voltage = std::numeric_limits<double>::quiet_NaN();
        out.push_back(m);
    }
    return out;
}

double detection_threshold(std::span<const double> finals) {
    if (finals.size() < 2) throw InsufficientData("detection threshold needs >= 2 values");
    double lowest = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (double v : finals) {
        if (v < lowest) {
            second = lowest;
            lowest = v;
        } else if (v < second) {
            second = v;
        }
    }
    return 0.5 * (lowest + second);
}

SummaryStats summary_stats(std::span<const double> values, std::size_t bins) {
    if (values.empty()) throw InsufficientData("summary statistics need >= 1 value");
    if (bins < 1) throw std::invalid_argument("need at least one histogram bin");
    SummaryStats s;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        s.stddev = 0;
        s.degenerate = true;
    } else {
        double acc = 0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (n - 1));
    }
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    s.bin_lo = *mn_it;
    const double range = *mx_it - *mn_it;
    if (!(range > 0)) {
        s.histogram.assign(1, values.size());
        s.bin_width = 0;
        return s;
    }
    s.bin_width = range / static_cast<double>(bins);
    s.histogram.assign(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - s.bin_lo) / s.bin_width);
        if (b >= bins) b = bins - 1;
        ++s.histogram[b];
    }
    return s;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman needs two equal series of length >= 2");
    const auto rx = ranks(xs), ry = ranks(ys);
    const auto n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace ffl::analysis
