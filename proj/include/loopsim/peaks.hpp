#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "loopsim/errors.hpp"

namespace loopsim {

struct Peak {
    double position;
    double height;
    double variance;  // second central moment of the density inside the peak window
};

struct PeakAnalysis {
    std::vector<Peak> peaks;  // ascending position
    std::size_t central = 0;  // index of the peak nearest 0
    double window_half_width = 0.0;

    const Peak& central_peak() const { return peaks.at(central); }

    // max |spacing - mean spacing| / mean spacing; 0 with fewer than 3 peaks.
    double spacing_deviation() const {
        if (peaks.size() < 3) return 0.0;
        std::vector<double> s;
        for (std::size_t i = 1; i < peaks.size(); ++i) s.push_back(peaks[i].position - peaks[i - 1].position);
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        double dev = 0.0;
        for (double v : s) dev = std::max(dev, std::abs(v - mean) / mean);
        return dev;
    }
};

// Local maxima of a sampled density above `threshold` x global max. Positions
// are refined by a parabola through the three samples around each maximum.
// Each peak's variance uses the window |x - x_peak| < (median spacing)/2, i.e.
// the half-way points to its neighbours; a lone peak uses the whole grid.
inline PeakAnalysis peak_analysis(const std::vector<double>& xs, const std::vector<double>& density,
                                  double threshold = 0.1) {
    if (xs.size() != density.size() || xs.size() < 3) throw InvalidArgument("peak_analysis needs matching grids of >= 3 points");
    const double gmax = *std::max_element(density.begin(), density.end());
    if (!(gmax > 0.0)) throw NoPeakFound("density is identically zero");
    const double h = xs[1] - xs[0];

    PeakAnalysis out;
    for (std::size_t i = 1; i + 1 < density.size(); ++i) {
        if (density[i] > density[i - 1] && density[i] >= density[i + 1] && density[i] >= threshold * gmax) {
            const double a = density[i - 1], b = density[i], c = density[i + 1];
            const double denom = a - 2.0 * b + c;
            const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
            out.peaks.push_back({xs[i] + shift * h, b, 0.0});
        }
    }
    if (out.peaks.empty()) throw NoPeakFound("no local maximum above threshold");

    double half = std::numeric_limits<double>::infinity();
    if (out.peaks.size() > 1) {
        std::vector<double> s;
        for (std::size_t i = 1; i < out.peaks.size(); ++i) s.push_back(out.peaks[i].position - out.peaks[i - 1].position);
        std::sort(s.begin(), s.end());
        const double median = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
        half = 0.5 * median;
    }
    out.window_half_width = half;

    for (auto& pk : out.peaks) {
        double w0 = 0.0, w1 = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::abs(xs[i] - pk.position) < half) {
                w0 += density[i];
                w1 += density[i] * xs[i];
            }
        const double mu = w1 / w0;
        double w2 = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::abs(xs[i] - pk.position) < half) w2 += density[i] * (xs[i] - mu) * (xs[i] - mu);
        pk.variance = w2 / w0;
    }
    for (std::size_t i = 1; i < out.peaks.size(); ++i)
        if (std::abs(out.peaks[i].position) < std::abs(out.peaks[out.central].position)) out.central = i;
    return out;
}

}  // namespace loopsim
