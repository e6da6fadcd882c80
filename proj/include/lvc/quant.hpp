#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lvc/common.hpp"

namespace lvc {

// Uniform quantization grid. Symmetric grids span [-(2^(w-1)-1), 2^(w-1)-1]
// around zero; asymmetric grids span [0, 2^w - 1] shifted by zero_offset.
struct QuantGrid {
    double step = 1.0;
    int zero_offset = 0;
    int bit_width = 8;
    bool symmetric = true;

    int level_min() const { return symmetric ? -(1 << (bit_width - 1)) + 1 : 0; }
    int level_max() const {
        return symmetric ? (1 << (bit_width - 1)) - 1 : (1 << bit_width) - 1;
    }

    int quantize(double v) const {
        check();
        long lvl = lround_half_away(v / step) + zero_offset;
        return int(std::clamp(lvl, long(level_min()), long(level_max())));
    }

    double dequantize(int level) const {
        check();
        if (level < level_min() || level > level_max())
            fail("quantizer", "level " + std::to_string(level) + " outside [" +
                                  std::to_string(level_min()) + ", " +
                                  std::to_string(level_max()) + "]");
        return (level - zero_offset) * step;
    }

    // quantize followed by dequantize, without the range check on the way out.
    double snap(double v) const { return (quantize(v) - zero_offset) * step; }

    std::vector<int> quantize(std::span<const double> values) const {
        std::vector<int> out(values.size());
        for (size_t i = 0; i < values.size(); ++i) out[i] = quantize(values[i]);
        return out;
    }

    std::vector<double> dequantize(std::span<const int> levels) const {
        std::vector<double> out(levels.size());
        for (size_t i = 0; i < levels.size(); ++i) out[i] = dequantize(levels[i]);
        return out;
    }

private:
    void check() const {
        if (!(step > 0)) fail("quantizer", "step must be > 0");
        if (bit_width != 8 && bit_width != 16) fail("quantizer", "bit width must be 8 or 16");
    }
};

namespace detail {

inline double grid_mse(std::span<const double> samples, const QuantGrid& g) {
    double acc = 0.0;
    for (double v : samples) {
        double e = v - g.snap(v);
        acc += e * e;
    }
    return acc / double(samples.size());
}

// 64 geometric scale candidates over [0.5, 1.2]; the point nearest 1.0 is
// snapped to exactly 1.0 so grids that already fit the data are reproduced
// with zero error.
inline double sweep_scale(int i) {
    constexpr int exact_index = 50;  // round(63 * ln 2 / ln 2.4)
    if (i == exact_index) return 1.0;
    return 0.5 * std::pow(1.2 / 0.5, double(i) / 63.0);
}

}  // namespace detail

// Fits step (and zero offset for asymmetric grids) by sweeping candidate
// scales and keeping the first grid with minimal mean squared error.
inline QuantGrid fit_grid_mse(std::span<const double> samples, int bit_width, bool symmetric) {
    if (samples.empty()) fail("quantizer", "cannot fit a grid to an empty sample set");
    if (bit_width != 8 && bit_width != 16) fail("quantizer", "bit width must be 8 or 16");

    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double max_abs = std::max(std::fabs(lo), std::fabs(hi));

    if (symmetric) {
        if (max_abs == 0.0) return {1.0, 0, bit_width, true};
        const double qmax = double((1 << (bit_width - 1)) - 1);
        QuantGrid best;
        double best_mse = 0.0;
        bool have = false;
        for (int i = 0; i < 64; ++i) {
            const double s = detail::sweep_scale(i);
            QuantGrid g{max_abs * s / qmax, 0, bit_width, true};
            double mse = detail::grid_mse(samples, g);
            if (!have || mse < best_mse) {
                best = g;
                best_mse = mse;
                have = true;
            }
        }
        return best;
    }

    const int top_level = (1 << bit_width) - 1;
    if (hi == lo) {
        // Single repeated value: one level reproduces it exactly.
        if (lo == 0.0) return {1.0, 0, bit_width, false};
        double step = std::fabs(lo);
        int zo = int(std::clamp(lround_half_away(-lo / step), 0L, long(top_level)));
        return {step, zo, bit_width, false};
    }

    QuantGrid best;
    double best_mse = 0.0;
    bool have = false;
    for (int i = 0; i < 64; ++i) {
        const double s = detail::sweep_scale(i);
        const double step = (hi - lo) * s / double(top_level);
        const int zo = int(std::clamp(lround_half_away(-lo / step), 0L, long(top_level)));
        QuantGrid g{step, zo, bit_width, false};
        double mse = detail::grid_mse(samples, g);
        if (!have || mse < best_mse) {
            best = g;
            best_mse = mse;
            have = true;
        }
    }
    return best;
}

// Symmetric per-channel grids, one fit per channel.
inline std::vector<QuantGrid> fit_per_channel(const std::vector<std::vector<double>>& channels,
                                              int bit_width) {
    std::vector<QuantGrid> grids;
    grids.reserve(channels.size());
    for (const auto& ch : channels) grids.push_back(fit_grid_mse(ch, bit_width, true));
    return grids;
}

}  // namespace lvc
