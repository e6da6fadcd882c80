#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lvc/quant.hpp"

namespace lvc {

// Transmitted symbols are int8; the model's alphabet is [-127, 127] with
// Gaussian tail mass folded into the extremes.
constexpr int kSymbolMin = -127;
constexpr int kSymbolMax = 127;
constexpr int kAlphabet = kSymbolMax - kSymbolMin + 1;

enum class LatentMode : uint8_t {
    step_1 = 0,      // latent/mean grid step 1
    step_fifth = 1,  // step 1/5
    step_third = 2,  // step 1/3
    exact16 = 3,     // 16-bit mode: latents and means pass through unquantized
};

inline double latent_step(LatentMode m) {
    switch (m) {
        case LatentMode::step_1: return 1.0;
        case LatentMode::step_fifth: return 1.0 / 5.0;
        case LatentMode::step_third: return 1.0 / 3.0;
        case LatentMode::exact16: return 0.0;
    }
    fail("entropy_bottleneck", "unknown latent mode");
}

// Mean-scale bottleneck configuration: a shared sub-integer grid for latents
// and means, an integer symbol grid, an 8-bit pre-scale grid over (0, 1], and
// the exponential scale transform.
struct Bottleneck {
    LatentMode mode = LatentMode::step_fifth;
    QuantGrid latent_grid{1.0 / 5.0, 0, 16, true};
    QuantGrid symbol_grid{1.0, 0, 8, true};
    // Levels 0..255 map to rho = (level + 1) / 256, covering (0, 1].
    QuantGrid prescale_grid{1.0 / 256.0, -1, 8, false};
    double sigma_min = 1.0 / 16.0;
    double sigma_max = 256.0;

    static Bottleneck make(LatentMode m) {
        Bottleneck b;
        b.mode = m;
        if (m != LatentMode::exact16) b.latent_grid.step = latent_step(m);
        return b;
    }

    double snap_latent(double v) const {
        return mode == LatentMode::exact16 ? v : latent_grid.snap(v);
    }

    // sigma = sigma_min * (sigma_max / sigma_min)^rho, strictly increasing.
    double scale_transform(double rho) const {
        if (!(rho > 0.0) || rho > 1.0)
            fail("entropy_bottleneck", "pre-scale rho must lie in (0, 1]");
        return sigma_min * std::pow(sigma_max / sigma_min, rho);
    }

    double rho_of_level(int level) const { return prescale_grid.dequantize(level); }
    double sigma_of_level(int level) const { return scale_transform(rho_of_level(level)); }

    // Nearest transmittable pre-scale level for an estimated sigma.
    int level_for_sigma(double sigma) const {
        if (!(sigma > sigma_min)) return 0;
        if (sigma >= sigma_max) return prescale_grid.level_max();
        const double rho = std::log(sigma / sigma_min) / std::log(sigma_max / sigma_min);
        return prescale_grid.quantize(rho);
    }
};

struct Symbols {
    std::vector<int8_t> s;       // quantized symbols, int8 alphabet
    std::vector<double> y_hat;   // receiver-side latent reconstruction
};

// Fig. 3 forward path: snap latents and means to the shared grid, subtract,
// round to the integer symbol grid, clamp to the alphabet; the receiver adds
// the snapped mean back.
inline Symbols form_symbols(std::span<const double> y, std::span<const double> mu,
                            const Bottleneck& b) {
    if (y.size() != mu.size())
        fail("entropy_bottleneck", "latents and means differ in shape (" +
                                       std::to_string(y.size()) + " vs " +
                                       std::to_string(mu.size()) + ")");
    Symbols out;
    out.s.resize(y.size());
    out.y_hat.resize(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        const double qy = b.snap_latent(y[i]);
        const double qmu = b.snap_latent(mu[i]);
        const long s = std::clamp(lround_half_away(qy - qmu), long(kSymbolMin), long(kSymbolMax));
        out.s[i] = int8_t(s);
        out.y_hat[i] = double(s) + qmu;
    }
    return out;
}

// Cumulative frequency tables for the coder: one row per quantized pre-scale
// level, each summing to exactly 2^16 with no zero-frequency symbol.
struct SymbolModel {
    static constexpr uint32_t kTotal = 1u << 16;

    std::vector<std::array<uint32_t, kAlphabet>> freq;
    std::vector<std::array<uint32_t, kAlphabet + 1>> cum;
    std::vector<double> sigma;  // per level; empty for models built from raw tables

    int levels() const { return int(freq.size()); }

    uint32_t frequency(int level, int symbol) const {
        return freq[size_t(level)][size_t(symbol - kSymbolMin)];
    }
    uint32_t cumulative(int level, int symbol) const {
        return cum[size_t(level)][size_t(symbol - kSymbolMin)];
    }

    static SymbolModel from_frequencies(std::vector<std::array<uint32_t, kAlphabet>> tables) {
        SymbolModel m;
        m.freq = std::move(tables);
        m.rebuild_cumulative();
        return m;
    }

    void rebuild_cumulative() {
        cum.resize(freq.size());
        for (size_t lv = 0; lv < freq.size(); ++lv) {
            uint64_t acc = 0;
            for (int i = 0; i < kAlphabet; ++i) {
                if (freq[lv][size_t(i)] == 0)
                    fail("entropy_bottleneck", "zero-frequency symbol in model table");
                cum[lv][size_t(i)] = uint32_t(acc);
                acc += freq[lv][size_t(i)];
            }
            cum[lv][kAlphabet] = uint32_t(acc);
            if (acc != kTotal)
                fail("entropy_bottleneck", "model table sums to " + std::to_string(acc) +
                                               ", expected " + std::to_string(kTotal));
        }
    }
};

namespace detail {

inline double gaussian_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Upper-tail mass of |N(0, sigma)| beyond t, computed with erfc so large
// arguments do not cancel.
inline double gaussian_tail(double t, double sigma) {
    return 0.5 * std::erfc(t / sigma * M_SQRT1_2);
}

}  // namespace detail

// Discretized zero-centered Gaussians, p(s) = CDF(s+1/2) - CDF(s-1/2) with
// tails folded into +-127. Fixed-point conversion rounds the positive half
// and lets the center frequency absorb the residue, keeping the table
// symmetric and its sum exactly 2^16.
inline SymbolModel build_symbol_model(const Bottleneck& b) {
    SymbolModel m;
    const int levels = b.prescale_grid.level_max() + 1;
    m.freq.resize(size_t(levels));
    m.sigma.resize(size_t(levels));
    for (int lv = 0; lv < levels; ++lv) {
        const double sigma = b.sigma_of_level(lv);
        m.sigma[size_t(lv)] = sigma;
        std::array<uint32_t, kAlphabet>& f = m.freq[size_t(lv)];

        uint64_t half_sum = 0;
        for (int s = 1; s <= kSymbolMax; ++s) {
            const double p = s == kSymbolMax
                                 ? detail::gaussian_tail(s - 0.5, sigma)
                                 : detail::gaussian_tail(s - 0.5, sigma) -
                                       detail::gaussian_tail(s + 0.5, sigma);
            uint32_t q = uint32_t(std::max(1L, lround_half_away(p * double(SymbolModel::kTotal))));
            f[size_t(s - kSymbolMin)] = q;
            half_sum += q;
        }
        long center = long(SymbolModel::kTotal) - 2 * long(half_sum);
        if (center < 1) {
            // Flat distributions can over-round; shave the largest side entry.
            int widest = 1;
            for (int s = 2; s <= kSymbolMax; ++s)
                if (f[size_t(s - kSymbolMin)] > f[size_t(widest - kSymbolMin)]) widest = s;
            const long take = (1 - center + 1) / 2;
            f[size_t(widest - kSymbolMin)] -= uint32_t(take);
            center += 2 * take;
        }
        f[size_t(-kSymbolMin)] = uint32_t(center);
        for (int s = 1; s <= kSymbolMax; ++s)
            f[size_t(-s - kSymbolMin)] = f[size_t(s - kSymbolMin)];
    }
    m.rebuild_cumulative();
    return m;
}

// Ideal code length in bits under the fixed-point model.
inline double rate_estimate(std::span<const int8_t> symbols, std::span<const uint8_t> rho_levels,
                            const SymbolModel& m) {
    if (symbols.size() != rho_levels.size())
        fail("entropy_bottleneck", "symbol and rho-level counts differ");
    double bits = 0.0;
    for (size_t i = 0; i < symbols.size(); ++i) {
        if (int(rho_levels[i]) >= m.levels())
            fail("entropy_bottleneck", "rho level outside the model");
        bits += 16.0 - std::log2(double(m.frequency(rho_levels[i], symbols[i])));
    }
    return bits;
}

// Training-style proxy rate: additive uniform noise u ~ U[-1/2, 1/2] instead
// of rounding, evaluated against the continuous Gaussian. Seed 0 disables the
// noise and yields the continuous-relaxation rate of the symbols as given.
inline double rate_proxy_noise(std::span<const double> symbols,
                               std::span<const uint8_t> rho_levels, const SymbolModel& m,
                               uint64_t seed) {
    if (symbols.size() != rho_levels.size())
        fail("entropy_bottleneck", "symbol and rho-level counts differ");
    if (m.sigma.empty())
        fail("entropy_bottleneck", "model carries no scale information for the noise proxy");

    // splitmix64 keeps the draw sequence independent of the standard library.
    uint64_t state = seed;
    auto next_uniform = [&state]() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        z ^= z >> 31;
        return double(z >> 11) * 0x1.0p-53 - 0.5;
    };

    double bits = 0.0;
    for (size_t i = 0; i < symbols.size(); ++i) {
        if (int(rho_levels[i]) >= m.levels())
            fail("entropy_bottleneck", "rho level outside the model");
        const double sigma = m.sigma[rho_levels[i]];
        const double u = seed == 0 ? 0.0 : next_uniform();
        const double s = symbols[i] + u;
        double a = s - 0.5, b = s + 0.5;
        if (a + b < 0.0) {
            const double t = a;
            a = -b;
            b = -t;
        }
        const double p = detail::gaussian_tail(a, sigma) - detail::gaussian_tail(b, sigma);
        bits -= std::log2(std::max(p, 1e-300));
    }
    return bits;
}

}  // namespace lvc
