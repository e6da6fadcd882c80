#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lvc/frame.hpp"
#include "lvc/warp.hpp"

namespace lvc {

// Identical inputs report this sentinel instead of a finite dB value.
constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();

inline double psnr_from_mse(double mse) {
    if (mse <= 0.0) return kLosslessPsnr;
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline double mse_plane(const Plane& a, const Plane& b) {
    if (!a.same_size(b)) fail("metrics", "plane dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        const double e = double(a.samples[i]) - double(b.samples[i]);
        acc += e * e;
    }
    return acc / double(a.samples.size());
}

inline double psnr_plane(const Plane& a, const Plane& b) { return psnr_from_mse(mse_plane(a, b)); }

struct Yuv611 {
    double mse = 0.0;
    double psnr = 0.0;
};

// D = (6 MSE_Y + MSE_U + MSE_V) / 8, the evaluation weighting for 4:2:0.
inline Yuv611 distortion_yuv611(const Frame420& a, const Frame420& b) {
    if (!a.same_size(b)) fail("metrics", "frame dimension mismatch");
    const double d =
        (6.0 * mse_plane(a.y, b.y) + mse_plane(a.u, b.u) + mse_plane(a.v, b.v)) / 8.0;
    return {d, psnr_from_mse(d)};
}

// Exponentially modulated distortion: (T / sum tau^i) * sum tau^i D_i.
inline double distortion_modulated(std::span<const double> distortions, double tau) {
    if (distortions.empty()) fail("metrics", "modulated distortion needs at least one frame");
    if (!(tau > 0.0)) fail("metrics", "tau must be > 0");
    double weight_sum = 0.0, acc = 0.0, w = 1.0;
    for (double d : distortions) {
        weight_sum += w;
        acc += w * d;
        w *= tau;
    }
    return double(distortions.size()) / weight_sum * acc;
}

// Diagnostic flow quality: distortion between the warped previous
// reconstruction and the target frame.
inline double distortion_flow(const FlowField& flow, const Frame420& previous_reconstruction,
                              const Frame420& target, const OverlapKernel& kernel) {
    if (!previous_reconstruction.same_size(target)) fail("metrics", "frame dimension mismatch");
    return distortion_yuv611(overlap_block_warp(previous_reconstruction, flow, kernel), target)
        .mse;
}

struct RDPoint {
    std::string label;
    double bpp = 0.0;
    double psnr_y = 0.0;
    double psnr_u = 0.0;
    double psnr_v = 0.0;
    double psnr_yuv611 = 0.0;
};

struct BdOptions {
    // When set, points whose bitrate exceeds this many Mb/s are discarded;
    // fps, width and height are required to convert bpp.
    std::optional<double> max_mbps;
    double fps = 0.0;
    int width = 0;
    int height = 0;
};

namespace detail {

// Least-squares cubic of log10(rate) as a function of PSNR. PSNR values are
// centered before fitting to keep the normal equations well conditioned.
struct RateCurveFit {
    double center = 0.0;
    std::array<double, 4> coef{};  // log10(bpp) ~= sum coef[k] * (psnr - center)^k

    double integral(double lo, double hi) const {
        auto anti = [&](double x) {
            const double t = x - center;
            double acc = 0.0, p = t;
            for (int k = 0; k < 4; ++k) {
                acc += coef[size_t(k)] * p / double(k + 1);
                p *= t;
            }
            return acc;
        };
        return anti(hi) - anti(lo);
    }
};

inline RateCurveFit fit_log_rate(const std::vector<RDPoint>& pts) {
    RateCurveFit fit;
    for (const RDPoint& p : pts) fit.center += p.psnr_yuv611;
    fit.center /= double(pts.size());

    std::array<double, 7> mx{};  // sums of x^0 .. x^6
    std::array<double, 4> mxy{};
    for (const RDPoint& p : pts) {
        if (!(p.bpp > 0.0)) fail("metrics", "BD-rate needs strictly positive bitrates");
        if (!std::isfinite(p.psnr_yuv611))
            fail("metrics", "BD-rate cannot use lossless rate-distortion points");
        const double x = p.psnr_yuv611 - fit.center;
        const double y = std::log10(p.bpp);
        double xp = 1.0;
        for (int k = 0; k <= 6; ++k) {
            mx[size_t(k)] += xp;
            if (k <= 3) mxy[size_t(k)] += xp * y;
            xp *= x;
        }
    }

    // Solve the 4x4 normal equations with partial pivoting.
    double a[4][5];
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) a[r][c] = mx[size_t(r + c)];
        a[r][4] = mxy[size_t(r)];
    }
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-12)
            fail("metrics", "degenerate rate-distortion curve (duplicate PSNR values?)");
        if (pivot != col)
            for (int c = 0; c <= 4; ++c) std::swap(a[pivot][c], a[col][c]);
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c <= 4; ++c) a[r][c] -= f * a[col][c];
        }
    }
    for (int k = 0; k < 4; ++k) fit.coef[size_t(k)] = a[k][4] / a[k][k];
    return fit;
}

inline void filter_rate_cap(std::vector<RDPoint>& pts, const BdOptions& opt) {
    if (!opt.max_mbps) return;
    if (!(opt.fps > 0.0) || opt.width <= 0 || opt.height <= 0)
        fail("metrics", "rate filtering needs fps and frame dimensions to convert bpp");
    std::erase_if(pts, [&](const RDPoint& p) {
        const double mbps = p.bpp * double(opt.width) * double(opt.height) * opt.fps / 1e6;
        return mbps > *opt.max_mbps;
    });
}

inline void filter_overlap(std::vector<RDPoint>& a, const std::vector<RDPoint>& b) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const RDPoint& p : b) {
        lo = std::min(lo, p.psnr_yuv611);
        hi = std::max(hi, p.psnr_yuv611);
    }
    std::erase_if(a, [&](const RDPoint& p) { return p.psnr_yuv611 < lo || p.psnr_yuv611 > hi; });
}

}  // namespace detail

// Bjontegaard delta-rate of `test` against `reference`, in percent. Positive
// means the test curve spends more bits at equal quality.
inline double bd_rate(std::vector<RDPoint> reference, std::vector<RDPoint> test,
                      const BdOptions& options = {}) {
    detail::filter_rate_cap(reference, options);
    detail::filter_rate_cap(test, options);
    if (reference.empty() || test.empty())
        fail("metrics", "a curve lost every point to the rate filter");

    auto span_of = [](const std::vector<RDPoint>& pts) {
        double lo = pts[0].psnr_yuv611, hi = pts[0].psnr_yuv611;
        for (const RDPoint& p : pts) {
            lo = std::min(lo, p.psnr_yuv611);
            hi = std::max(hi, p.psnr_yuv611);
        }
        return std::pair<double, double>(lo, hi);
    };
    {
        const auto [rlo, rhi] = span_of(reference);
        const auto [tlo, thi] = span_of(test);
        if (!(std::min(rhi, thi) > std::max(rlo, tlo)))
            fail("metrics", "rate-distortion curves have no overlapping PSNR range");
    }

    const std::vector<RDPoint> ref_before = reference;
    detail::filter_overlap(reference, test);
    detail::filter_overlap(test, ref_before);

    if (reference.size() < 4 || test.size() < 4)
        fail("metrics", "BD-rate needs at least 4 points per curve after filtering (have " +
                            std::to_string(reference.size()) + " and " +
                            std::to_string(test.size()) + ")");

    const auto [rlo, rhi] = span_of(reference);
    const auto [tlo, thi] = span_of(test);
    const double lo = std::max(rlo, tlo);
    const double hi = std::min(rhi, thi);
    if (!(hi > lo)) fail("metrics", "rate-distortion curves have no overlapping PSNR range");

    const detail::RateCurveFit fr = detail::fit_log_rate(reference);
    const detail::RateCurveFit ft = detail::fit_log_rate(test);
    const double avg_diff = (ft.integral(lo, hi) - fr.integral(lo, hi)) / (hi - lo);
    return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

// ---- RD point CSV (label,bpp,psnr_y,psnr_u,psnr_v,psnr_yuv611) ----

inline std::string format_psnr(double v) {
    if (!std::isfinite(v)) return "lossless";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string rd_csv_header() { return "label,bpp,psnr_y,psnr_u,psnr_v,psnr_yuv611"; }

inline std::string to_csv_row(const RDPoint& p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.8f,%s,%s,%s,%s", p.label.c_str(), p.bpp,
                  format_psnr(p.psnr_y).c_str(), format_psnr(p.psnr_u).c_str(),
                  format_psnr(p.psnr_v).c_str(), format_psnr(p.psnr_yuv611).c_str());
    return buf;
}

inline std::vector<RDPoint> parse_rd_csv(const std::string& text) {
    std::vector<RDPoint> pts;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> fields;
        size_t f = 0;
        while (true) {
            size_t comma = line.find(',', f);
            fields.push_back(line.substr(f, comma == std::string::npos ? comma : comma - f));
            if (comma == std::string::npos) break;
            f = comma + 1;
        }
        if (fields.size() != 6)
            fail("metrics", "RD CSV row needs 6 fields, got " + std::to_string(fields.size()) +
                                ": '" + line + "'");
        if (fields[1] == "bpp") continue;  // header row

        auto value = [&](const std::string& s) {
            if (s == "lossless") return kLosslessPsnr;
            try {
                size_t used = 0;
                double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                fail("metrics", "bad numeric field '" + s + "' in RD CSV");
            }
        };
        RDPoint p;
        p.label = fields[0];
        p.bpp = value(fields[1]);
        p.psnr_y = value(fields[2]);
        p.psnr_u = value(fields[3]);
        p.psnr_v = value(fields[4]);
        p.psnr_yuv611 = value(fields[5]);
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace lvc
