// Independent reference implementations used as test oracles. These are the
// plainest possible transcriptions of the operation definitions (straight
// triple loops, no shared code with the library's warp/search kernels) and
// must stay that way.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "lvc/frame.hpp"
#include "lvc/warp.hpp"

namespace oracle {

inline double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Bilinear fetch with edge clamping, written out longhand.
inline double fetch(const lvc::Plane& p, double row, double col) {
    row = clampd(row, 0.0, double(p.height - 1));
    col = clampd(col, 0.0, double(p.width - 1));
    const int r0 = int(std::floor(row));
    const int c0 = int(std::floor(col));
    const int r1 = r0 + 1 > p.height - 1 ? p.height - 1 : r0 + 1;
    const int c1 = c0 + 1 > p.width - 1 ? p.width - 1 : c0 + 1;
    const double fr = row - r0;
    const double fc = col - c0;
    return (1.0 - fr) * (1.0 - fc) * p.at(r0, c0) + (1.0 - fr) * fc * p.at(r0, c1) +
           fr * (1.0 - fc) * p.at(r1, c0) + fr * fc * p.at(r1, c1);
}

inline uint8_t to_u8(double v) {
    const long r = std::lround(v);
    return uint8_t(r < 0 ? 0 : (r > 255 ? 255 : r));
}

inline lvc::Frame420 dense_warp(const lvc::Frame420& f, const lvc::DenseFlow& flow) {
    lvc::Frame420 out(f.width, f.height);
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j)
            out.y.at(i, j) = to_u8(fetch(f.y, i + flow.fy(i, j), j + flow.fx(i, j)));
    for (int i = 0; i < f.height / 2; ++i)
        for (int j = 0; j < f.width / 2; ++j) {
            out.u.at(i, j) =
                to_u8(fetch(f.u, i + flow.fy(2 * i, 2 * j) / 2.0, j + flow.fx(2 * i, 2 * j) / 2.0));
            out.v.at(i, j) =
                to_u8(fetch(f.v, i + flow.fy(2 * i, 2 * j) / 2.0, j + flow.fx(2 * i, 2 * j) / 2.0));
        }
    return out;
}

inline lvc::Frame420 block_warp(const lvc::Frame420& f, const lvc::FlowField& flow) {
    const int b = flow.block_size;
    lvc::Frame420 out(f.width, f.height);
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j) {
            const lvc::MotionVec m = flow.at(i / b, j / b);
            out.y.at(i, j) = to_u8(fetch(f.y, i + m.y / 4.0, j + m.x / 4.0));
        }
    const int bc = b / 2;
    for (int i = 0; i < f.height / 2; ++i)
        for (int j = 0; j < f.width / 2; ++j) {
            const lvc::MotionVec m = flow.at(i / bc, j / bc);
            out.u.at(i, j) = to_u8(fetch(f.u, i + m.y / 8.0, j + m.x / 8.0));
            out.v.at(i, j) = to_u8(fetch(f.v, i + m.y / 8.0, j + m.x / 8.0));
        }
    return out;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline lvc::Frame420 overlap_block_warp(const lvc::Frame420& f, const lvc::FlowField& flow,
                                        const lvc::OverlapKernel& kernel) {
    static const int offs[9][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0},
                                   {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    const int b = flow.block_size;
    lvc::Frame420 out(f.width, f.height);
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 9; ++k) {
                const int by = clampi(i / b + offs[k][0], 0, flow.blocks_y - 1);
                const int bx = clampi(j / b + offs[k][1], 0, flow.blocks_x - 1);
                const lvc::MotionVec m = flow.at(by, bx);
                acc += kernel.weight(i % b, j % b, k) * fetch(f.y, i + m.y / 4.0, j + m.x / 4.0);
            }
            out.y.at(i, j) = to_u8(acc);
        }
    const int bc = b / 2;
    for (int i = 0; i < f.height / 2; ++i)
        for (int j = 0; j < f.width / 2; ++j) {
            double au = 0.0, av = 0.0;
            for (int k = 0; k < 9; ++k) {
                const int by = clampi(i / bc + offs[k][0], 0, flow.blocks_y - 1);
                const int bx = clampi(j / bc + offs[k][1], 0, flow.blocks_x - 1);
                const lvc::MotionVec m = flow.at(by, bx);
                const double w = kernel.chroma_weight(i % bc, j % bc, k);
                au += w * fetch(f.u, i + m.y / 8.0, j + m.x / 8.0);
                av += w * fetch(f.v, i + m.y / 8.0, j + m.x / 8.0);
            }
            out.u.at(i, j) = to_u8(au);
            out.v.at(i, j) = to_u8(av);
        }
    return out;
}

// Exhaustive integer-pel SAD minimum over the Y plane of one block, ranked by
// (SAD, |v|^2, vy, vx). Returned in quarter-pel units.
inline lvc::MotionVec exhaustive_block_search(const lvc::Plane& ref, const lvc::Plane& tgt,
                                              int r0, int r1, int c0, int c1, int range) {
    long best_sad = -1;
    int best_dx = 0, best_dy = 0;
    for (int dy = -range; dy <= range; ++dy)
        for (int dx = -range; dx <= range; ++dx) {
            long sad = 0;
            for (int i = r0; i < r1; ++i)
                for (int j = c0; j < c1; ++j) {
                    const int si = clampi(i + dy, 0, ref.height - 1);
                    const int sj = clampi(j + dx, 0, ref.width - 1);
                    sad += std::labs(long(tgt.at(i, j)) - long(ref.at(si, sj)));
                }
            bool better = false;
            if (best_sad < 0 || sad < best_sad)
                better = true;
            else if (sad == best_sad) {
                const long cn = long(dx) * dx + long(dy) * dy;
                const long bn = long(best_dx) * best_dx + long(best_dy) * best_dy;
                if (cn < bn || (cn == bn && (dy < best_dy || (dy == best_dy && dx < best_dx))))
                    better = true;
            }
            if (better) {
                best_sad = sad;
                best_dx = dx;
                best_dy = dy;
            }
        }
    return {int16_t(4 * best_dx), int16_t(4 * best_dy)};
}

// Trapezoidal integral of a cubic polynomial in (x - center), for checking
// the closed-form BD-rate integration.
inline double trapezoid_integral(const std::array<double, 4>& coef, double center, double lo,
                                 double hi, int samples) {
    auto eval = [&](double x) {
        const double t = x - center;
        return coef[0] + t * (coef[1] + t * (coef[2] + t * coef[3]));
    };
    double acc = 0.0;
    const double h = (hi - lo) / samples;
    for (int k = 0; k < samples; ++k) {
        const double a = lo + k * h;
        acc += 0.5 * (eval(a) + eval(a + h)) * h;
    }
    return acc;
}

}  // namespace oracle
