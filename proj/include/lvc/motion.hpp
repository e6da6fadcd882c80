#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lvc/warp.hpp"

namespace lvc {

enum class SearchMethod : uint8_t { exhaustive = 0, diamond = 1 };

namespace detail {

// Candidate ranking: lowest SAD wins; ties fall to the shortest vector, then
// the numerically smallest y component, then x. This total order makes the
// search result independent of enumeration order.
struct SearchBest {
    double sad = 0.0;
    int vx = 0, vy = 0;  // quarter-pel units
    bool valid = false;

    bool accept(double cand_sad, int cx, int cy) {
        if (!valid) return true;
        if (cand_sad != sad) return cand_sad < sad;
        const long cn = long(cx) * cx + long(cy) * cy;
        const long bn = long(vx) * vx + long(vy) * vy;
        if (cn != bn) return cn < bn;
        if (cy != vy) return cy < vy;
        return cx < vx;
    }

    void consider(double cand_sad, int cx, int cy) {
        if (accept(cand_sad, cx, cy)) {
            sad = cand_sad;
            vx = cx;
            vy = cy;
            valid = true;
        }
    }
};

inline int clamp_coord(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

// Integer-pel SAD with edge replication, early exit once `bail` is exceeded.
inline double sad_integer(const Plane& ref, const Plane& tgt, int r0, int r1, int c0, int c1,
                          int dy, int dx, double bail) {
    long acc = 0;
    for (int i = r0; i < r1; ++i) {
        const int si = clamp_coord(i + dy, ref.height - 1);
        for (int j = c0; j < c1; ++j) {
            const int sj = clamp_coord(j + dx, ref.width - 1);
            acc += std::abs(int(tgt.at(i, j)) - int(ref.at(si, sj)));
        }
        if (double(acc) > bail) return double(acc);
    }
    return double(acc);
}

inline double sad_quarter_pel(const Plane& ref, const Plane& tgt, int r0, int r1, int c0, int c1,
                              int vx, int vy) {
    if (vx % 4 == 0 && vy % 4 == 0)
        return sad_integer(ref, tgt, r0, r1, c0, c1, vy / 4, vx / 4, 1e300);
    double acc = 0.0;
    for (int i = r0; i < r1; ++i)
        for (int j = c0; j < c1; ++j)
            acc += std::fabs(double(tgt.at(i, j)) - sample_bilinear(ref, i + vy / 4.0, j + vx / 4.0));
    return acc;
}

inline SearchBest exhaustive_integer_search(const Plane& ref, const Plane& tgt, int r0, int r1,
                                            int c0, int c1, int range) {
    SearchBest best;
    for (int dy = -range; dy <= range; ++dy)
        for (int dx = -range; dx <= range; ++dx) {
            const double bail = best.valid ? best.sad : 1e300;
            const double sad = sad_integer(ref, tgt, r0, r1, c0, c1, dy, dx, bail);
            best.consider(sad, 4 * dx, 4 * dy);
        }
    return best;
}

inline SearchBest diamond_integer_search(const Plane& ref, const Plane& tgt, int r0, int r1,
                                         int c0, int c1, int range) {
    static constexpr std::array<std::array<int, 2>, 8> large = {
        {{-2, 0}, {-1, -1}, {-1, 1}, {0, -2}, {0, 2}, {1, -1}, {1, 1}, {2, 0}}};
    static constexpr std::array<std::array<int, 2>, 4> small = {
        {{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

    SearchBest best;
    best.consider(sad_integer(ref, tgt, r0, r1, c0, c1, 0, 0, 1e300), 0, 0);
    for (int iter = 0; iter < 4 * range + 4; ++iter) {
        const int cy = best.vy / 4, cx = best.vx / 4;
        SearchBest round = best;
        for (const auto& d : large) {
            const int dy = cy + d[0], dx = cx + d[1];
            if (std::abs(dy) > range || std::abs(dx) > range) continue;
            round.consider(sad_integer(ref, tgt, r0, r1, c0, c1, dy, dx, round.sad), 4 * dx,
                           4 * dy);
        }
        if (round.vx == best.vx && round.vy == best.vy) break;
        best = round;
    }
    const int cy = best.vy / 4, cx = best.vx / 4;
    for (const auto& d : small) {
        const int dy = cy + d[0], dx = cx + d[1];
        if (std::abs(dy) > range || std::abs(dx) > range) continue;
        best.consider(sad_integer(ref, tgt, r0, r1, c0, c1, dy, dx, best.sad), 4 * dx, 4 * dy);
    }
    return best;
}

// Local quarter-pel descent: a half-pel pass then a quarter-pel pass around
// the integer optimum, evaluated with bilinear interpolation.
inline SearchBest refine_quarter_pel(const Plane& ref, const Plane& tgt, int r0, int r1, int c0,
                                     int c1, SearchBest best) {
    for (int step : {2, 1}) {
        SearchBest round = best;
        for (int ddy = -1; ddy <= 1; ++ddy)
            for (int ddx = -1; ddx <= 1; ++ddx) {
                if (ddy == 0 && ddx == 0) continue;
                const int vx = best.vx + ddx * step;
                const int vy = best.vy + ddy * step;
                if (vx < kFlowFixedMin || vx > kFlowFixedMax || vy < kFlowFixedMin ||
                    vy > kFlowFixedMax)
                    continue;
                round.consider(sad_quarter_pel(ref, tgt, r0, r1, c0, c1, vx, vy), vx, vy);
            }
        best = round;
    }
    return best;
}

}  // namespace detail

// Per-block motion search on the Y plane: integer-pel minimum over the
// (2R+1)^2 window, then quarter-pel refinement.
inline FlowField estimate_flow(const Frame420& reference, const Frame420& target, int block_size,
                               int search_range, SearchMethod method = SearchMethod::exhaustive) {
    if (!reference.same_size(target))
        fail("motion", "reference and target frame sizes differ");
    if (search_range < 0 || search_range > 31)
        fail("motion", "search range " + std::to_string(search_range) +
                           " exceeds the representable flow range (max 31)");

    FlowField flow = FlowField::sized_for(target.width, target.height, block_size);
    for (int by = 0; by < flow.blocks_y; ++by)
        for (int bx = 0; bx < flow.blocks_x; ++bx) {
            const int r0 = by * block_size;
            const int c0 = bx * block_size;
            const int r1 = std::min(r0 + block_size, target.height);
            const int c1 = std::min(c0 + block_size, target.width);
            detail::SearchBest best =
                method == SearchMethod::exhaustive
                    ? detail::exhaustive_integer_search(reference.y, target.y, r0, r1, c0, c1,
                                                        search_range)
                    : detail::diamond_integer_search(reference.y, target.y, r0, r1, c0, c1,
                                                     search_range);
            best = detail::refine_quarter_pel(reference.y, target.y, r0, r1, c0, c1, best);
            flow.at(by, bx) = MotionVec{int16_t(best.vx), int16_t(best.vy)};
        }
    return flow;
}

// Constant-motion prediction: the previously transmitted flow persists.
inline FlowField extrapolate_flow(const FlowField& previous_transmitted) {
    return previous_transmitted;
}

// Componentwise flow difference in quarter-pel units, block raster order,
// x before y. Lossless at the symbol level: reconstruct_flow inverts it.
inline std::vector<int16_t> flow_residual(const FlowField& measured, const FlowField& predicted) {
    if (!measured.same_geometry(predicted)) fail("motion", "flow geometry mismatch");
    std::vector<int16_t> out;
    out.reserve(measured.mv.size() * 2);
    for (size_t i = 0; i < measured.mv.size(); ++i) {
        out.push_back(int16_t(measured.mv[i].x - predicted.mv[i].x));
        out.push_back(int16_t(measured.mv[i].y - predicted.mv[i].y));
    }
    return out;
}

inline FlowField reconstruct_flow(const FlowField& predicted,
                                  const std::vector<int16_t>& residual) {
    if (residual.size() != predicted.mv.size() * 2)
        fail("motion", "flow residual has " + std::to_string(residual.size()) +
                           " symbols, expected " + std::to_string(predicted.mv.size() * 2));
    FlowField out = predicted;
    for (size_t i = 0; i < out.mv.size(); ++i) {
        out.mv[i].x = int16_t(predicted.mv[i].x + residual[2 * i]);
        out.mv[i].y = int16_t(predicted.mv[i].y + residual[2 * i + 1]);
    }
    return out;
}

}  // namespace lvc
