#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lvc/frame.hpp"

namespace lvc {

// Motion vectors are quarter-pel fixed point: value / 4 = displacement in
// luma pixels. Components stay within [-127, 127] so they fit int8 symbols.
constexpr int kFlowFixedMin = -127;
constexpr int kFlowFixedMax = 127;

struct MotionVec {
    int16_t x = 0;  // horizontal (column) displacement, quarter-pel units
    int16_t y = 0;  // vertical (row) displacement, quarter-pel units
    bool operator==(const MotionVec&) const = default;
};

// One motion vector per b x b block, ceiling partition of the luma plane.
struct FlowField {
    int blocks_x = 0;
    int blocks_y = 0;
    int block_size = 0;
    std::vector<MotionVec> mv;

    static FlowField sized_for(int width, int height, int block_size) {
        if (block_size < 2 || block_size % 2 != 0)
            fail("warp_engine", "block size must be even and >= 2, got " +
                                    std::to_string(block_size));
        FlowField f;
        f.block_size = block_size;
        f.blocks_x = (width + block_size - 1) / block_size;
        f.blocks_y = (height + block_size - 1) / block_size;
        f.mv.assign(size_t(f.blocks_x) * size_t(f.blocks_y), MotionVec{});
        return f;
    }

    const MotionVec& at(int by, int bx) const { return mv[size_t(by) * blocks_x + bx]; }
    MotionVec& at(int by, int bx) { return mv[size_t(by) * blocks_x + bx]; }

    bool same_geometry(const FlowField& o) const {
        return blocks_x == o.blocks_x && blocks_y == o.blocks_y && block_size == o.block_size;
    }

    bool matches_frame(int width, int height) const {
        return blocks_x == (width + block_size - 1) / block_size &&
               blocks_y == (height + block_size - 1) / block_size;
    }

    void validate_range() const {
        for (const MotionVec& m : mv)
            if (m.x < kFlowFixedMin || m.x > kFlowFixedMax || m.y < kFlowFixedMin ||
                m.y > kFlowFixedMax)
                fail("warp_engine", "motion vector outside the quarter-pel int8 range");
    }

    bool operator==(const FlowField&) const = default;
};

// Per-pixel flow at luma resolution, displacements in pixels.
struct DenseFlow {
    int width = 0;
    int height = 0;
    std::vector<double> dx, dy;

    DenseFlow() = default;
    DenseFlow(int w, int h)
        : width(w), height(h), dx(size_t(w) * h, 0.0), dy(size_t(w) * h, 0.0) {}

    double fx(int row, int col) const { return dx[size_t(row) * width + col]; }
    double fy(int row, int col) const { return dy[size_t(row) * width + col]; }
    void set(int row, int col, double fx_, double fy_) {
        dx[size_t(row) * width + col] = fx_;
        dy[size_t(row) * width + col] = fy_;
    }
};

// Bilinear fetch with source coordinates clamped to the plane (edge
// replication). Quarter-pel fractions make every intermediate value an exact
// dyadic rational, so results do not depend on evaluation order.
inline double sample_bilinear(const Plane& p, double row, double col) {
    const double r = std::clamp(row, 0.0, double(p.height - 1));
    const double c = std::clamp(col, 0.0, double(p.width - 1));
    const int r0 = int(r);
    const int c0 = int(c);
    const int r1 = std::min(r0 + 1, p.height - 1);
    const int c1 = std::min(c0 + 1, p.width - 1);
    const double fr = r - r0;
    const double fc = c - c0;
    const double top = (1.0 - fc) * p.at(r0, c0) + fc * p.at(r0, c1);
    const double bot = (1.0 - fc) * p.at(r1, c0) + fc * p.at(r1, c1);
    return (1.0 - fr) * top + fr * bot;
}

// ---- dense warp ----

inline Frame420 dense_warp(const Frame420& frame, const DenseFlow& flow) {
    if (flow.width != frame.width || flow.height != frame.height)
        fail("warp_engine", "dense flow is " + std::to_string(flow.width) + "x" +
                                std::to_string(flow.height) + " but frame is " +
                                std::to_string(frame.width) + "x" + std::to_string(frame.height));
    Frame420 out(frame.width, frame.height);
    for (int i = 0; i < frame.height; ++i)
        for (int j = 0; j < frame.width; ++j)
            out.y.at(i, j) =
                round_clamp_u8(sample_bilinear(frame.y, i + flow.fy(i, j), j + flow.fx(i, j)));
    // Chroma samples reuse the co-located luma vector, halved.
    for (const Plane* src : {&frame.u, &frame.v}) {
        Plane& dst = src == &frame.u ? out.u : out.v;
        for (int i = 0; i < src->height; ++i)
            for (int j = 0; j < src->width; ++j) {
                const double fx = flow.fx(2 * i, 2 * j) / 2.0;
                const double fy = flow.fy(2 * i, 2 * j) / 2.0;
                dst.at(i, j) = round_clamp_u8(sample_bilinear(*src, i + fy, j + fx));
            }
    }
    return out;
}

// ---- block warp ----

namespace detail {

inline void check_flow_frame(const FlowField& flow, const Frame420& frame) {
    if (!flow.matches_frame(frame.width, frame.height))
        fail("warp_engine", "flow geometry " + std::to_string(flow.blocks_x) + "x" +
                                std::to_string(flow.blocks_y) + " (b=" +
                                std::to_string(flow.block_size) + ") does not cover a " +
                                std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                                " frame");
}

// fp_denominator is 4 for luma and 8 for chroma (halved vectors).
inline void block_warp_plane(const Plane& src, Plane& dst, const FlowField& flow, int block,
                             double fp_denominator) {
    for (int i = 0; i < src.height; ++i) {
        const int by = i / block;
        for (int j = 0; j < src.width; ++j) {
            const MotionVec& m = flow.at(by, j / block);
            dst.at(i, j) = round_clamp_u8(
                sample_bilinear(src, i + m.y / fp_denominator, j + m.x / fp_denominator));
        }
    }
}

}  // namespace detail

inline Frame420 block_warp(const Frame420& frame, const FlowField& flow) {
    detail::check_flow_frame(flow, frame);
    Frame420 out(frame.width, frame.height);
    detail::block_warp_plane(frame.y, out.y, flow, flow.block_size, 4.0);
    detail::block_warp_plane(frame.u, out.u, flow, flow.block_size / 2, 8.0);
    detail::block_warp_plane(frame.v, out.v, flow, flow.block_size / 2, 8.0);
    return out;
}

// ---- overlapped block warp ----

// Blending weights for the 3x3 block neighborhood. Weights are snapped to
// multiples of 1/65536 with per-pixel sums of exactly 1.0, which keeps the
// weighted accumulation exact in double precision and makes the collapse to
// block_warp bit-exact when all contributing vectors agree.
struct OverlapKernel {
    static constexpr int neighborhood = 9;
    // (dy, dx) block offsets, row-major; index 4 is the center block.
    static constexpr std::array<std::array<int, 2>, 9> offsets = {
        {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

    int block_size = 0;
    std::vector<double> luma;    // block_size^2 * 9
    std::vector<double> chroma;  // (block_size/2)^2 * 9

    double weight(int i, int j, int k) const {
        return luma[(size_t(i) * block_size + j) * neighborhood + k];
    }
    double chroma_weight(int i, int j, int k) const {
        return chroma[(size_t(i) * (block_size / 2) + j) * neighborhood + k];
    }

    static OverlapKernel one_hot(int block_size);
};

namespace detail {

inline void snap_weights_fixed(std::array<double, 9>& w) {
    constexpr double total = 65536.0;
    std::array<uint32_t, 9> q{};
    std::array<double, 9> rem{};
    uint32_t sum = 0;
    for (int k = 0; k < 9; ++k) {
        const double scaled = w[k] * total;
        q[k] = uint32_t(scaled);
        rem[k] = scaled - double(q[k]);
        sum += q[k];
    }
    int leftover = int(65536) - int(sum);
    std::array<int, 9> order = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[a] > rem[b]; });
    for (int t = 0; t < leftover; ++t) q[order[size_t(t) % 9]] += 1;
    for (int k = 0; k < 9; ++k) w[k] = double(q[k]) / total;
}

inline std::vector<double> gaussian_weights(int block, double sigma) {
    std::vector<double> out(size_t(block) * block * 9);
    for (int i = 0; i < block; ++i)
        for (int j = 0; j < block; ++j) {
            std::array<double, 9> w{};
            double sum = 0.0;
            for (int k = 0; k < 9; ++k) {
                const double cy = OverlapKernel::offsets[k][0] * block + block * 0.5;
                const double cx = OverlapKernel::offsets[k][1] * block + block * 0.5;
                const double dy = (i + 0.5) - cy;
                const double dx = (j + 0.5) - cx;
                w[k] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                sum += w[k];
            }
            for (int k = 0; k < 9; ++k) w[k] /= sum;
            snap_weights_fixed(w);
            for (int k = 0; k < 9; ++k) out[(size_t(i) * block + j) * 9 + k] = w[k];
        }
    return out;
}

}  // namespace detail

// Gaussian blending kernel: the weight of neighbor k at a pixel decays with
// the distance from that pixel to the center of neighbor k's footprint.
inline OverlapKernel make_gaussian_kernel(int block_size, double sigma) {
    if (block_size < 2 || block_size % 2 != 0)
        fail("warp_engine", "block size must be even and >= 2, got " +
                                std::to_string(block_size));
    if (!(sigma > 0)) fail("warp_engine", "kernel sigma must be > 0");
    OverlapKernel k;
    k.block_size = block_size;
    k.luma = detail::gaussian_weights(block_size, sigma);
    k.chroma = detail::gaussian_weights(block_size / 2, sigma / 2.0);
    return k;
}

inline OverlapKernel OverlapKernel::one_hot(int block_size) {
    if (block_size < 2 || block_size % 2 != 0)
        fail("warp_engine", "block size must be even and >= 2");
    OverlapKernel k;
    k.block_size = block_size;
    k.luma.assign(size_t(block_size) * block_size * 9, 0.0);
    k.chroma.assign(size_t(block_size / 2) * (block_size / 2) * 9, 0.0);
    for (size_t p = 0; p < k.luma.size(); p += 9) k.luma[p + 4] = 1.0;
    for (size_t p = 0; p < k.chroma.size(); p += 9) k.chroma[p + 4] = 1.0;
    return k;
}

namespace detail {

inline void overlap_warp_plane(const Plane& src, Plane& dst, const FlowField& flow,
                               const std::vector<double>& weights, int block,
                               double fp_denominator) {
    for (int i = 0; i < src.height; ++i) {
        const int by = i / block;
        const int li = i % block;
        for (int j = 0; j < src.width; ++j) {
            const int bx = j / block;
            const int lj = j % block;
            const double* w = &weights[(size_t(li) * block + lj) * 9];
            double acc = 0.0;
            for (int k = 0; k < 9; ++k) {
                // Missing neighbors at the frame edge reuse the nearest block.
                const int ny = std::clamp(by + OverlapKernel::offsets[k][0], 0, flow.blocks_y - 1);
                const int nx = std::clamp(bx + OverlapKernel::offsets[k][1], 0, flow.blocks_x - 1);
                const MotionVec& m = flow.at(ny, nx);
                acc += w[k] *
                       sample_bilinear(src, i + m.y / fp_denominator, j + m.x / fp_denominator);
            }
            dst.at(i, j) = round_clamp_u8(acc);
        }
    }
}

}  // namespace detail

inline Frame420 overlap_block_warp(const Frame420& frame, const FlowField& flow,
                                   const OverlapKernel& kernel) {
    detail::check_flow_frame(flow, frame);
    if (kernel.block_size != flow.block_size)
        fail("warp_engine", "kernel block size " + std::to_string(kernel.block_size) +
                                " does not match flow block size " +
                                std::to_string(flow.block_size));
    Frame420 out(frame.width, frame.height);
    detail::overlap_warp_plane(frame.y, out.y, flow, kernel.luma, flow.block_size, 4.0);
    detail::overlap_warp_plane(frame.u, out.u, flow, kernel.chroma, flow.block_size / 2, 8.0);
    detail::overlap_warp_plane(frame.v, out.v, flow, kernel.chroma, flow.block_size / 2, 8.0);
    return out;
}

// Bilinear upsampling of a block flow field to per-pixel resolution,
// displacements in pixels. Used by the dense warping mode of the codec.
inline DenseFlow upsample_flow(const FlowField& flow, int width, int height) {
    if (!flow.matches_frame(width, height))
        fail("warp_engine", "flow geometry does not cover the requested frame size");
    DenseFlow out(width, height);
    const int b = flow.block_size;
    auto axis = [&](int pix, int blocks) {
        double u = (pix + 0.5) / b - 0.5;
        double lo = std::floor(u);
        int i0 = std::clamp(int(lo), 0, blocks - 1);
        int i1 = std::clamp(int(lo) + 1, 0, blocks - 1);
        double f = std::clamp(u - lo, 0.0, 1.0);
        return std::array<double, 3>{double(i0), double(i1), f};
    };
    for (int i = 0; i < height; ++i) {
        const auto ay = axis(i, flow.blocks_y);
        for (int j = 0; j < width; ++j) {
            const auto ax = axis(j, flow.blocks_x);
            const int y0 = int(ay[0]), y1 = int(ay[1]);
            const int x0 = int(ax[0]), x1 = int(ax[1]);
            const double fy = ay[2], fx = ax[2];
            auto lerp2 = [&](auto get) {
                const double top = (1.0 - fx) * get(y0, x0) + fx * get(y0, x1);
                const double bot = (1.0 - fx) * get(y1, x0) + fx * get(y1, x1);
                return (1.0 - fy) * top + fy * bot;
            };
            const double vx =
                lerp2([&](int by, int bx) { return flow.at(by, bx).x / 4.0; });
            const double vy =
                lerp2([&](int by, int bx) { return flow.at(by, bx).y / 4.0; });
            out.set(i, j, vx, vy);
        }
    }
    return out;
}

}  // namespace lvc
