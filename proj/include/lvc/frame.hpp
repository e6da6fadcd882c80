#pragma once

#include <cstdint>
#include <fstream>
#include <vector>

#include "lvc/common.hpp"

namespace lvc {

struct Plane {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> samples;

    Plane() = default;
    Plane(int w, int h, uint8_t fill = 0)
        : width(w), height(h), samples(size_t(w) * size_t(h), fill) {}

    uint8_t at(int row, int col) const { return samples[size_t(row) * width + col]; }
    uint8_t& at(int row, int col) { return samples[size_t(row) * width + col]; }
    bool same_size(const Plane& o) const { return width == o.width && height == o.height; }
    bool operator==(const Plane&) const = default;
};

// One raw 8-bit YUV 4:2:0 frame. Planes are row-major with no padding.
struct Frame420 {
    int width = 0;
    int height = 0;
    Plane y, u, v;

    Frame420() = default;
    Frame420(int w, int h) : width(w), height(h), y(w, h), u(w / 2, h / 2), v(w / 2, h / 2) {
        if (w < 2 || h < 2 || w % 2 != 0 || h % 2 != 0)
            fail("frame_io", "frame dimensions must be even and >= 2, got " + std::to_string(w) +
                                 "x" + std::to_string(h));
    }

    size_t byte_size() const { return size_t(width) * size_t(height) * 3 / 2; }
    bool same_size(const Frame420& o) const { return width == o.width && height == o.height; }
    bool operator==(const Frame420&) const = default;
};

struct ResidualPlane {
    int width = 0;
    int height = 0;
    std::vector<int16_t> samples;  // values in [-255, 255]

    ResidualPlane() = default;
    ResidualPlane(int w, int h) : width(w), height(h), samples(size_t(w) * size_t(h), 0) {}

    int16_t at(int row, int col) const { return samples[size_t(row) * width + col]; }
    int16_t& at(int row, int col) { return samples[size_t(row) * width + col]; }
};

struct Residual420 {
    ResidualPlane y, u, v;
};

inline std::vector<Frame420> read_yuv420(const std::string& path, int width, int height) {
    if (width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0)
        fail("frame_io", "dimensions must be even and >= 2, got " + std::to_string(width) + "x" +
                             std::to_string(height));
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) fail("frame_io", "cannot open '" + path + "' for reading");
    const size_t file_size = size_t(in.tellg());
    in.seekg(0);

    const size_t frame_bytes = size_t(width) * size_t(height) * 3 / 2;
    if (file_size % frame_bytes != 0)
        fail("frame_io", "'" + path + "' is " + std::to_string(file_size) +
                             " bytes, not a multiple of the " + std::to_string(frame_bytes) +
                             "-byte frame size for " + std::to_string(width) + "x" +
                             std::to_string(height));

    std::vector<Frame420> frames;
    frames.reserve(file_size / frame_bytes);
    for (size_t k = 0; k < file_size / frame_bytes; ++k) {
        Frame420 f(width, height);
        in.read(reinterpret_cast<char*>(f.y.samples.data()), std::streamsize(f.y.samples.size()));
        in.read(reinterpret_cast<char*>(f.u.samples.data()), std::streamsize(f.u.samples.size()));
        in.read(reinterpret_cast<char*>(f.v.samples.data()), std::streamsize(f.v.samples.size()));
        if (!in) fail("frame_io", "read error in '" + path + "' at frame " + std::to_string(k));
        frames.push_back(std::move(f));
    }
    return frames;
}

inline size_t write_yuv420(const std::vector<Frame420>& frames, const std::string& path) {
    for (size_t k = 1; k < frames.size(); ++k)
        if (!frames[k].same_size(frames[0]))
            fail("frame_io", "frame " + std::to_string(k) + " is " +
                                 std::to_string(frames[k].width) + "x" +
                                 std::to_string(frames[k].height) + " but frame 0 is " +
                                 std::to_string(frames[0].width) + "x" +
                                 std::to_string(frames[0].height));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("frame_io", "cannot open '" + path + "' for writing");
    size_t written = 0;
    for (const Frame420& f : frames) {
        for (const Plane* p : {&f.y, &f.u, &f.v}) {
            out.write(reinterpret_cast<const char*>(p->samples.data()),
                      std::streamsize(p->samples.size()));
            written += p->samples.size();
        }
    }
    if (!out) fail("frame_io", "write error on '" + path + "'");
    return written;
}

inline ResidualPlane subtract(const Plane& a, const Plane& b) {
    if (!a.same_size(b)) fail("frame_io", "plane dimension mismatch in subtract");
    ResidualPlane r(a.width, a.height);
    for (size_t i = 0; i < a.samples.size(); ++i)
        r.samples[i] = int16_t(int(a.samples[i]) - int(b.samples[i]));
    return r;
}

inline Residual420 subtract(const Frame420& a, const Frame420& b) {
    if (!a.same_size(b)) fail("frame_io", "frame dimension mismatch in subtract");
    return {subtract(a.y, b.y), subtract(a.u, b.u), subtract(a.v, b.v)};
}

inline Plane add_clamped(const Plane& base, const ResidualPlane& r) {
    if (base.width != r.width || base.height != r.height)
        fail("frame_io", "plane dimension mismatch in add_clamped");
    Plane out(base.width, base.height);
    for (size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = clamp_u8(long(base.samples[i]) + long(r.samples[i]));
    return out;
}

inline Frame420 add_clamped(const Frame420& base, const Residual420& r) {
    Frame420 out;
    out.width = base.width;
    out.height = base.height;
    out.y = add_clamped(base.y, r.y);
    out.u = add_clamped(base.u, r.u);
    out.v = add_clamped(base.v, r.v);
    return out;
}

// 8-bit binary PGM, used by the decoder's debug dumps.
inline void write_pgm(const Plane& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("frame_io", "cannot open '" + path + "' for writing");
    out << "P5\n" << p.width << " " << p.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(p.samples.data()), std::streamsize(p.samples.size()));
    if (!out) fail("frame_io", "write error on '" + path + "'");
}

}  // namespace lvc
