#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lvc/bottleneck.hpp"
#include "lvc/coder.hpp"
#include "lvc/frame.hpp"
#include "lvc/motion.hpp"
#include "lvc/warp.hpp"

namespace lvc {

enum class WarpMode : uint8_t { dense = 0, block = 1, overlap = 2 };

// Quantizer steps travel in the bitstream as 8-bit rationals.
struct Rational {
    uint8_t num = 1;
    uint8_t den = 1;
    double value() const { return double(num) / double(den); }
};

inline Rational parse_rational(const std::string& text) {
    auto parse_u8 = [&](const std::string& s) {
        try {
            size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size() || v < 1 || v > 255) throw std::invalid_argument(s);
            return uint8_t(v);
        } catch (const std::exception&) {
            fail("codec", "'" + text + "' is not a step of the form n or n/d with 1 <= n,d <= 255");
        }
    };
    const size_t slash = text.find('/');
    if (slash == std::string::npos) return {parse_u8(text), 1};
    return {parse_u8(text.substr(0, slash)), parse_u8(text.substr(slash + 1))};
}

struct CodecConfig {
    int block_size = 16;
    int search_range = 8;
    int gop_size = 16;
    Rational residual_step{4, 1};  // rate knob, applied to residual samples
    Rational iframe_step{4, 1};    // I-frame DC step
    LatentMode latent = LatentMode::step_fifth;
    int stream_count = 8;
    HeaderMode header_mode = HeaderMode::naive;
    WarpMode warp = WarpMode::overlap;
    double kernel_sigma = 0.0;  // 0 selects the default block_size / 2
    SearchMethod search = SearchMethod::exhaustive;
    int threads = 1;

    // Sigma is carried in the bitstream as round(sigma * 8); the encoder uses
    // the snapped value so both sides build the same kernel.
    uint8_t sigma_byte() const {
        const double sigma = kernel_sigma > 0.0 ? kernel_sigma : block_size / 2.0;
        const long fixed = lround_half_away(sigma * 8.0);
        if (fixed < 1 || fixed > 255)
            fail("codec", "kernel sigma must lie in (0, 31.875] after 1/8 quantization");
        return uint8_t(fixed);
    }
    double sigma_value() const { return sigma_byte() / 8.0; }

    void validate() const {
        if (block_size < 2 || block_size % 2 != 0 || block_size > 254)
            fail("codec", "block size must be even, >= 2 and <= 254");
        if (gop_size < 1) fail("codec", "GoP size must be >= 1");
        if (search_range < 0 || search_range > 31)
            fail("codec", "search range must lie in [0, 31]");
        if (stream_count < kMinStreams || stream_count > kMaxStreams)
            fail("codec", "stream count must lie in [1, 1024]");
        if (threads < 1) fail("codec", "thread count must be >= 1");
        (void)sigma_byte();
    }
};

struct CodecState {
    Frame420 previous_reconstruction;
    FlowField previous_flow;  // reset to zero at every I-frame
};

struct FrameStats {
    char type = 'I';
    size_t bits = 0;           // whole frame record, including section framing
    size_t flow_bits = 0;      // P-frames: flow section
    size_t residual_bits = 0;  // residual section
};

struct EncodedVideo {
    std::vector<uint8_t> bitstream;
    std::vector<Frame420> reconstructions;
    std::vector<FrameStats> frames;

    size_t total_bits() const { return bitstream.size() * 8; }
};

struct DecodedVideo {
    std::vector<Frame420> frames;
    CodecConfig config;  // fields carried by the container header
    int width = 0;
    int height = 0;
};

// Observer for decoder-side intermediates of each P-frame (debug dumps).
struct PframeDebug {
    int frame_index;
    const Frame420& warped;
    const FlowField& flow;
    const Residual420& residual;
};
using DebugHook = std::function<void(const PframeDebug&)>;

namespace detail {

struct BlockGrid {
    int bw = 0, bh = 0, b = 0;
    int count() const { return bw * bh; }
};

inline BlockGrid grid_for(int w, int h, int b) { return {(w + b - 1) / b, (h + b - 1) / b, b}; }

// Per-block pre-scale levels from the sample standard deviation of the
// quantized symbols; this replaces the learned scale field.
inline std::vector<uint8_t> rho_map_for_symbols(const int8_t* s, int w, int h, int b,
                                                const Bottleneck& bn) {
    const BlockGrid g = grid_for(w, h, b);
    std::vector<uint8_t> map(size_t(g.count()));
    for (int by = 0; by < g.bh; ++by)
        for (int bx = 0; bx < g.bw; ++bx) {
            const int r1 = std::min((by + 1) * b, h), c1 = std::min((bx + 1) * b, w);
            double sum = 0.0;
            int n = 0;
            for (int i = by * b; i < r1; ++i)
                for (int j = bx * b; j < c1; ++j, ++n) sum += s[size_t(i) * w + j];
            const double mean = sum / n;
            double var = 0.0;
            for (int i = by * b; i < r1; ++i)
                for (int j = bx * b; j < c1; ++j) {
                    const double d = s[size_t(i) * w + j] - mean;
                    var += d * d;
                }
            map[size_t(by) * g.bw + bx] = uint8_t(bn.level_for_sigma(std::sqrt(var / n)));
        }
    return map;
}

inline void append_symbol_rhos(std::vector<uint8_t>& out, const std::vector<uint8_t>& map, int w,
                               int h, int b) {
    const BlockGrid g = grid_for(w, h, b);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.push_back(map[size_t(i / b) * g.bw + j / b]);
}

// Exhaustive pre-scale choice for one shared level: minimal model bits for
// the symbol histogram, first minimal level on ties.
inline uint8_t best_shared_rho(std::span<const int8_t> symbols, const SymbolModel& m) {
    std::array<uint64_t, kAlphabet> hist{};
    for (int8_t s : symbols) ++hist[size_t(int(s) - kSymbolMin)];
    int best = 0;
    double best_bits = std::numeric_limits<double>::infinity();
    for (int lv = 0; lv < m.levels(); ++lv) {
        double bits = 0.0;
        for (int i = 0; i < kAlphabet; ++i)
            if (hist[size_t(i)] != 0)
                bits += double(hist[size_t(i)]) * (16.0 - std::log2(double(m.freq[size_t(lv)][size_t(i)])));
        if (bits < best_bits) {
            best_bits = bits;
            best = lv;
        }
    }
    return uint8_t(best);
}

inline FlowField apply_flow_symbols(const FlowField& predicted,
                                    std::span<const int8_t> symbols) {
    if (symbols.size() != predicted.mv.size() * 2)
        fail("codec", "flow symbol count does not match the block grid");
    FlowField out = predicted;
    for (size_t i = 0; i < out.mv.size(); ++i) {
        out.mv[i].x = int16_t(std::clamp(int(predicted.mv[i].x) + int(symbols[2 * i]),
                                         kFlowFixedMin, kFlowFixedMax));
        out.mv[i].y = int16_t(std::clamp(int(predicted.mv[i].y) + int(symbols[2 * i + 1]),
                                         kFlowFixedMin, kFlowFixedMax));
    }
    return out;
}

}  // namespace detail

// Per-config immutable pieces shared by every frame.
struct CodecContext {
    CodecConfig cfg;
    OverlapKernel kernel;
    Bottleneck bottleneck;
    SymbolModel model;

    static CodecContext make(const CodecConfig& cfg) {
        cfg.validate();
        CodecContext ctx;
        ctx.cfg = cfg;
        ctx.kernel = make_gaussian_kernel(cfg.block_size, cfg.sigma_value());
        ctx.bottleneck = Bottleneck::make(cfg.latent);
        ctx.model = build_symbol_model(ctx.bottleneck);
        return ctx;
    }

    Frame420 warp(const Frame420& reference, const FlowField& flow) const {
        switch (cfg.warp) {
            case WarpMode::overlap: return overlap_block_warp(reference, flow, kernel);
            case WarpMode::block: return block_warp(reference, flow);
            case WarpMode::dense:
                return dense_warp(reference,
                                  upsample_flow(flow, reference.width, reference.height));
        }
        fail("codec", "unknown warp mode");
    }
};

namespace detail {

// Shared by encoder and decoder so reconstructions match bit for bit.
inline Plane iframe_reconstruct_plane(int w, int h, int b, std::span<const uint16_t> dc_levels,
                                      std::span<const int8_t> symbols, double di, double dr) {
    const BlockGrid g = grid_for(w, h, b);
    Plane out(w, h);
    size_t idx = 0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j, ++idx) {
            const double dc = double(dc_levels[size_t(i / b) * g.bw + j / b]) * di;
            out.samples[idx] = round_clamp_u8(dc + double(symbols[idx]) * dr);
        }
    return out;
}

inline ResidualPlane residual_from_symbols(int w, int h, std::span<const int8_t> symbols,
                                           double dr) {
    ResidualPlane r(w, h);
    for (size_t i = 0; i < r.samples.size(); ++i)
        r.samples[i] = int16_t(lround_half_away(double(symbols[i]) * dr));
    return r;
}

inline std::array<const Plane*, 3> planes_of(const Frame420& f) { return {&f.y, &f.u, &f.v}; }

}  // namespace detail

struct EncodedFrame {
    std::vector<std::vector<uint8_t>> sections;
    Frame420 reconstruction;
    FlowField flow;  // transmitted flow (P) or zero field (I)
    FrameStats stats;
};

// I-frame: per-plane per-block DC sent raw, DC-removed samples quantized and
// entropy-coded with per-block pre-scales.
inline EncodedFrame encode_iframe(const Frame420& frame, const CodecContext& ctx) {
    const CodecConfig& cfg = ctx.cfg;
    const double di = cfg.iframe_step.value();
    const double dr = cfg.residual_step.value();
    const int b = cfg.block_size;

    std::vector<uint8_t> side;  // all DC levels, then all rho bytes
    std::vector<uint8_t> rho_bytes;
    std::vector<int8_t> all_symbols;
    std::vector<uint8_t> symbol_rhos;
    EncodedFrame out;
    out.reconstruction.width = frame.width;
    out.reconstruction.height = frame.height;

    for (const Plane* p : detail::planes_of(frame)) {
        const detail::BlockGrid g = detail::grid_for(p->width, p->height, b);
        std::vector<uint16_t> dc_levels(size_t(g.count()));
        for (int by = 0; by < g.bh; ++by)
            for (int bx = 0; bx < g.bw; ++bx) {
                const int r1 = std::min((by + 1) * b, p->height);
                const int c1 = std::min((bx + 1) * b, p->width);
                double sum = 0.0;
                int n = 0;
                for (int i = by * b; i < r1; ++i)
                    for (int j = bx * b; j < c1; ++j, ++n) sum += p->at(i, j);
                dc_levels[size_t(by) * g.bw + bx] =
                    uint16_t(std::clamp(lround_half_away(sum / n / di), 0L, 65535L));
            }

        std::vector<double> latents(p->samples.size());
        std::vector<double> zeros(p->samples.size(), 0.0);
        size_t idx = 0;
        for (int i = 0; i < p->height; ++i)
            for (int j = 0; j < p->width; ++j, ++idx) {
                const double dc = double(dc_levels[size_t(i / b) * g.bw + j / b]) * di;
                latents[idx] = (double(p->at(i, j)) - dc) / dr;
            }
        const Symbols sym = form_symbols(latents, zeros, ctx.bottleneck);

        const std::vector<uint8_t> rho_map =
            detail::rho_map_for_symbols(sym.s.data(), p->width, p->height, b, ctx.bottleneck);
        detail::append_symbol_rhos(symbol_rhos, rho_map, p->width, p->height, b);
        all_symbols.insert(all_symbols.end(), sym.s.begin(), sym.s.end());
        for (uint16_t lvl : dc_levels) put_u16(side, lvl);
        rho_bytes.insert(rho_bytes.end(), rho_map.begin(), rho_map.end());

        Plane recon = detail::iframe_reconstruct_plane(p->width, p->height, b, dc_levels, sym.s,
                                                       di, dr);
        if (p == &frame.y)
            out.reconstruction.y = std::move(recon);
        else if (p == &frame.u)
            out.reconstruction.u = std::move(recon);
        else
            out.reconstruction.v = std::move(recon);
    }
    side.insert(side.end(), rho_bytes.begin(), rho_bytes.end());

    const StreamSet ss = encode_streams(all_symbols, symbol_rhos, ctx.model, cfg.stream_count,
                                        cfg.header_mode, cfg.threads);
    out.sections.push_back(std::move(side));
    out.sections.push_back(ss.serialize());
    out.flow = FlowField::sized_for(frame.width, frame.height, b);
    out.stats.type = 'I';
    out.stats.residual_bits = out.sections[1].size() * 8;
    out.stats.bits = (1 + 4 + out.sections[0].size() + 4 + out.sections[1].size()) * 8;
    return out;
}

// P-frame, three steps: extrapolate the flow, transmit the flow residual,
// transmit the frame residual against the motion-compensated prediction.
inline EncodedFrame encode_pframe(const Frame420& frame, const CodecState& state,
                                  const CodecContext& ctx) {
    const CodecConfig& cfg = ctx.cfg;
    if (!state.previous_reconstruction.same_size(frame))
        fail("codec", "codec state does not match the frame dimensions");
    const double dr = cfg.residual_step.value();
    const int b = cfg.block_size;

    const FlowField predicted = extrapolate_flow(state.previous_flow);
    const FlowField measured =
        estimate_flow(state.previous_reconstruction, frame, b, cfg.search_range, cfg.search);
    const std::vector<int16_t> flow_res = flow_residual(measured, predicted);
    std::vector<int8_t> flow_syms(flow_res.size());
    for (size_t i = 0; i < flow_res.size(); ++i)
        flow_syms[i] = int8_t(std::clamp(int(flow_res[i]), kSymbolMin, kSymbolMax));

    const uint8_t flow_rho = detail::best_shared_rho(flow_syms, ctx.model);
    const std::vector<uint8_t> flow_rhos(flow_syms.size(), flow_rho);
    const StreamSet flow_ss = encode_streams(flow_syms, flow_rhos, ctx.model, cfg.stream_count,
                                             cfg.header_mode, cfg.threads);

    const FlowField transmitted = detail::apply_flow_symbols(predicted, flow_syms);
    const Frame420 warped = ctx.warp(state.previous_reconstruction, transmitted);
    const Residual420 residual = subtract(frame, warped);

    std::vector<uint8_t> resid_side;
    std::vector<int8_t> all_symbols;
    std::vector<uint8_t> symbol_rhos;
    Residual420 decoded_residual;
    for (const ResidualPlane* rp : {&residual.y, &residual.u, &residual.v}) {
        std::vector<double> latents(rp->samples.size());
        std::vector<double> zeros(rp->samples.size(), 0.0);
        for (size_t i = 0; i < rp->samples.size(); ++i) latents[i] = double(rp->samples[i]) / dr;
        const Symbols sym = form_symbols(latents, zeros, ctx.bottleneck);

        const std::vector<uint8_t> rho_map =
            detail::rho_map_for_symbols(sym.s.data(), rp->width, rp->height, b, ctx.bottleneck);
        detail::append_symbol_rhos(symbol_rhos, rho_map, rp->width, rp->height, b);
        resid_side.insert(resid_side.end(), rho_map.begin(), rho_map.end());
        all_symbols.insert(all_symbols.end(), sym.s.begin(), sym.s.end());

        ResidualPlane dec = detail::residual_from_symbols(rp->width, rp->height, sym.s, dr);
        if (rp == &residual.y)
            decoded_residual.y = std::move(dec);
        else if (rp == &residual.u)
            decoded_residual.u = std::move(dec);
        else
            decoded_residual.v = std::move(dec);
    }
    const StreamSet resid_ss = encode_streams(all_symbols, symbol_rhos, ctx.model,
                                              cfg.stream_count, cfg.header_mode, cfg.threads);

    EncodedFrame out;
    std::vector<uint8_t> flow_section;
    flow_section.push_back(flow_rho);
    const std::vector<uint8_t> flow_bytes = flow_ss.serialize();
    flow_section.insert(flow_section.end(), flow_bytes.begin(), flow_bytes.end());
    const std::vector<uint8_t> resid_bytes = resid_ss.serialize();
    resid_side.insert(resid_side.end(), resid_bytes.begin(), resid_bytes.end());

    out.reconstruction = add_clamped(warped, decoded_residual);
    out.flow = transmitted;
    out.sections.push_back(std::move(flow_section));
    out.sections.push_back(std::move(resid_side));
    out.stats.type = 'P';
    out.stats.flow_bits = out.sections[0].size() * 8;
    out.stats.residual_bits = out.sections[1].size() * 8;
    out.stats.bits = (1 + 4 + out.sections[0].size() + 4 + out.sections[1].size()) * 8;
    return out;
}

// Convenience wrappers matching the one-frame operation signatures.
inline EncodedFrame encode_iframe(const Frame420& frame, const CodecConfig& cfg) {
    return encode_iframe(frame, CodecContext::make(cfg));
}
inline EncodedFrame encode_pframe(const Frame420& frame, const CodecState& state,
                                  const CodecConfig& cfg) {
    return encode_pframe(frame, state, CodecContext::make(cfg));
}

namespace detail {

constexpr size_t kContainerHeaderSize = 23;
constexpr size_t kCrcOffset = 19;

inline void write_container_header(std::vector<uint8_t>& out, const CodecConfig& cfg, int width,
                                   int height) {
    out.push_back('M');
    out.push_back('N');
    out.push_back('V');
    out.push_back('C');
    out.push_back(1);  // version
    put_u16(out, uint16_t(width));
    put_u16(out, uint16_t(height));
    put_u16(out, uint16_t(cfg.gop_size));
    out.push_back(uint8_t(cfg.block_size));
    out.push_back(cfg.residual_step.num);
    out.push_back(cfg.residual_step.den);
    out.push_back(cfg.iframe_step.num);
    out.push_back(cfg.iframe_step.den);
    out.push_back(uint8_t(cfg.latent));
    out.push_back(cfg.sigma_byte());
    out.push_back(uint8_t(cfg.warp));
    put_u32(out, 0);  // CRC placeholder, patched once the file is assembled
}

}  // namespace detail

inline EncodedVideo encode_video(const std::vector<Frame420>& frames, const CodecConfig& cfg) {
    cfg.validate();
    if (frames.empty()) fail("codec", "no frames to encode");
    for (size_t k = 1; k < frames.size(); ++k)
        if (!frames[k].same_size(frames[0])) fail("codec", "frames differ in size");
    if (frames[0].width > 65534 || frames[0].height > 65534)
        fail("codec", "frame dimensions exceed the container limit");

    const CodecContext ctx = CodecContext::make(cfg);
    EncodedVideo out;
    detail::write_container_header(out.bitstream, cfg, frames[0].width, frames[0].height);

    CodecState state;
    for (size_t t = 0; t < frames.size(); ++t) {
        const bool iframe = t % size_t(cfg.gop_size) == 0;
        EncodedFrame ef = iframe ? encode_iframe(frames[t], ctx)
                                 : encode_pframe(frames[t], state, ctx);
        out.bitstream.push_back(iframe ? 0 : 1);
        for (const auto& section : ef.sections) {
            put_u32(out.bitstream, uint32_t(section.size()));
            out.bitstream.insert(out.bitstream.end(), section.begin(), section.end());
        }
        state.previous_reconstruction = ef.reconstruction;
        state.previous_flow = iframe
                                  ? FlowField::sized_for(frames[t].width, frames[t].height,
                                                         cfg.block_size)
                                  : ef.flow;
        out.reconstructions.push_back(std::move(ef.reconstruction));
        out.frames.push_back(ef.stats);
    }

    const uint32_t crc = crc32(out.bitstream);
    for (int i = 0; i < 4; ++i)
        out.bitstream[detail::kCrcOffset + size_t(i)] = uint8_t((crc >> (8 * i)) & 0xFF);
    return out;
}

inline DecodedVideo decode_stream(std::span<const uint8_t> bytes, const DebugHook& debug = nullptr,
                                  int threads = 1) {
    if (bytes.size() < detail::kContainerHeaderSize)
        fail("codec", "container shorter than its fixed header");
    if (bytes[0] != 'M' || bytes[1] != 'N' || bytes[2] != 'V' || bytes[3] != 'C')
        fail("codec", "bad container magic");
    if (bytes[4] != 1)
        fail("codec", "unsupported container version " + std::to_string(int(bytes[4])));

    // Whole-file integrity: CRC over the container with the CRC field zeroed.
    {
        std::vector<uint8_t> copy(bytes.begin(), bytes.end());
        uint32_t stored = 0;
        for (int i = 0; i < 4; ++i) {
            stored |= uint32_t(copy[detail::kCrcOffset + size_t(i)]) << (8 * i);
            copy[detail::kCrcOffset + size_t(i)] = 0;
        }
        if (crc32(copy) != stored) fail("codec", "container checksum mismatch");
    }

    ByteReader r(bytes.data(), bytes.size(), "codec");
    r.bytes(5);  // magic + version
    DecodedVideo out;
    out.width = r.u16();
    out.height = r.u16();
    CodecConfig cfg;
    cfg.gop_size = r.u16();
    cfg.block_size = r.u8();
    cfg.residual_step = {r.u8(), r.u8()};
    cfg.iframe_step = {r.u8(), r.u8()};
    const uint8_t latent = r.u8();
    const uint8_t sigma8 = r.u8();
    const uint8_t warp = r.u8();
    r.u32();  // CRC, already verified
    if (out.width < 2 || out.height < 2 || out.width % 2 != 0 || out.height % 2 != 0)
        fail("codec", "container declares invalid frame dimensions");
    if (latent > 3) fail("codec", "unknown latent grid code " + std::to_string(int(latent)));
    if (warp > 2) fail("codec", "unknown warp mode code " + std::to_string(int(warp)));
    if (cfg.residual_step.num == 0 || cfg.residual_step.den == 0 || cfg.iframe_step.num == 0 ||
        cfg.iframe_step.den == 0)
        fail("codec", "container declares a zero quantizer step");
    if (sigma8 == 0) fail("codec", "container declares a zero kernel sigma");
    cfg.latent = LatentMode(latent);
    cfg.kernel_sigma = sigma8 / 8.0;
    cfg.warp = WarpMode(warp);
    cfg.threads = std::max(threads, 1);
    cfg.validate();
    out.config = cfg;

    const CodecContext ctx = CodecContext::make(cfg);
    const double di = cfg.iframe_step.value();
    const double dr = cfg.residual_step.value();
    const int b = cfg.block_size;

    auto read_section = [&r]() {
        const uint32_t len = r.u32();
        if (len > r.remaining())
            fail("codec", "section length " + std::to_string(len) + " exceeds remaining " +
                              std::to_string(r.remaining()) + " byte(s)");
        const uint8_t* p = r.bytes(len);
        return std::span<const uint8_t>(p, len);
    };

    CodecState state;
    int frame_index = 0;
    while (r.remaining() > 0) {
        const uint8_t type = r.u8();
        if (type > 1) fail("codec", "unknown frame type " + std::to_string(int(type)));

        if (type == 0) {
            const std::span<const uint8_t> side = read_section();
            const std::span<const uint8_t> ss_bytes = read_section();

            // Side section: per-plane DC levels (u16), then per-plane rho maps.
            std::array<std::pair<int, int>, 3> dims = {
                std::pair<int, int>{out.width, out.height},
                {out.width / 2, out.height / 2},
                {out.width / 2, out.height / 2}};
            size_t blocks_total = 0, samples_total = 0;
            for (const auto& [w, h] : dims) {
                blocks_total += size_t(detail::grid_for(w, h, b).count());
                samples_total += size_t(w) * size_t(h);
            }
            if (side.size() != blocks_total * 3)
                fail("codec", "I-frame side section has " + std::to_string(side.size()) +
                                  " byte(s), expected " + std::to_string(blocks_total * 3));

            ByteReader sr(side.data(), side.size(), "codec");
            std::array<std::vector<uint16_t>, 3> dc;
            std::array<std::vector<uint8_t>, 3> rho;
            for (size_t pi = 0; pi < 3; ++pi) {
                const auto g = detail::grid_for(dims[pi].first, dims[pi].second, b);
                dc[pi].resize(size_t(g.count()));
                for (uint16_t& v : dc[pi]) v = sr.u16();
            }
            std::vector<uint8_t> symbol_rhos;
            symbol_rhos.reserve(samples_total);
            for (size_t pi = 0; pi < 3; ++pi) {
                const auto g = detail::grid_for(dims[pi].first, dims[pi].second, b);
                rho[pi].resize(size_t(g.count()));
                for (uint8_t& v : rho[pi]) v = sr.u8();
                detail::append_symbol_rhos(symbol_rhos, rho[pi], dims[pi].first, dims[pi].second,
                                           b);
            }

            const StreamSet ss = StreamSet::parse(ss_bytes);
            const std::vector<int8_t> symbols =
                decode_streams(ss, symbol_rhos, ctx.model, samples_total, cfg.threads);

            Frame420 recon(out.width, out.height);
            size_t offset = 0;
            std::array<Plane*, 3> planes = {&recon.y, &recon.u, &recon.v};
            for (size_t pi = 0; pi < 3; ++pi) {
                const size_t n = size_t(dims[pi].first) * size_t(dims[pi].second);
                *planes[pi] = detail::iframe_reconstruct_plane(
                    dims[pi].first, dims[pi].second, b, dc[pi],
                    std::span<const int8_t>(symbols.data() + offset, n), di, dr);
                offset += n;
            }
            state.previous_reconstruction = recon;
            state.previous_flow = FlowField::sized_for(out.width, out.height, b);
            out.frames.push_back(std::move(recon));
        } else {
            if (out.frames.empty()) fail("codec", "P-frame appears before any I-frame");
            const std::span<const uint8_t> flow_section = read_section();
            const std::span<const uint8_t> resid_section = read_section();

            if (flow_section.empty()) fail("codec", "empty flow section");
            const FlowField predicted = extrapolate_flow(state.previous_flow);
            const size_t flow_count = predicted.mv.size() * 2;
            const uint8_t flow_rho = flow_section[0];
            const StreamSet flow_ss = StreamSet::parse(flow_section.subspan(1));
            const std::vector<uint8_t> flow_rhos(flow_count, flow_rho);
            const std::vector<int8_t> flow_syms =
                decode_streams(flow_ss, flow_rhos, ctx.model, flow_count, cfg.threads);
            const FlowField transmitted = detail::apply_flow_symbols(predicted, flow_syms);

            const Frame420 warped = ctx.warp(state.previous_reconstruction, transmitted);

            std::array<std::pair<int, int>, 3> dims = {
                std::pair<int, int>{out.width, out.height},
                {out.width / 2, out.height / 2},
                {out.width / 2, out.height / 2}};
            size_t blocks_total = 0, samples_total = 0;
            for (const auto& [w, h] : dims) {
                blocks_total += size_t(detail::grid_for(w, h, b).count());
                samples_total += size_t(w) * size_t(h);
            }
            if (resid_section.size() < blocks_total)
                fail("codec", "residual section too short for its rho maps");

            std::vector<uint8_t> symbol_rhos;
            symbol_rhos.reserve(samples_total);
            size_t off = 0;
            for (size_t pi = 0; pi < 3; ++pi) {
                const auto g = detail::grid_for(dims[pi].first, dims[pi].second, b);
                std::vector<uint8_t> map(resid_section.begin() + long(off),
                                         resid_section.begin() + long(off) + g.count());
                off += size_t(g.count());
                detail::append_symbol_rhos(symbol_rhos, map, dims[pi].first, dims[pi].second, b);
            }
            const StreamSet resid_ss = StreamSet::parse(resid_section.subspan(off));
            const std::vector<int8_t> symbols =
                decode_streams(resid_ss, symbol_rhos, ctx.model, samples_total, cfg.threads);

            Residual420 residual;
            size_t offset = 0;
            std::array<ResidualPlane*, 3> rplanes = {&residual.y, &residual.u, &residual.v};
            for (size_t pi = 0; pi < 3; ++pi) {
                const size_t n = size_t(dims[pi].first) * size_t(dims[pi].second);
                *rplanes[pi] = detail::residual_from_symbols(
                    dims[pi].first, dims[pi].second,
                    std::span<const int8_t>(symbols.data() + offset, n), dr);
                offset += n;
            }

            Frame420 recon = add_clamped(warped, residual);
            if (debug) debug(PframeDebug{frame_index, warped, transmitted, residual});
            state.previous_reconstruction = recon;
            state.previous_flow = transmitted;
            out.frames.push_back(std::move(recon));
        }
        ++frame_index;
    }
    if (out.frames.empty()) fail("codec", "container holds no frames");
    return out;
}

}  // namespace lvc
