#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "lvc/bottleneck.hpp"
#include "lvc/common.hpp"

namespace lvc {

enum class HeaderMode : uint8_t { naive = 0, optimized = 1 };

constexpr int kMinStreams = 1;
constexpr int kMaxStreams = 1024;

namespace detail {

// Carry-less byte-oriented range coder (LZMA lineage): 32-bit range, 64-bit
// low for carry propagation, byte renormalization below 2^24.
class RangeEncoder {
public:
    explicit RangeEncoder(std::vector<uint8_t>& out) : out_(out) {}

    void encode(uint32_t cum, uint32_t freq, uint32_t total) {
        const uint32_t r = range_ / total;
        low_ += uint64_t(r) * cum;
        range_ = r * freq;
        while (range_ < (1u << 24)) {
            shift_low();
            range_ <<= 8;
        }
    }

    void finish() {
        for (int i = 0; i < 5; ++i) shift_low();
    }

private:
    void shift_low() {
        if (uint32_t(low_) < 0xFF000000u || (low_ >> 32) != 0) {
            const uint8_t carry = uint8_t(low_ >> 32);
            out_.push_back(uint8_t(cache_ + carry));
            for (; pending_ > 0; --pending_) out_.push_back(uint8_t(0xFF + carry));
            cache_ = uint8_t(low_ >> 24);
        } else {
            ++pending_;
        }
        low_ = (low_ << 8) & 0xFFFFFFFFull;
    }

    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    uint64_t pending_ = 0;
    std::vector<uint8_t>& out_;
};

class RangeDecoder {
public:
    RangeDecoder(const uint8_t* data, size_t size) : p_(data), end_(data + size) {
        for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | read_byte();
    }

    uint32_t decode_target(uint32_t total) {
        r_ = range_ / total;
        const uint32_t t = code_ / r_;
        return t >= total ? total - 1 : t;
    }

    void consume(uint32_t cum, uint32_t freq) {
        code_ -= cum * r_;
        range_ = freq * r_;
        while (range_ < (1u << 24)) {
            code_ = (code_ << 8) | read_byte();
            range_ <<= 8;
        }
    }

private:
    uint8_t read_byte() {
        if (p_ == end_) fail("parallel_coder", "entropy stream truncated");
        return *p_++;
    }

    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
    uint32_t r_ = 0;
    const uint8_t* p_;
    const uint8_t* end_;
};

inline void run_on_threads(int jobs, int threads, const std::function<void(int)>& work) {
    if (threads <= 1 || jobs <= 1) {
        for (int k = 0; k < jobs; ++k) work(k);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr error = nullptr;
    std::mutex error_mutex;
    const int workers = std::min(threads, jobs);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const int k = next.fetch_add(1);
                if (k >= jobs) return;
                try {
                    work(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Entropy-coded payload of N independent round-robin streams plus the
// per-stream length header needed to decode them in parallel.
struct StreamSet {
    uint16_t stream_count = 1;
    HeaderMode header_mode = HeaderMode::naive;
    std::vector<uint32_t> lengths;
    std::vector<uint8_t> payload;

    size_t payload_bytes() const { return payload.size(); }

    // Serialized size of the per-stream length header alone.
    size_t header_bytes() const {
        if (header_mode == HeaderMode::naive) return 4 * size_t(stream_count);
        size_t total_payload = payload.size();
        const uint32_t mean = uint32_t(total_payload / stream_count);
        size_t n = 4;
        for (uint32_t len : lengths) n += uleb128_size(zigzag_encode(int64_t(len) - int64_t(mean)));
        return n;
    }

    std::vector<uint8_t> serialize() const {
        std::vector<uint8_t> out;
        out.reserve(16 + header_bytes() + payload.size());
        out.push_back('P');
        out.push_back('E');
        out.push_back('C');
        out.push_back('1');
        put_u16(out, stream_count);
        out.push_back(uint8_t(header_mode));
        put_u32(out, crc32(payload));
        if (header_mode == HeaderMode::naive) {
            for (uint32_t len : lengths) put_u32(out, len);
        } else {
            const uint32_t mean = uint32_t(payload.size() / stream_count);
            put_u32(out, mean);
            for (uint32_t len : lengths)
                put_uleb128(out, zigzag_encode(int64_t(len) - int64_t(mean)));
        }
        out.insert(out.end(), payload.begin(), payload.end());
        return out;
    }

    static StreamSet parse(std::span<const uint8_t> bytes) {
        ByteReader r(bytes.data(), bytes.size(), "parallel_coder");
        if (r.u8() != 'P' || r.u8() != 'E' || r.u8() != 'C' || r.u8() != '1')
            fail("parallel_coder", "bad stream-set magic");
        StreamSet ss;
        ss.stream_count = r.u16();
        if (ss.stream_count < kMinStreams || ss.stream_count > kMaxStreams)
            fail("parallel_coder", "stream count " + std::to_string(ss.stream_count) +
                                       " outside [1, 1024]");
        const uint8_t mode = r.u8();
        if (mode > 1) fail("parallel_coder", "unknown header mode " + std::to_string(mode));
        ss.header_mode = HeaderMode(mode);
        const uint32_t stored_crc = r.u32();

        ss.lengths.resize(ss.stream_count);
        uint64_t total = 0;
        if (ss.header_mode == HeaderMode::naive) {
            for (uint32_t& len : ss.lengths) {
                len = r.u32();
                total += len;
            }
        } else {
            const uint32_t mean = r.u32();
            for (uint32_t& len : ss.lengths) {
                const int64_t v = int64_t(mean) + zigzag_decode(read_uleb128(r));
                if (v < 0 || v > int64_t(bytes.size()))
                    fail("parallel_coder", "negative or oversized stream length in header");
                len = uint32_t(v);
                total += len;
            }
        }
        if (total != r.remaining())
            fail("parallel_coder", "header declares " + std::to_string(total) +
                                       " payload byte(s) but " + std::to_string(r.remaining()) +
                                       " present");
        const uint8_t* p = r.bytes(size_t(total));
        ss.payload.assign(p, p + total);
        if (crc32(ss.payload) != stored_crc)
            fail("parallel_coder", "payload checksum mismatch");
        return ss;
    }
};

namespace detail {

inline size_t stream_symbol_count(size_t total, int stream, int stream_count) {
    if (size_t(stream) >= total) return 0;
    return (total - size_t(stream) - 1) / size_t(stream_count) + 1;
}

}  // namespace detail

// Round-robin split of the symbol sequence into `stream_count` independently
// coded range-coder streams. Streams may be encoded on several threads; the
// output bytes are identical for any thread count.
inline StreamSet encode_streams(std::span<const int8_t> symbols,
                                std::span<const uint8_t> rho_levels, const SymbolModel& model,
                                int stream_count, HeaderMode header_mode, int threads = 1) {
    if (stream_count < kMinStreams || stream_count > kMaxStreams)
        fail("parallel_coder", "stream count " + std::to_string(stream_count) +
                                   " outside [1, 1024]");
    if (symbols.size() != rho_levels.size())
        fail("parallel_coder", "symbol and rho-level counts differ");

    std::vector<std::vector<uint8_t>> buffers;
    buffers.resize(size_t(stream_count));
    detail::run_on_threads(stream_count, threads, [&](int k) {
        const size_t n = detail::stream_symbol_count(symbols.size(), k, stream_count);
        if (n == 0) return;
        detail::RangeEncoder enc(buffers[size_t(k)]);
        for (size_t t = 0; t < n; ++t) {
            const size_t i = size_t(k) + t * size_t(stream_count);
            const int level = rho_levels[i];
            if (level >= model.levels()) fail("parallel_coder", "rho level outside the model");
            const int idx = int(symbols[i]) - kSymbolMin;
            enc.encode(model.cum[size_t(level)][size_t(idx)],
                       model.freq[size_t(level)][size_t(idx)], SymbolModel::kTotal);
        }
        enc.finish();
    });

    StreamSet ss;
    ss.stream_count = uint16_t(stream_count);
    ss.header_mode = header_mode;
    ss.lengths.reserve(size_t(stream_count));
    size_t total = 0;
    for (const auto& b : buffers) {
        ss.lengths.push_back(uint32_t(b.size()));
        total += b.size();
    }
    ss.payload.reserve(total);
    for (const auto& b : buffers) ss.payload.insert(ss.payload.end(), b.begin(), b.end());
    return ss;
}

inline std::vector<int8_t> decode_streams(const StreamSet& ss,
                                          std::span<const uint8_t> rho_levels,
                                          const SymbolModel& model, size_t count,
                                          int threads = 1) {
    if (ss.stream_count < kMinStreams || ss.stream_count > kMaxStreams)
        fail("parallel_coder", "stream count outside [1, 1024]");
    if (rho_levels.size() != count)
        fail("parallel_coder", "rho-level count does not match the symbol count");
    uint64_t total = 0;
    for (uint32_t len : ss.lengths) total += len;
    if (ss.lengths.size() != ss.stream_count || total != ss.payload.size())
        fail("parallel_coder", "stream lengths do not match the payload size");

    std::vector<size_t> offsets(size_t(ss.stream_count) + 1, 0);
    for (size_t k = 0; k < ss.lengths.size(); ++k) offsets[k + 1] = offsets[k] + ss.lengths[k];

    std::vector<int8_t> out(count);
    detail::run_on_threads(ss.stream_count, threads, [&](int k) {
        const size_t n = detail::stream_symbol_count(count, k, ss.stream_count);
        if (n == 0) {
            if (ss.lengths[size_t(k)] != 0)
                fail("parallel_coder", "unexpected bytes in an empty stream");
            return;
        }
        detail::RangeDecoder dec(ss.payload.data() + offsets[size_t(k)], ss.lengths[size_t(k)]);
        for (size_t t = 0; t < n; ++t) {
            const size_t i = size_t(k) + t * size_t(ss.stream_count);
            const int level = rho_levels[i];
            if (level >= model.levels()) fail("parallel_coder", "rho level outside the model");
            const auto& cum = model.cum[size_t(level)];
            const uint32_t target = dec.decode_target(SymbolModel::kTotal);
            // cum is strictly increasing (no zero frequencies), so the symbol
            // bin is found by binary search.
            const auto it = std::upper_bound(cum.begin(), cum.end(), target);
            const int idx = int(it - cum.begin()) - 1;
            dec.consume(cum[size_t(idx)], model.freq[size_t(level)][size_t(idx)]);
            out[i] = int8_t(idx + kSymbolMin);
        }
    });
    return out;
}

// Header cost as a fraction of the payload. The (payload, N) form prices the
// canonical near-uniform split that round-robin interleaving produces.
inline double header_overhead(size_t payload_bytes, int stream_count, HeaderMode mode) {
    if (payload_bytes == 0) fail("parallel_coder", "payload must be non-empty");
    if (stream_count < kMinStreams || stream_count > kMaxStreams)
        fail("parallel_coder", "stream count outside [1, 1024]");
    if (mode == HeaderMode::naive) return 4.0 * stream_count / double(payload_bytes);
    const uint32_t mean = uint32_t(payload_bytes / size_t(stream_count));
    const size_t rem = payload_bytes % size_t(stream_count);
    size_t bytes = 4;
    for (int k = 0; k < stream_count; ++k) {
        const uint32_t len = mean + (size_t(k) < rem ? 1 : 0);
        bytes += uleb128_size(zigzag_encode(int64_t(len) - int64_t(mean)));
    }
    return double(bytes) / double(payload_bytes);
}

inline double header_overhead(const StreamSet& ss) {
    if (ss.payload.empty()) fail("parallel_coder", "payload must be non-empty");
    return double(ss.header_bytes()) / double(ss.payload.size());
}

}  // namespace lvc
