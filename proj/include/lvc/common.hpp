#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lvc {

// Every failure in the library is reported through this type; `where` names
// the subsystem so CLI error lines can say which stage rejected the input.
class Error : public std::runtime_error {
public:
    Error(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), module_(std::move(where)) {}

    const std::string& module() const { return module_; }

private:
    std::string module_;
};

[[noreturn]] inline void fail(const std::string& module, const std::string& msg) {
    throw Error(module, msg);
}

// Single rounding rule used across the toolkit: round half away from zero.
inline double round_half_away(double v) { return std::round(v); }
inline long lround_half_away(double v) { return std::lround(v); }

inline uint8_t clamp_u8(long v) {
    return static_cast<uint8_t>(std::clamp(v, 0L, 255L));
}

inline uint8_t round_clamp_u8(double v) { return clamp_u8(lround_half_away(v)); }

// ---- little-endian scalar IO on byte buffers ----

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(uint8_t(v & 0xFF));
    out.push_back(uint8_t(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t((v >> (8 * i)) & 0xFF));
}

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size, std::string module)
        : data_(data), size_(size), module_(std::move(module)) {}

    size_t remaining() const { return size_ - pos_; }
    size_t position() const { return pos_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    const uint8_t* bytes(size_t n) {
        need(n);
        const uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }

private:
    void need(size_t n) const {
        if (size_ - pos_ < n)
            fail(module_, "truncated input: need " + std::to_string(n) + " byte(s) at offset " +
                              std::to_string(pos_) + ", have " + std::to_string(size_ - pos_));
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    std::string module_;
};

// ---- CRC-32 (reflected, poly 0xEDB88320) ----

inline uint32_t crc32(const uint8_t* data, size_t n) {
    static const std::array<uint32_t, 256> table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return ~c;
}

inline uint32_t crc32(const std::vector<uint8_t>& v) { return crc32(v.data(), v.size()); }

// ---- LEB128 / zigzag for the optimized stream header ----

inline void put_uleb128(std::vector<uint8_t>& out, uint64_t v) {
    do {
        uint8_t b = v & 0x7F;
        v >>= 7;
        if (v != 0) b |= 0x80;
        out.push_back(b);
    } while (v != 0);
}

inline uint64_t read_uleb128(ByteReader& r) {
    uint64_t v = 0;
    int shift = 0;
    for (;;) {
        uint8_t b = r.u8();
        v |= uint64_t(b & 0x7F) << shift;
        if ((b & 0x80) == 0) return v;
        shift += 7;
        if (shift >= 64) fail("parallel_coder", "malformed LEB128 value");
    }
}

inline uint64_t zigzag_encode(int64_t v) { return (uint64_t(v) << 1) ^ uint64_t(v >> 63); }
inline int64_t zigzag_decode(uint64_t v) { return int64_t(v >> 1) ^ -int64_t(v & 1); }

inline size_t uleb128_size(uint64_t v) {
    size_t n = 1;
    while (v >>= 7) ++n;
    return n;
}

}  // namespace lvc
