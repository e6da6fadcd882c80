#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "lvc/frame.hpp"
#include "support/synthetic.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("read_yuv420 splits a raw file into frames") {
    const auto path = temp_file("lvc_two_frames.yuv");
    std::vector<uint8_t> bytes(48);
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = uint8_t(i);
    write_bytes(path, bytes);

    const auto frames = lvc::read_yuv420(path.string(), 4, 4);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].y.samples.size() == 16);
    CHECK(frames[0].u.samples.size() == 4);
    CHECK(frames[0].v.samples.size() == 4);
    CHECK(frames[0].y.at(0, 0) == 0);
    CHECK(frames[0].u.at(0, 0) == 16);
    CHECK(frames[0].v.at(0, 0) == 20);
    CHECK(frames[1].y.at(0, 0) == 24);
}

TEST_CASE("read_yuv420 of an empty file yields no frames") {
    const auto path = temp_file("lvc_empty.yuv");
    write_bytes(path, {});
    CHECK(lvc::read_yuv420(path.string(), 4, 4).empty());
}

TEST_CASE("read_yuv420 rejects truncated files with byte counts") {
    const auto path = temp_file("lvc_truncated.yuv");
    write_bytes(path, std::vector<uint8_t>(47));
    try {
        lvc::read_yuv420(path.string(), 4, 4);
        FAIL("expected an error");
    } catch (const lvc::Error& e) {
        CHECK(e.module() == "frame_io");
        CHECK(std::string(e.what()).find("47") != std::string::npos);
        CHECK(std::string(e.what()).find("24") != std::string::npos);
    }
}

TEST_CASE("odd dimensions are rejected") {
    CHECK_THROWS_AS(lvc::read_yuv420("/nonexistent", 5, 4), lvc::Error);
    CHECK_THROWS_AS(lvc::Frame420(4, 3), lvc::Error);
}

TEST_CASE("write_yuv420 byte count and round-trip") {
    std::mt19937 rng(99);
    std::vector<lvc::Frame420> frames;
    for (int k = 0; k < 3; ++k) frames.push_back(synth::random_frame(8, 8, rng));

    const auto path = temp_file("lvc_roundtrip.yuv");
    const size_t written = lvc::write_yuv420(frames, path.string());
    CHECK(written == 3 * 96);

    const auto back = lvc::read_yuv420(path.string(), 8, 8);
    REQUIRE(back.size() == frames.size());
    for (size_t k = 0; k < frames.size(); ++k) CHECK(back[k] == frames[k]);
}

TEST_CASE("write_yuv420 rejects mixed frame sizes") {
    std::vector<lvc::Frame420> frames{lvc::Frame420(4, 4), lvc::Frame420(8, 8)};
    CHECK_THROWS_AS(lvc::write_yuv420(frames, temp_file("lvc_mixed.yuv").string()), lvc::Error);
}

TEST_CASE("subtract and add_clamped") {
    std::mt19937 rng(5);
    const lvc::Frame420 a = synth::random_frame(16, 8, rng);
    const lvc::Frame420 b = synth::random_frame(16, 8, rng);

    SECTION("a - a is all zero") {
        const lvc::Residual420 r = lvc::subtract(a, a);
        for (int16_t v : r.y.samples) CHECK(v == 0);
        for (int16_t v : r.u.samples) CHECK(v == 0);
    }

    SECTION("add_clamped saturates at 255") {
        lvc::Frame420 bright(4, 4);
        for (auto* p : {&bright.y, &bright.u, &bright.v})
            for (auto& s : p->samples) s = 250;
        lvc::Residual420 r{lvc::ResidualPlane(4, 4), lvc::ResidualPlane(2, 2),
                           lvc::ResidualPlane(2, 2)};
        for (auto* rp : {&r.y, &r.u, &r.v})
            for (auto& s : rp->samples) s = 10;
        const lvc::Frame420 out = lvc::add_clamped(bright, r);
        for (const auto* p : {&out.y, &out.u, &out.v})
            for (uint8_t s : p->samples) CHECK(s == 255);
    }

    SECTION("subtract then add_clamped recovers the original") {
        CHECK(lvc::add_clamped(b, lvc::subtract(a, b)) == a);
    }

    SECTION("dimension mismatch is an error") {
        const lvc::Frame420 c(8, 8);
        CHECK_THROWS_AS(lvc::subtract(a, c), lvc::Error);
    }
}
