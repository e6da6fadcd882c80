#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <random>
#include <thread>

#include "lvc/coder.hpp"

namespace {

const lvc::SymbolModel& model() {
    static const lvc::SymbolModel m =
        lvc::build_symbol_model(lvc::Bottleneck::make(lvc::LatentMode::step_fifth));
    return m;
}

std::vector<int8_t> model_symbols(size_t n, uint8_t level, uint32_t seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist(0.0, model().sigma[level]);
    std::vector<int8_t> out(n);
    for (auto& s : out) s = int8_t(std::clamp(long(std::lround(dist(rng))), -127L, 127L));
    return out;
}

std::vector<uint8_t> random_levels(size_t n, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> dist(0, 255);
    std::vector<uint8_t> out(n);
    for (auto& l : out) l = uint8_t(dist(rng));
    return out;
}

std::vector<int8_t> symbols_for_levels(const std::vector<uint8_t>& levels, uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<int8_t> out(levels.size());
    for (size_t i = 0; i < levels.size(); ++i) {
        std::normal_distribution<double> dist(0.0, model().sigma[levels[i]]);
        out[i] = int8_t(std::clamp(long(std::lround(dist(rng))), -127L, 127L));
    }
    return out;
}

}  // namespace

TEST_CASE("empty symbol array gives header-only stream sets") {
    const lvc::StreamSet ss =
        lvc::encode_streams({}, {}, model(), 16, lvc::HeaderMode::naive);
    CHECK(ss.payload.empty());
    CHECK(ss.lengths.size() == 16);
    for (uint32_t len : ss.lengths) CHECK(len == 0);
    const auto decoded = lvc::decode_streams(ss, {}, model(), 0);
    CHECK(decoded.empty());
}

TEST_CASE("lossless round-trip across stream counts and header modes") {
    for (int n_streams : {1, 8, 256, 512, 1024}) {
        for (lvc::HeaderMode mode : {lvc::HeaderMode::naive, lvc::HeaderMode::optimized}) {
            const auto levels = random_levels(20000, uint32_t(n_streams) * 7 + unsigned(mode));
            const auto symbols = symbols_for_levels(levels, uint32_t(n_streams) + 3);
            const lvc::StreamSet ss =
                lvc::encode_streams(symbols, levels, model(), n_streams, mode);
            const auto parsed = lvc::StreamSet::parse(ss.serialize());
            const auto decoded = lvc::decode_streams(parsed, levels, model(), symbols.size());
            CHECK(decoded == symbols);
        }
    }
}

TEST_CASE("adversarial extreme symbols survive the round trip") {
    for (int8_t fill : {int8_t(-127), int8_t(127)}) {
        const std::vector<int8_t> symbols(5000, fill);
        const std::vector<uint8_t> levels(5000, 0);  // worst case: tiny sigma
        const lvc::StreamSet ss =
            lvc::encode_streams(symbols, levels, model(), 8, lvc::HeaderMode::naive);
        CHECK(lvc::decode_streams(ss, levels, model(), symbols.size()) == symbols);
    }
}

TEST_CASE("property: random symbols, levels, stream counts round-trip") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const size_t n = rng() % 3000;
        const int n_streams = 1 + int(rng() % 1024);
        const lvc::HeaderMode mode =
            rng() % 2 == 0 ? lvc::HeaderMode::naive : lvc::HeaderMode::optimized;
        std::vector<int8_t> symbols(n);
        std::vector<uint8_t> levels(n);
        for (size_t i = 0; i < n; ++i) {
            symbols[i] = int8_t(int(rng() % 255) - 127);
            levels[i] = uint8_t(rng() % 256);
        }
        const lvc::StreamSet ss = lvc::encode_streams(symbols, levels, model(), n_streams, mode);
        const auto parsed = lvc::StreamSet::parse(ss.serialize());
        CHECK(lvc::decode_streams(parsed, levels, model(), n) == symbols);
    }
}

TEST_CASE("streams decode independently and in any order") {
    const auto levels = random_levels(9973, 1);
    const auto symbols = symbols_for_levels(levels, 2);
    const lvc::StreamSet ss =
        lvc::encode_streams(symbols, levels, model(), 16, lvc::HeaderMode::naive);

    // Decode single streams in reverse order and reassemble.
    std::vector<int8_t> out(symbols.size());
    std::vector<size_t> offsets(17, 0);
    for (size_t k = 0; k < 16; ++k) offsets[k + 1] = offsets[k] + ss.lengths[k];
    for (int k = 15; k >= 0; --k) {
        lvc::StreamSet single;
        single.stream_count = 1;
        single.header_mode = lvc::HeaderMode::naive;
        single.lengths = {ss.lengths[size_t(k)]};
        single.payload.assign(ss.payload.begin() + long(offsets[size_t(k)]),
                              ss.payload.begin() + long(offsets[size_t(k) + 1]));
        std::vector<uint8_t> stream_levels;
        std::vector<size_t> positions;
        for (size_t i = size_t(k); i < symbols.size(); i += 16) {
            stream_levels.push_back(levels[i]);
            positions.push_back(i);
        }
        const auto decoded =
            lvc::decode_streams(single, stream_levels, model(), stream_levels.size());
        for (size_t t = 0; t < positions.size(); ++t) out[positions[t]] = decoded[t];
    }
    CHECK(out == symbols);
}

TEST_CASE("payload length stays near the rate estimate") {
    const size_t n = 1000000;
    const uint8_t level = 170;
    const auto symbols = model_symbols(n, level, 42);
    const std::vector<uint8_t> levels(n, level);
    const double ideal = lvc::rate_estimate(symbols, levels, model());
    for (int n_streams : {1, 512}) {
        const lvc::StreamSet ss =
            lvc::encode_streams(symbols, levels, model(), n_streams, lvc::HeaderMode::naive);
        const double bits = double(ss.payload.size()) * 8.0;
        CHECK(bits <= ideal * 1.001 + 48.0 * n_streams);
    }
}

TEST_CASE("coded length is invariant to the stream count up to flush cost") {
    const size_t n = 300000;
    const uint8_t level = 170;
    const auto symbols = model_symbols(n, level, 11);
    const std::vector<uint8_t> levels(n, level);
    const lvc::StreamSet one =
        lvc::encode_streams(symbols, levels, model(), 1, lvc::HeaderMode::naive);
    const lvc::StreamSet many =
        lvc::encode_streams(symbols, levels, model(), 512, lvc::HeaderMode::naive);
    const double delta =
        std::fabs(double(many.payload.size()) - double(one.payload.size())) * 8.0;
    const double header_delta =
        std::fabs(double(many.header_bytes()) - double(one.header_bytes())) * 8.0;
    CHECK(delta <= header_delta + 512.0 * 48.0);
}

TEST_CASE("header overhead arithmetic") {
    SECTION("one stream is four bytes") {
        CHECK(lvc::header_overhead(52513, 1, lvc::HeaderMode::naive) ==
              Catch::Approx(4.0 / 52513.0).epsilon(1e-12));
    }

    SECTION("the calibrated 512-thread point") {
        CHECK(lvc::header_overhead(52513, 512, lvc::HeaderMode::naive) ==
              Catch::Approx(2048.0 / 52513.0).epsilon(1e-12));
        CHECK(lvc::header_overhead(52513, 512, lvc::HeaderMode::naive) ==
              Catch::Approx(0.0390).margin(5e-5));
    }

    SECTION("optimized headers beat naive by at least the paper's factor") {
        const double naive = lvc::header_overhead(52513, 512, lvc::HeaderMode::naive);
        const double opt = lvc::header_overhead(52513, 512, lvc::HeaderMode::optimized);
        CHECK(opt / naive <= 0.55);
    }

    SECTION("overhead is monotone non-decreasing in the stream count") {
        for (lvc::HeaderMode mode : {lvc::HeaderMode::naive, lvc::HeaderMode::optimized}) {
            double prev = 0.0;
            for (int n : {1, 2, 8, 64, 256, 512, 1024}) {
                const double o = lvc::header_overhead(100000, n, mode);
                CHECK(o >= prev);
                prev = o;
            }
        }
    }

    SECTION("reported overhead equals the serialized header size") {
        const auto levels = random_levels(50000, 5);
        const auto symbols = symbols_for_levels(levels, 6);
        for (lvc::HeaderMode mode : {lvc::HeaderMode::naive, lvc::HeaderMode::optimized}) {
            const lvc::StreamSet ss = lvc::encode_streams(symbols, levels, model(), 512, mode);
            const size_t total = ss.serialize().size();
            const size_t fixed = 4 + 2 + 1 + 4;  // magic, N, mode, checksum
            CHECK(total - fixed - ss.payload.size() == ss.header_bytes());
            CHECK(lvc::header_overhead(ss) ==
                  Catch::Approx(double(ss.header_bytes()) / double(ss.payload.size()))
                      .epsilon(1e-12));
        }
    }

    SECTION("empty payload is rejected") {
        CHECK_THROWS_AS(lvc::header_overhead(0, 8, lvc::HeaderMode::naive), lvc::Error);
    }
}

TEST_CASE("malformed stream sets are structured errors") {
    const auto levels = random_levels(4096, 8);
    const auto symbols = symbols_for_levels(levels, 9);
    const lvc::StreamSet ss =
        lvc::encode_streams(symbols, levels, model(), 8, lvc::HeaderMode::naive);
    const std::vector<uint8_t> bytes = ss.serialize();

    SECTION("bad magic") {
        auto bad = bytes;
        bad[0] ^= 0xFF;
        CHECK_THROWS_AS(lvc::StreamSet::parse(bad), lvc::Error);
    }

    SECTION("truncated payload") {
        const std::vector<uint8_t> bad(bytes.begin(), bytes.end() - 5);
        CHECK_THROWS_AS(lvc::StreamSet::parse(bad), lvc::Error);
    }

    SECTION("corrupted payload fails the checksum") {
        auto bad = bytes;
        bad[bytes.size() - 3] ^= 0x40;
        try {
            lvc::StreamSet::parse(bad);
            FAIL("expected an error");
        } catch (const lvc::Error& e) {
            CHECK(std::string(e.what()).find("checksum") != std::string::npos);
        }
    }

    SECTION("stream count outside range") {
        CHECK_THROWS_AS(lvc::encode_streams(symbols, levels, model(), 0,
                                            lvc::HeaderMode::naive),
                        lvc::Error);
        CHECK_THROWS_AS(lvc::encode_streams(symbols, levels, model(), 1025,
                                            lvc::HeaderMode::naive),
                        lvc::Error);
    }
}

TEST_CASE("thread count never changes the bytes") {
    const auto levels = random_levels(120000, 12);
    const auto symbols = symbols_for_levels(levels, 13);
    const lvc::StreamSet base =
        lvc::encode_streams(symbols, levels, model(), 64, lvc::HeaderMode::optimized, 1);
    for (int threads : {2, 4, 7}) {
        const lvc::StreamSet ss =
            lvc::encode_streams(symbols, levels, model(), 64, lvc::HeaderMode::optimized,
                                threads);
        CHECK(ss.payload == base.payload);
        CHECK(ss.lengths == base.lengths);
        CHECK(lvc::decode_streams(ss, levels, model(), symbols.size(), threads) == symbols);
    }
}

TEST_CASE("parallel decode beats single-threaded decode on large payloads") {
    const unsigned cores = std::thread::hardware_concurrency();
    if (cores < 8) SKIP("needs >= 8 cores for the timing contract, have " << cores);

    const size_t n = 10000000;
    const uint8_t level = 180;
    const auto symbols = model_symbols(n, level, 77);
    const std::vector<uint8_t> levels(n, level);
    const lvc::StreamSet ss =
        lvc::encode_streams(symbols, levels, model(), 64, lvc::HeaderMode::naive, 8);

    auto time_decode = [&](int threads) {
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto out = lvc::decode_streams(ss, levels, model(), n, threads);
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
            REQUIRE(out.size() == n);
        }
        return best;
    };
    CHECK(time_decode(8) < time_decode(1));
}
