#include <doctest.h>

#include <cstring>

#include "kfrl/cftf.hpp"
#include "kfrl/feature_sequence.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kfrl;

namespace {

std::vector<unsigned char> make_cftf_bytes(std::uint32_t version, std::uint32_t t, std::uint32_t n,
                                           std::uint32_t c, const std::vector<float>& payload) {
    std::vector<unsigned char> bytes(20 + payload.size() * 4);
    bytes[0] = 'C';
    bytes[1] = 'F';
    bytes[2] = 'T';
    bytes[3] = 'F';
    detail::write_u32_le(version, bytes.data() + 4);
    detail::write_u32_le(t, bytes.data() + 8);
    detail::write_u32_le(n, bytes.data() + 12);
    detail::write_u32_le(c, bytes.data() + 16);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &payload[i], 4);
        detail::write_u32_le(bits, bytes.data() + 20 + i * 4);
    }
    return bytes;
}

}  // namespace

TEST_SUITE_BEGIN("feature-model");

TEST_CASE("sequence construction validates shape") {
    CHECK_NOTHROW(FeatureSequence(1, 1, 1, {0.5}));
    CHECK_THROWS_AS(FeatureSequence(0, 1, 1, {}), Error);
    CHECK_THROWS_AS(FeatureSequence(2, 1, 2, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("load decodes declared contents") {
    testutil::TempDir dir("load");
    const auto path = dir.file("a.cftf");
    testutil::write_bytes(path, make_cftf_bytes(1, 2, 1, 2, {1.f, 0.f, 0.f, 1.f}));

    const FeatureSequence seq = load_feature_file(path);
    CHECK(seq.num_frames() == 2);
    CHECK(seq.num_patches() == 1);
    CHECK(seq.channels() == 2);
    CHECK(seq.data() == std::vector<double>{1.0, 0.0, 0.0, 1.0});
}

TEST_CASE("load rejects malformed files with byte offsets") {
    testutil::TempDir dir("badfiles");

    SUBCASE("bad magic") {
        const auto path = dir.file("magic.cftf");
        auto bytes = make_cftf_bytes(1, 1, 1, 1, {0.f});
        bytes[0] = 'X';
        testutil::write_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(load_feature_file(path), doctest::Contains("byte 0"), Error);
        try {
            load_feature_file(path);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_magic);
        }
    }

    SUBCASE("unsupported version") {
        const auto path = dir.file("version.cftf");
        testutil::write_bytes(path, make_cftf_bytes(2, 1, 1, 1, {0.f}));
        try {
            load_feature_file(path);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::version_unsupported);
        }
    }

    SUBCASE("declared shape does not match payload") {
        const auto path = dir.file("short.cftf");
        testutil::write_bytes(path, make_cftf_bytes(1, 3, 1, 2, {1.f, 2.f, 3.f, 4.f}));
        try {
            load_feature_file(path);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::dimension_mismatch);
            CHECK(std::string(e.what()).find("byte 20") != std::string::npos);
        }
    }

    SUBCASE("trailing bytes") {
        const auto path = dir.file("trailing.cftf");
        auto bytes = make_cftf_bytes(1, 1, 1, 1, {0.f});
        bytes.push_back(0);
        testutil::write_bytes(path, bytes);
        CHECK_THROWS_AS(load_feature_file(path), Error);
    }

    SUBCASE("zero dimension") {
        const auto path = dir.file("zerodim.cftf");
        testutil::write_bytes(path, make_cftf_bytes(1, 0, 1, 1, {}));
        try {
            load_feature_file(path);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::dimension_mismatch);
            CHECK(std::string(e.what()).find("byte 8") != std::string::npos);
        }
    }

    SUBCASE("non-finite payload") {
        const auto path = dir.file("nan.cftf");
        testutil::write_bytes(
            path, make_cftf_bytes(1, 2, 1, 2, {1.f, std::numeric_limits<float>::quiet_NaN(), 0.f, 1.f}));
        try {
            load_feature_file(path);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::non_finite_value);
            CHECK(std::string(e.what()).find("byte 24") != std::string::npos);
        }
    }
}

TEST_CASE("save emits the exact layout for the smallest legal sequence") {
    testutil::TempDir dir("save");
    const auto path = dir.file("tiny.cftf");
    save_feature_file(FeatureSequence(1, 1, 1, {0.5}), path);

    const auto bytes = testutil::read_bytes(path);
    REQUIRE(bytes.size() == 24);
    CHECK(bytes[0] == 'C');
    CHECK(bytes[1] == 'F');
    CHECK(bytes[2] == 'T');
    CHECK(bytes[3] == 'F');
    CHECK(detail::read_u32_le(bytes.data() + 4) == 1);
    CHECK(detail::read_u32_le(bytes.data() + 8) == 1);
    CHECK(detail::read_u32_le(bytes.data() + 12) == 1);
    CHECK(detail::read_u32_le(bytes.data() + 16) == 1);
    const float value = detail::bits_to_float(detail::read_u32_le(bytes.data() + 20));
    CHECK(value == 0.5f);
}

TEST_CASE("save rejects values that are not finite float32") {
    testutil::TempDir dir("savebad");
    SUBCASE("NaN") {
        const FeatureSequence seq(1, 1, 1, {std::numeric_limits<double>::quiet_NaN()});
        CHECK_THROWS_AS(save_feature_file(seq, dir.file("nan.cftf")), Error);
    }
    SUBCASE("double overflowing float32") {
        const FeatureSequence seq(1, 1, 1, {1e300});
        CHECK_THROWS_AS(save_feature_file(seq, dir.file("big.cftf")), Error);
    }
}

TEST_CASE("write(load(f)) is byte-identical over random valid files") {
    testutil::TempDir dir("roundtrip1");
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t t = 1 + rng.bounded(6);
        const std::size_t n = 1 + rng.bounded(3);
        const std::size_t c = 1 + rng.bounded(4);
        std::vector<float> payload(t * n * c);
        for (float& v : payload) v = static_cast<float>(200.0 * rng.uniform01() - 100.0);

        const auto original = dir.file("in.cftf");
        const auto rewritten = dir.file("out.cftf");
        testutil::write_bytes(original, make_cftf_bytes(1, static_cast<std::uint32_t>(t),
                                                        static_cast<std::uint32_t>(n),
                                                        static_cast<std::uint32_t>(c), payload));
        save_feature_file(load_feature_file(original), rewritten);
        CHECK(testutil::read_bytes(original) == testutil::read_bytes(rewritten));
    }
}

TEST_CASE("load(save(x)) reproduces the sequence elementwise") {
    testutil::TempDir dir("roundtrip2");
    Rng rng(202);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t t = 1 + rng.bounded(8);
        const std::size_t n = 1 + rng.bounded(4);
        const std::size_t c = 1 + rng.bounded(6);
        const FeatureSequence seq = oracle::random_float_sequence(t, n, c, rng);
        const auto path = dir.file("seq.cftf");
        save_feature_file(seq, path);
        CHECK(load_feature_file(path) == seq);
    }
}

TEST_CASE("gather_frames identity and single selection") {
    Rng rng(7);
    const FeatureSequence seq = oracle::random_sequence(3, 2, 2, rng);

    FrameIndexSet all;
    all.indices = {0, 1, 2};
    CHECK(gather_frames(seq, all) == seq);

    FrameIndexSet third;
    third.indices = {2};
    const FeatureSequence picked = gather_frames(seq, third);
    CHECK(picked.num_frames() == 1);
    CHECK(picked.num_patches() == 2);
    CHECK(picked.channels() == 2);
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(picked.at(0, n, c) == seq.at(2, n, c));
        }
    }
}

TEST_CASE("gather_frames matches the naive copy loop") {
    Rng rng(303);
    for (int trial = 0; trial < 200; ++trial) {
        const FeatureSequence seq = oracle::random_sequence(16, 1 + rng.bounded(3), 1 + rng.bounded(4), rng);
        // random sorted index subset of size 5
        std::vector<std::size_t> pool(16);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        auto chosen = sample_without_replacement(pool, 5, rng);
        std::sort(chosen.begin(), chosen.end());
        FrameIndexSet idx(chosen);

        const FeatureSequence gathered = gather_frames(seq, idx);
        CHECK(gathered.data() == oracle::gather(seq, idx.indices));
        CHECK(gathered.num_patches() == seq.num_patches());
        CHECK(gathered.channels() == seq.channels());
    }
}

TEST_CASE("gather_frames rejects out-of-range indices") {
    Rng rng(5);
    const FeatureSequence seq = oracle::random_sequence(3, 1, 2, rng);
    FrameIndexSet bad;
    bad.indices = {0, 3};
    try {
        gather_frames(seq, bad);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::index_out_of_range);
    }
}

TEST_SUITE_END();
