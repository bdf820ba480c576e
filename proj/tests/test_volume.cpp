#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "fidreg/error.hpp"
#include "fidreg/volume.hpp"
#include "test_support.hpp"

using namespace fidreg;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

}  // namespace

TEST_CASE("zero volume reads back") {
    const auto dir = testing::temp_dir("vol_zero");
    const Volume v({2, 2, 2}, Vec3::Ones(), Vec3::Zero(), std::int16_t{0});
    write_volume(v, dir / "z.vol");
    const auto r = read_volume(dir / "z.vol");
    CHECK(r.size() == 8);
    CHECK(std::all_of(r.voxels().begin(), r.voxels().end(), [](auto x) { return x == 0; }));
    CHECK(r == v);
}

TEST_CASE("file layout is header then little-endian payload") {
    const auto dir = testing::temp_dir("vol_layout");
    const Volume v({2, 1, 1}, Vec3(0.5, 1, 2.25), Vec3(-1.5, 0, 3), std::vector<std::int16_t>{-1024, 258});
    write_volume(v, dir / "l.vol");
    std::string expected = "VOL1\nDIMS 2 1 1\nSPACING 0.5 1 2.25\nORIGIN -1.5 0 3\nDTYPE int16le\nDATA\n";
    expected += std::string{'\x00', '\xfc', '\x02', '\x01'};
    CHECK(slurp(dir / "l.vol") == expected);
}

TEST_CASE("truncated payload is reported with byte counts") {
    const auto dir = testing::temp_dir("vol_trunc");
    std::string bytes = "VOL1\nDIMS 2 2 2\nSPACING 1 1 1\nORIGIN 0 0 0\nDTYPE int16le\nDATA\n";
    bytes += std::string(14, '\0');  // 7 voxels
    spit(dir / "t.vol", bytes);
    try {
        (void)read_volume(dir / "t.vol");
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.expected_bytes() == 16);
        CHECK(e.actual_bytes() == 14);
    }
    bytes += std::string(4, '\0');  // 9 voxels: trailing bytes also rejected
    spit(dir / "t.vol", bytes);
    CHECK_THROWS_AS((void)read_volume(dir / "t.vol"), TruncationError);
}

TEST_CASE("malformed header names the line") {
    const auto dir = testing::temp_dir("vol_bad");
    spit(dir / "b.vol", "VOL1\nDIMS 2 2 2\nSPACING 1 x 1\nORIGIN 0 0 0\nDTYPE int16le\nDATA\n");
    try {
        (void)read_volume(dir / "b.vol");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    spit(dir / "b.vol", "VOL2\n");
    CHECK_THROWS_AS((void)read_volume(dir / "b.vol"), FormatError);
    spit(dir / "b.vol", "VOL1\nDIMS 1 1 1\nSPACING 0 1 1\nORIGIN 0 0 0\nDTYPE int16le\nDATA\n\0\0");
    CHECK_THROWS_AS((void)read_volume(dir / "b.vol"), FormatError);
    spit(dir / "b.vol", "VOL1\nDIMS 1 1 1\nSPACING 1 1 1\nORIGIN 0 0 0\nDTYPE float32\nDATA\n");
    CHECK_THROWS_AS((void)read_volume(dir / "b.vol"), FormatError);
    CHECK_THROWS_AS((void)read_volume(dir / "missing.vol"), IoError);
}

TEST_CASE("round trip of a random 64^3 volume") {
    const auto dir = testing::temp_dir("vol_rt");
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> hu(-32768, 32767);
    std::vector<std::int16_t> voxels(64 * 64 * 64);
    for (auto& v : voxels) {
        v = static_cast<std::int16_t>(hu(rng));
    }
    const Volume v({64, 64, 64}, Vec3(0.7, 0.7, 1.25), Vec3(-123.456, -0.1, 1e-7), std::move(voxels));
    write_volume(v, dir / "r.vol");
    CHECK(read_volume(dir / "r.vol") == v);
}

TEST_CASE("boundary volumes round trip sign-exactly") {
    const auto dir = testing::temp_dir("vol_edge");
    const Volume air({1, 1, 1}, Vec3::Ones(), Vec3(-0.0, -250.5, -1e300), std::int16_t{-1024});
    write_volume(air, dir / "a.vol");
    const auto r = read_volume(dir / "a.vol");
    CHECK(r == air);
    CHECK(r.at(0, 0, 0) == -1024);
    CHECK(std::signbit(r.origin().x()));
}

TEST_CASE("ramp volume uses x-fastest ordering and voxel-centre coordinates") {
    const auto dir = testing::temp_dir("vol_ramp");
    const Dims dims{5, 4, 3};
    std::vector<std::int16_t> ramp(60);
    for (std::size_t n = 0; n < ramp.size(); ++n) {
        ramp[n] = static_cast<std::int16_t>(n);
    }
    const Volume v(dims, Vec3(1, 2, 3), Vec3(10, 20, 30), std::move(ramp));
    write_volume(v, dir / "ramp.vol");
    const auto r = read_volume(dir / "ramp.vol");
    for (const auto& [i, j, k] : std::vector<std::array<int, 3>>{{0, 0, 0}, {4, 0, 0}, {1, 2, 0}, {3, 1, 2}, {4, 3, 2}}) {
        CHECK(r.at(i, j, k) == i + 5 * (j + 4 * k));
    }
    CHECK(r.world({2, 3, 1}) == Vec3(12, 26, 33));
}

TEST_CASE("constructor rejects invalid geometry") {
    CHECK_THROWS_AS(Volume({2, 2, 2}, Vec3(1, 0, 1), Vec3::Zero(), std::int16_t{0}), PreconditionError);
    CHECK_THROWS_AS(Volume({2, 2, 2}, Vec3::Ones(), Vec3::Zero(), std::vector<std::int16_t>(7)), PreconditionError);
}
