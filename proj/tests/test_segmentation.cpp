#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <stack>

#include "fidreg/error.hpp"
#include "fidreg/segmentation.hpp"
#include "test_support.hpp"

using namespace fidreg;

namespace {

BinaryMask empty_mask(Dims dims) {
    return {dims, std::vector<std::uint8_t>(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0)};
}

void set_bit(BinaryMask& m, int i, int j, int k) {
    m.bits[static_cast<std::size_t>(i) + static_cast<std::size_t>(m.dims[0]) * (j + static_cast<std::size_t>(m.dims[1]) * k)] = 1;
}

// Reference labeling: explicit-stack flood fill from each unvisited voxel in scan order.
std::vector<int> flood_fill_labels(const BinaryMask& m, int connectivity) {
    const auto [nx, ny, nz] = m.dims;
    std::vector<int> label(m.bits.size(), 0);
    auto idx = [&](int i, int j, int k) {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k);
    };
    int next = 0;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                if (!m.bits[idx(i, j, k)] || label[idx(i, j, k)]) {
                    continue;
                }
                ++next;
                std::stack<std::array<int, 3>> todo;
                todo.push({i, j, k});
                label[idx(i, j, k)] = next;
                while (!todo.empty()) {
                    const auto [a, b, c] = todo.top();
                    todo.pop();
                    for (int dc = -1; dc <= 1; ++dc) {
                        for (int db = -1; db <= 1; ++db) {
                            for (int da = -1; da <= 1; ++da) {
                                const int nonzero = (da != 0) + (db != 0) + (dc != 0);
                                const int allowed = connectivity == 6 ? 1 : connectivity == 18 ? 2 : 3;
                                if (nonzero == 0 || nonzero > allowed) {
                                    continue;
                                }
                                const int x = a + da, y = b + db, z = c + dc;
                                if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) {
                                    continue;
                                }
                                if (m.bits[idx(x, y, z)] && !label[idx(x, y, z)]) {
                                    label[idx(x, y, z)] = next;
                                    todo.push({x, y, z});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return label;
}

Component make_component(std::size_t voxels, double mm3_per_voxel) {
    Component c;
    c.voxels.resize(voxels);
    c.volume_mm3 = static_cast<double>(voxels) * mm3_per_voxel;
    return c;
}

// Three 5^3 cubes (125 mm^3 at 1 mm spacing) at +2000 HU on a +40 HU background.
struct Phantom {
    Volume volume;
    std::vector<Vec3> centers;
};

Phantom three_marker_phantom(bool with_blob) {
    const Dims dims{48, 40, 36};
    std::vector<std::int16_t> voxels(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 40);
    const std::vector<VoxelIndex> centers{{8, 9, 10}, {30, 12, 20}, {20, 30, 27}};
    for (const auto& c : centers) {
        testing::paint_cube(voxels, dims, c, 5, 2000);
    }
    if (with_blob) {
        testing::paint_cube(voxels, dims, {38, 28, 9}, 11, 1500);  // 1331 mm^3, > 10x
    }
    const Vec3 spacing(1, 1, 1);
    const Vec3 origin(-24, -20, 5);
    Phantom p{Volume(dims, spacing, origin, std::move(voxels)), {}};
    for (const auto& c : centers) {
        p.centers.push_back(p.volume.world(c));
    }
    return p;
}

}  // namespace

TEST_CASE("threshold_volume") {
    const Volume zero({4, 4, 4}, Vec3::Ones(), Vec3::Zero(), std::int16_t{0});
    CHECK(threshold_volume(zero, 300).popcount() == 0);

    std::vector<std::int16_t> v(64, 0);
    v[21] = 2000;
    const auto mask = threshold_volume(Volume({4, 4, 4}, Vec3::Ones(), Vec3::Zero(), v), 300);
    CHECK(mask.popcount() == 1);
    CHECK(mask.bits[21] == 1);

    std::vector<std::int16_t> ramp(16 * 16 * 16);
    for (std::size_t n = 0; n < ramp.size(); ++n) {
        ramp[n] = static_cast<std::int16_t>(n % 4096);
    }
    const auto rmask = threshold_volume(Volume({16, 16, 16}, Vec3::Ones(), Vec3::Zero(), ramp), 300);
    std::size_t brute = 0;
    for (const auto x : ramp) {
        brute += x >= 300 ? 1 : 0;
    }
    CHECK(rmask.popcount() == brute);
    CHECK(brute == 3796);
}

TEST_CASE("connected_components basic cases") {
    CHECK(connected_components(empty_mask({4, 4, 4}), Connectivity::Corner).empty());

    auto single = empty_mask({3, 3, 3});
    set_bit(single, 1, 1, 1);
    const auto one = connected_components(single, Connectivity::Face);
    REQUIRE(one.size() == 1);
    CHECK(one[0].voxel_count() == 1);
    CHECK(one[0].label == 1);

    auto corner = empty_mask({3, 3, 3});
    set_bit(corner, 0, 0, 0);
    set_bit(corner, 1, 1, 1);
    CHECK(connected_components(corner, Connectivity::Corner).size() == 1);
    CHECK(connected_components(corner, Connectivity::Edge).size() == 2);
    CHECK(connected_components(corner, Connectivity::Face).size() == 2);

    auto edge = empty_mask({3, 3, 3});
    set_bit(edge, 0, 0, 0);
    set_bit(edge, 1, 1, 0);
    CHECK(connected_components(edge, Connectivity::Edge).size() == 1);
    CHECK(connected_components(edge, Connectivity::Face).size() == 2);
}

TEST_CASE("labels follow first-encounter scan order") {
    auto m = empty_mask({6, 1, 1});
    set_bit(m, 0, 0, 0);
    set_bit(m, 2, 0, 0);
    set_bit(m, 3, 0, 0);
    set_bit(m, 5, 0, 0);
    const auto comps = connected_components(m, Connectivity::Corner);
    REQUIRE(comps.size() == 3);
    CHECK(comps[0].voxels.front() == VoxelIndex{0, 0, 0});
    CHECK(comps[1].voxels.front() == VoxelIndex{2, 0, 0});
    CHECK(comps[1].voxel_count() == 2);
    CHECK(comps[2].voxels.front() == VoxelIndex{5, 0, 0});

    // A U shape whose arms only merge at the far end keeps one label.
    auto u = empty_mask({3, 3, 1});
    set_bit(u, 0, 0, 0);
    set_bit(u, 2, 0, 0);
    set_bit(u, 0, 1, 0);
    set_bit(u, 2, 1, 0);
    set_bit(u, 0, 2, 0);
    set_bit(u, 1, 2, 0);
    set_bit(u, 2, 2, 0);
    CHECK(connected_components(u, Connectivity::Face).size() == 1);
}

TEST_CASE("labeling agrees with flood fill on random masks") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        std::uniform_int_distribution<int> side(1, 16);
        const Dims dims{side(rng), side(rng), side(rng)};
        auto m = empty_mask(dims);
        std::bernoulli_distribution fill(std::uniform_real_distribution<double>(0.1, 0.6)(rng));
        for (auto& b : m.bits) {
            b = fill(rng) ? 1 : 0;
        }
        for (const int conn : {6, 18, 26}) {
            const auto comps = connected_components(m, connectivity_from_int(conn));
            const auto ref = flood_fill_labels(m, conn);
            std::vector<int> ours(m.bits.size(), 0);
            std::size_t total = 0;
            for (const auto& c : comps) {
                total += c.voxel_count();
                for (const auto& v : c.voxels) {
                    auto& slot = ours[static_cast<std::size_t>(v.i) +
                                      static_cast<std::size_t>(dims[0]) * (v.j + static_cast<std::size_t>(dims[1]) * v.k)];
                    CHECK(slot == 0);  // disjoint
                    slot = c.label;
                }
            }
            CHECK(total == m.popcount());
            // Both label in first-encounter order, so labels must coincide.
            CHECK(ours == ref);
        }
    }
}

TEST_CASE("filter_by_size keeps the closed interval") {
    const std::vector<Component> comps{make_component(40, 1), make_component(100, 1), make_component(160, 1)};
    const auto kept = filter_by_size(comps, 100, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].volume_mm3 == 100);

    CHECK(filter_by_size({}, 100, 0.5).empty());

    const std::vector<Component> bounds{make_component(50, 1), make_component(150, 1), make_component(49, 1),
                                        make_component(151, 1)};
    const auto b = filter_by_size(bounds, 100, 0.5);
    REQUIRE(b.size() == 2);
    CHECK(b[0].volume_mm3 == 50);
    CHECK(b[1].volume_mm3 == 150);

    // Physical volume, not voxel count: 100 voxels of 0.5^3 mm^3 is 12.5 mm^3.
    CHECK(filter_by_size({make_component(100, 0.125)}, 100, 0.5).empty());
    CHECK_THROWS_AS(filter_by_size(comps, 0, 0.5), PreconditionError);
}

TEST_CASE("component_centroid") {
    const Volume v({40, 40, 40}, Vec3::Ones(), Vec3::Zero(), std::int16_t{0});
    Component single;
    single.voxels = {{2, 3, 4}};
    CHECK(component_centroid(single, v) == Vec3(2, 3, 4));

    Component pair;
    pair.voxels = {{0, 0, 0}, {2, 0, 0}};
    CHECK(component_centroid(pair, v) == Vec3(1, 0, 0));

    CHECK_THROWS_AS(component_centroid(Component{}, v), PreconditionError);

    // Rasterized sphere radius 5 around (20,20,20): brute-force mean of member centres.
    auto mask = empty_mask({40, 40, 40});
    Vec3 brute = Vec3::Zero();
    int count = 0;
    for (int k = 0; k < 40; ++k) {
        for (int j = 0; j < 40; ++j) {
            for (int i = 0; i < 40; ++i) {
                if (Vec3(i - 20, j - 20, k - 20).norm() <= 5.0) {
                    set_bit(mask, i, j, k);
                    brute += Vec3(i, j, k);
                    ++count;
                }
            }
        }
    }
    const auto comps = connected_components(mask, Connectivity::Corner);
    REQUIRE(comps.size() == 1);
    const Vec3 c = component_centroid(comps[0], v);
    CHECK((c - Vec3(20, 20, 20)).norm() < 0.1);
    CHECK((c - brute / count).norm() < 1e-12);
}

TEST_CASE("centroids translate with the origin") {
    auto p = three_marker_phantom(false);
    SegmentationConfig cfg;
    cfg.expected_mm3 = 125;
    const auto base = segment_markers(p.volume, cfg);
    const Vec3 t(12.25, -7.5, 3.0);
    const Volume moved(p.volume.dims(), p.volume.spacing(), p.volume.origin() + t, p.volume.voxels());
    const auto shifted = segment_markers(moved, cfg);
    REQUIRE(shifted.size() == base.size());
    for (std::size_t n = 0; n < base.size(); ++n) {
        CHECK((shifted.points[n] - (base.points[n] + t)).norm() < 1e-12);
    }
}

TEST_CASE("segment_markers on phantoms") {
    SegmentationConfig cfg;
    cfg.expected_mm3 = 125;

    auto p = three_marker_phantom(false);
    const auto markers = segment_markers(p.volume, cfg);
    CHECK(markers.frame == Frame::Ct);
    CHECK_FALSE(markers.has_ids());
    REQUIRE(markers.size() == 3);
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK((markers.points[n] - p.centers[n]).norm() <= 0.5);
    }

    auto blob = three_marker_phantom(true);
    const auto detailed = segment_markers_detailed(blob.volume, cfg);
    CHECK(detailed.components_found == 4);
    REQUIRE(detailed.markers.size() == 3);
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK((detailed.markers.points[n] - blob.centers[n]).norm() <= 0.5);
    }
    // Same input, same output.
    CHECK(segment_markers(blob.volume, cfg) == detailed.markers);

    const Volume soft({16, 16, 16}, Vec3::Ones(), Vec3::Zero(), std::int16_t{40});
    try {
        (void)segment_markers(soft, cfg);
        FAIL("expected InsufficientMarkersError");
    } catch (const InsufficientMarkersError& e) {
        CHECK(e.found() == 0);
        CHECK(std::string(e.what()) == "insufficient markers: found 0");
    }
}

TEST_CASE("weighted centroid is opt-in") {
    std::vector<std::int16_t> v(27, 0);
    v[0] = 1300;  // (0,0,0) weight 1001
    v[1] = 301;   // (1,0,0) weight 2
    const Volume vol({3, 3, 3}, Vec3::Ones(), Vec3::Zero(), v);
    const auto comps = connected_components(threshold_volume(vol, 300), Connectivity::Corner, vol.spacing());
    REQUIRE(comps.size() == 1);
    CHECK(component_centroid(comps[0], vol) == Vec3(0.5, 0, 0));
    CHECK(weighted_component_centroid(comps[0], vol, 300).x() == doctest::Approx(2.0 / 1003.0));
}

TEST_CASE("segmentation config parsing") {
    const auto cfg = SegmentationConfig::from_key_values(
        KeyValues::parse("# markers\nhu_min = 500\nconnectivity = 6\nexpected_mm3 = 80\ntolerance_fraction=0.25\n"));
    CHECK(cfg.hu_min == 500);
    CHECK(cfg.connectivity == Connectivity::Face);
    CHECK(cfg.expected_mm3 == 80);
    CHECK(cfg.tolerance_fraction == 0.25);
    CHECK_FALSE(cfg.weighted_centroid);

    CHECK_THROWS_AS(SegmentationConfig::from_key_values(KeyValues::parse("hu_min = 300\n")), ConfigError);
    CHECK_THROWS_AS(SegmentationConfig::from_key_values(KeyValues::parse("expected_mm3 = 1\nconnectivity = 8\n")),
                    ConfigError);
    CHECK_THROWS_AS(SegmentationConfig::from_key_values(KeyValues::parse("expected_mm3 = 1\nbogus = 2\n")),
                    FormatError);
    CHECK_THROWS_AS(SegmentationConfig::from_key_values(KeyValues::parse("expected_mm3 = 1\ntolerance_fraction = 1\n")),
                    ConfigError);
}
