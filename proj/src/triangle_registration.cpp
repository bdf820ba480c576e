#include "fidreg/triangle_registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"

namespace fidreg {

namespace {

std::array<double, 3> opposite_edge_lengths(const std::array<Vec3, 3>& tri) {
    return {(tri[1] - tri[2]).norm(), (tri[0] - tri[2]).norm(), (tri[0] - tri[1]).norm()};
}

Vec3 canonical_normal(const std::array<Vec3, 3>& tri) {
    const auto o = canonical_order(tri);
    return (tri[o[1]] - tri[o[0]]).cross(tri[o[2]] - tri[o[0]]);
}

std::array<Vec3, 3> as_triangle(std::span<const Vec3> pts) { return {pts[0], pts[1], pts[2]}; }

}  // namespace

std::array<int, 3> canonical_order(const std::array<Vec3, 3>& tri) {
    const auto len = opposite_edge_lengths(tri);
    int longest = 0;
    for (int v = 1; v < 3; ++v) {
        if (len[v] > len[longest]) {
            longest = v;
        }
    }
    int shortest = -1;
    for (int v = 0; v < 3; ++v) {
        if (v != longest && (shortest < 0 || len[v] < len[shortest])) {
            shortest = v;
        }
    }
    return {longest, shortest, 3 - longest - shortest};
}

TriangleKey triangle_key(const Vec3& p1, const Vec3& p2, const Vec3& p3, double degeneracy_ratio) {
    const std::array<Vec3, 3> tri{p1, p2, p3};
    const auto len = opposite_edge_lengths(tri);
    const auto o = canonical_order(tri);
    const double e1 = len[o[0]];
    const double area = 0.5 * (p2 - p1).cross(p3 - p1).norm();
    if (!(e1 > 0.0) || !(area >= degeneracy_ratio * e1 * e1)) {
        throw DegenerateGeometryError("degenerate triangle: area below " + format_double(degeneracy_ratio) +
                                      " * e1^2");
    }
    return {len[o[1]] / e1, len[o[2]] / e1, e1};
}

InsertReport TriangleTable::insert_marker(const Vec3& point) {
    if (!point.allFinite()) {
        throw PreconditionError("insert_marker: point must be finite");
    }
    InsertReport report;
    const std::size_t n = markers_.size();
    markers_.push_back(point);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::array<std::size_t, 3> idx{i, j, n};
            const std::array<Vec3, 3> tri{markers_[i], markers_[j], point};
            TriangleKey key;
            try {
                key = triangle_key(tri[0], tri[1], tri[2], degeneracy_ratio_);
            } catch (const DegenerateGeometryError&) {
                ++report.degenerate_skipped;
                continue;
            }
            const auto o = canonical_order(tri);
            triangles_.push_back({{idx[o[0]], idx[o[1]], idx[o[2]]}, key});
            tree_.insert(key.shape());
            ++report.inserted;
        }
    }
    skipped_ += report.degenerate_skipped;
    return report;
}

std::vector<TriangleMatch> TriangleTable::query_nearest(const TriangleKey& key, std::size_t k) const {
    std::vector<TriangleMatch> out;
    for (const auto& nb : tree_.nearest(key.shape(), k)) {
        out.push_back({triangles_[nb.id], std::sqrt(nb.squared_distance)});
    }
    return out;
}

CanonicalCorrespondence canonical_correspondence(const std::array<Vec3, 3>& ct_tri, const IndexedTriangle& dev_tri,
                                                 std::span<const Vec3> device_markers, double tie_epsilon_mm,
                                                 double degeneracy_ratio) {
    for (const auto idx : dev_tri.marker_indices) {
        if (idx >= device_markers.size()) {
            throw PreconditionError("canonical_correspondence: device marker index out of range");
        }
    }
    const std::array<Vec3, 3> dev_pts{device_markers[dev_tri.marker_indices[0]],
                                      device_markers[dev_tri.marker_indices[1]],
                                      device_markers[dev_tri.marker_indices[2]]};
    const auto ct_key = triangle_key(ct_tri[0], ct_tri[1], ct_tri[2], degeneracy_ratio);
    const auto dev_key = triangle_key(dev_pts[0], dev_pts[1], dev_pts[2], degeneracy_ratio);

    const auto oc = canonical_order(ct_tri);
    const std::array<Vec3, 3> ct_canon{ct_tri[oc[0]], ct_tri[oc[1]], ct_tri[oc[2]]};

    // Role lengths [e1, e2, e3] for each triangle.
    const std::array<double, 3> lc{ct_key.e1, ct_key.r2 * ct_key.e1, ct_key.r3 * ct_key.e1};
    const std::array<double, 3> ld{dev_key.e1, dev_key.r2 * dev_key.e1, dev_key.r3 * dev_key.e1};
    const double eps = std::max(tie_epsilon_mm, 1e-6 * std::max(lc[0], ld[0]));
    auto ties = [&](int a, int b) {
        return std::abs(lc[a] - lc[b]) <= eps || std::abs(ld[a] - ld[b]) <= eps;
    };
    // Tie classes: e1~e3 and e3~e2 (e1~e2 implies both through ordering).
    std::array<int, 3> cls{0, 1, 2};
    if (ties(0, 2)) {
        cls[2] = cls[0];
    }
    if (ties(2, 1)) {
        cls[1] = cls[2];
    }
    if (ties(0, 1)) {
        cls = {0, 0, 0};
    }

    CanonicalCorrespondence best;
    double best_rmsd = std::numeric_limits<double>::infinity();
    std::array<int, 3> perm{0, 1, 2};
    do {
        if (cls[perm[0]] != cls[0] || cls[perm[1]] != cls[1] || cls[perm[2]] != cls[2]) {
            continue;
        }
        PointCorrespondences corr;
        corr.source.assign(ct_canon.begin(), ct_canon.end());
        for (int r = 0; r < 3; ++r) {
            corr.target.push_back(dev_pts[perm[r]]);
        }
        const double r = absolute_orientation(corr).rmsd;
        ++best.candidates_evaluated;
        if (r < best_rmsd) {
            best_rmsd = r;
            best.correspondences = std::move(corr);
            best.device_order = {dev_tri.marker_indices[perm[0]], dev_tri.marker_indices[perm[1]],
                                 dev_tri.marker_indices[perm[2]]};
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

FlipAlignment align_with_flip(const PointCorrespondences& corr, double degeneracy_ratio) {
    if (corr.source.size() != 3 || corr.target.size() != 3) {
        throw PreconditionError("align_with_flip: exactly 3 correspondences required");
    }
    const auto src = as_triangle(corr.source);
    const auto dst = as_triangle(corr.target);
    triangle_key(src[0], src[1], src[2], degeneracy_ratio);
    triangle_key(dst[0], dst[1], dst[2], degeneracy_ratio);

    const auto fit = absolute_orientation(corr);
    FlipAlignment out{fit.transform, fit.rmsd, false, {0, 1, 2}};

    const Vec3 rotated_normal = fit.transform.rotation * canonical_normal(src);
    if (rotated_normal.dot(canonical_normal(dst)) >= 0.0) {
        return out;
    }
    // Exchange the pair adjacent to the source's longest edge.
    const auto o = canonical_order(src);
    PointCorrespondences swapped = corr;
    std::swap(swapped.target[static_cast<std::size_t>(o[1])], swapped.target[static_cast<std::size_t>(o[2])]);
    const auto alt = absolute_orientation(swapped);
    if (alt.rmsd < fit.rmsd) {
        out = {alt.transform, alt.rmsd, true, {0, 1, 2}};
        std::swap(out.target_order[static_cast<std::size_t>(o[1])], out.target_order[static_cast<std::size_t>(o[2])]);
    }
    return out;
}

RegistrationConfig RegistrationConfig::from_key_values(KeyValues kv) {
    RegistrationConfig c;
    const auto k = kv.get_int("k", static_cast<long long>(c.k));
    if (k < 1) {
        throw ConfigError("k must be >= 1");
    }
    c.k = static_cast<std::size_t>(k);
    c.scale_tolerance_mm = kv.get_double("scale_tolerance_mm", c.scale_tolerance_mm);
    c.tie_epsilon_mm = kv.get_double("tie_epsilon_mm", c.tie_epsilon_mm);
    c.degeneracy_ratio = kv.get_double("degeneracy_ratio", c.degeneracy_ratio);
    kv.ensure_all_consumed();
    c.validate();
    return c;
}

void RegistrationConfig::validate() const {
    if (k < 1) {
        throw ConfigError("k must be >= 1");
    }
    if (!(scale_tolerance_mm >= 0.0) || !(tie_epsilon_mm >= 0.0) || !(degeneracy_ratio >= 0.0)) {
        throw ConfigError("registration tolerances must be non-negative");
    }
}

RegistrationResult register_markers(const MarkerSet& ct_markers, const TriangleTable& table,
                                    const RegistrationConfig& config) {
    config.validate();
    ct_markers.validate();
    const auto& ct = ct_markers.points;
    if (ct.size() < 3) {
        throw InsufficientMarkersError(ct.size());
    }
    if (table.empty()) {
        throw InsufficientMarkersError(table.markers().size());
    }

    const auto& device = table.markers();
    KdTree<3> device_tree;
    for (const auto& p : device) {
        device_tree.insert(p);
    }
    auto all_marker_rmsd = [&](const RigidTransform& t) {
        double sum = 0.0;
        for (const auto& p : ct) {
            sum += device_tree.nearest(t.apply(p), 1).front().squared_distance;
        }
        return std::sqrt(sum / static_cast<double>(ct.size()));
    };

    std::optional<RegistrationResult> best;
    auto better = [](const RegistrationResult& a, const RegistrationResult& b) {
        return std::tie(a.rmsd, a.shape_distance, a.ct_indices, a.device_indices) <
               std::tie(b.rmsd, b.shape_distance, b.ct_indices, b.device_indices);
    };

    struct Rejected {
        std::array<std::size_t, 3> ct{};
        std::array<std::size_t, 3> dev{};
        double scale_gap = std::numeric_limits<double>::infinity();
        double shape_distance = 0.0;
    } rejected;
    std::size_t valid_ct_triangles = 0;
    std::size_t evaluated = 0;

    for (std::size_t i = 0; i < ct.size(); ++i) {
        for (std::size_t j = i + 1; j < ct.size(); ++j) {
            for (std::size_t l = j + 1; l < ct.size(); ++l) {
                const std::array<Vec3, 3> tri{ct[i], ct[j], ct[l]};
                TriangleKey key;
                try {
                    key = triangle_key(tri[0], tri[1], tri[2], config.degeneracy_ratio);
                } catch (const DegenerateGeometryError&) {
                    continue;
                }
                ++valid_ct_triangles;
                const std::array<std::size_t, 3> ids{i, j, l};
                const auto oc = canonical_order(tri);
                const std::array<std::size_t, 3> ct_idx{ids[oc[0]], ids[oc[1]], ids[oc[2]]};

                for (const auto& match : table.query_nearest(key, config.k)) {
                    const double gap = std::abs(key.e1 - match.triangle.key.e1);
                    if (gap > config.scale_tolerance_mm) {
                        if (gap < rejected.scale_gap) {
                            rejected = {ct_idx, match.triangle.marker_indices, gap, match.shape_distance};
                        }
                        continue;
                    }
                    const auto cc = canonical_correspondence(tri, match.triangle, device, config.tie_epsilon_mm,
                                                             config.degeneracy_ratio);
                    const auto aligned = align_with_flip(cc.correspondences, config.degeneracy_ratio);
                    evaluated += cc.candidates_evaluated;

                    RegistrationResult r;
                    r.transform = aligned.transform;
                    r.matched_triangle = match.triangle;
                    r.ct_indices = ct_idx;
                    for (std::size_t v = 0; v < 3; ++v) {
                        r.device_indices[v] = cc.device_order[static_cast<std::size_t>(aligned.target_order[v])];
                    }
                    r.shape_distance = match.shape_distance;
                    r.triangle_rmsd = aligned.rmsd;
                    r.rmsd = all_marker_rmsd(aligned.transform);
                    r.flipped = aligned.flipped;
                    if (!best || better(r, *best)) {
                        best = r;
                    }
                }
            }
        }
    }

    if (valid_ct_triangles == 0) {
        throw DegenerateGeometryError("every CT marker triangle is degenerate");
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no match: no candidate within scale tolerance " << format_double(config.scale_tolerance_mm)
            << " mm";
        if (std::isfinite(rejected.scale_gap)) {
            msg << "; best rejected ct (" << rejected.ct[0] << ',' << rejected.ct[1] << ',' << rejected.ct[2]
                << ") device (" << rejected.dev[0] << ',' << rejected.dev[1] << ',' << rejected.dev[2]
                << ") scale gap " << format_double(rejected.scale_gap) << " mm shape distance "
                << format_double(rejected.shape_distance);
        }
        throw NoMatchError(msg.str());
    }
    best->candidates_evaluated = evaluated;
    return *best;
}

RegistrationResult register_marker_sets(const MarkerSet& ct_markers, const MarkerSet& device,
                                        const RegistrationConfig& config) {
    device.validate();
    TriangleTable table(config.degeneracy_ratio);
    for (const auto& p : device.points) {
        table.insert_marker(p);
    }
    return register_markers(ct_markers, table, config);
}

nlohmann::json to_json(const RegistrationResult& result, const MarkerSet* device) {
    const auto& key = result.matched_triangle.key;
    nlohmann::json j{
        {"transform", to_json(result.transform)},
        {"rmsd", result.rmsd},
        {"triangle_rmsd", result.triangle_rmsd},
        {"shape_distance", result.shape_distance},
        {"flipped", result.flipped},
        {"ct_indices", result.ct_indices},
        {"device_indices", result.device_indices},
        {"matched_key", {{"r2", key.r2}, {"r3", key.r3}, {"e1", key.e1}}},
        {"candidates_evaluated", result.candidates_evaluated},
    };
    if (device != nullptr && device->has_ids()) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto idx : result.device_indices) {
            ids.push_back(device->ids.at(idx));
        }
        j["device_ids"] = ids;
    }
    return j;
}

}  // namespace fidreg
