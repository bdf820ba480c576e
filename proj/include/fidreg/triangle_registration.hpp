#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fidreg/kdtree.hpp"
#include "fidreg/kv_config.hpp"
#include "fidreg/markers.hpp"
#include "fidreg/rigid.hpp"

namespace fidreg {

/// Scale-free triangle shape descriptor.
///
/// With edge lengths e1 >= e3 >= e2 (e1 longest, e2 shortest), the key is
/// (r2, r3) = (e2/e1, e3/e1); e1 is kept for absolute-scale checks.
struct TriangleKey {
    double r2 = 0.0;
    double r3 = 0.0;
    double e1 = 0.0;

    Eigen::Vector2d shape() const { return {r2, r3}; }
};

inline constexpr double kDefaultDegeneracyRatio = 1e-6;

/// Vertex order by edge role: (opposite e1, opposite e2, opposite e3).
/// Ties in edge length are broken by the lower input position.
std::array<int, 3> canonical_order(const std::array<Vec3, 3>& tri);

/// Throws DegenerateGeometryError when area < degeneracy_ratio * e1^2.
TriangleKey triangle_key(const Vec3& p1, const Vec3& p2, const Vec3& p3,
                         double degeneracy_ratio = kDefaultDegeneracyRatio);

struct IndexedTriangle {
    std::array<std::size_t, 3> marker_indices{};  // canonical order
    TriangleKey key;
};

struct InsertReport {
    std::size_t inserted = 0;
    std::size_t degenerate_skipped = 0;
};

struct TriangleMatch {
    IndexedTriangle triangle;
    double shape_distance = 0.0;
};

/// Every triangle formed by the device-side markers seen so far, indexed by
/// shape in a 2-D k-d tree.
///
/// Single writer: insert_marker needs exclusive access; const queries may run
/// concurrently with each other.
class TriangleTable {
public:
    explicit TriangleTable(double degeneracy_ratio = kDefaultDegeneracyRatio)
        : degeneracy_ratio_(degeneracy_ratio) {}

    /// Adds a marker and keys every triangle it closes with existing pairs.
    InsertReport insert_marker(const Vec3& point);

    /// k nearest stored triangles in (r2, r3), ascending; ties by insertion order.
    std::vector<TriangleMatch> query_nearest(const TriangleKey& key, std::size_t k) const;

    const std::vector<Vec3>& markers() const noexcept { return markers_; }
    const std::vector<IndexedTriangle>& triangles() const noexcept { return triangles_; }
    std::size_t size() const noexcept { return triangles_.size(); }
    bool empty() const noexcept { return triangles_.empty(); }
    std::size_t degenerate_skipped() const noexcept { return skipped_; }

private:
    double degeneracy_ratio_;
    std::vector<Vec3> markers_;
    std::vector<IndexedTriangle> triangles_;
    KdTree<2> tree_;
    std::size_t skipped_ = 0;
};

struct CanonicalCorrespondence {
    PointCorrespondences correspondences;
    std::array<std::size_t, 3> device_order{};  // marker indices paired with the CT canonical order
    std::size_t candidates_evaluated = 0;
};

/// Pairs vertices by edge role. When two edges of either triangle tie within
/// max(tie_epsilon_mm, 1e-6 * e1) every role permutation consistent with the
/// tie is tried and the lowest-rmsd pairing kept.
///
/// The correspondence source is the CT triangle in its canonical order.
CanonicalCorrespondence canonical_correspondence(const std::array<Vec3, 3>& ct_tri, const IndexedTriangle& dev_tri,
                                                 std::span<const Vec3> device_markers, double tie_epsilon_mm,
                                                 double degeneracy_ratio = kDefaultDegeneracyRatio);

struct FlipAlignment {
    RigidTransform transform;
    double rmsd = 0.0;
    bool flipped = false;
    std::array<int, 3> target_order{0, 1, 2};  // corr.target position paired with each source
};

/// Absolute orientation on three pairs with the normal check: if the rotated
/// source normal opposes the target normal (each taken from its own canonical
/// vertex order), the two target vertices adjacent to the longest edge are
/// exchanged, the fit repeated, and the lower-rmsd variant returned.
FlipAlignment align_with_flip(const PointCorrespondences& corr, double degeneracy_ratio = kDefaultDegeneracyRatio);

struct RegistrationConfig {
    std::size_t k = 4;
    double scale_tolerance_mm = 5.0;
    double tie_epsilon_mm = 0.5;
    double degeneracy_ratio = kDefaultDegeneracyRatio;

    static RegistrationConfig from_key_values(KeyValues kv);
    void validate() const;
};

struct RegistrationResult {
    RigidTransform transform;  // ct -> device
    IndexedTriangle matched_triangle;
    std::array<std::size_t, 3> ct_indices{};      // CT markers of the matched triangle, canonical order
    std::array<std::size_t, 3> device_indices{};  // paired device markers, same order as ct_indices
    double shape_distance = 0.0;
    double rmsd = 0.0;           // over all CT markers against their nearest device markers
    double triangle_rmsd = 0.0;  // over the three matched pairs
    bool flipped = false;
    std::size_t candidates_evaluated = 0;
};

/// Searches every CT triangle against the table, verifies absolute scale,
/// aligns each candidate and keeps the best by (rmsd, shape_distance, indices).
///
/// Throws InsufficientMarkersError if there are fewer than 3 CT markers or the
/// table is empty, NoMatchError if no candidate passes the scale check.
RegistrationResult register_markers(const MarkerSet& ct_markers, const TriangleTable& table,
                                    const RegistrationConfig& config = {});

/// Builds a table from `device` in file order and registers against it.
RegistrationResult register_marker_sets(const MarkerSet& ct_markers, const MarkerSet& device,
                                        const RegistrationConfig& config = {});

nlohmann::json to_json(const RegistrationResult& result, const MarkerSet* device = nullptr);

}  // namespace fidreg
