#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fidreg/types.hpp"

namespace fidreg {

/// Proper rigid motion x -> R x + t (det R = +1).
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation = Vec3::Zero());

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 operator()(const Vec3& p) const { return apply(p); }

    /// Orthonormality and det = +1, each within `tol` per entry.
    bool is_valid(double tol = 1e-9) const;
};

Vec3 apply(const RigidTransform& t, const Vec3& p);
/// Applies `b` first, then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

/// Projects a near-rotation back onto SO(3).
Mat3 orthonormalize(const Mat3& m);

/// Geodesic angle of R_a^T R_b in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

struct PointCorrespondences {
    std::vector<Vec3> source;
    std::vector<Vec3> target;
};

struct AlignmentFit {
    RigidTransform transform;
    double rmsd = 0.0;
};

/// Closed-form least-squares rigid fit (unit-quaternion method): the rotation
/// is the eigenvector of the largest eigenvalue of the symmetric 4x4 matrix
/// built from the cross-covariance. Always proper.
///
/// Throws PreconditionError for fewer than 3 pairs or mismatched lengths and
/// DegenerateGeometryError when the source points are (nearly) collinear.
AlignmentFit absolute_orientation(std::span<const Vec3> source, std::span<const Vec3> target);
AlignmentFit absolute_orientation(const PointCorrespondences& corr);

double rmsd(const RigidTransform& t, std::span<const Vec3> source, std::span<const Vec3> target);

/// Second principal extent below this fraction of the first means collinear.
inline constexpr double kCollinearityRatio = 1e-9;
bool is_collinear(std::span<const Vec3> points, double ratio = kCollinearityRatio);

nlohmann::json to_json(const RigidTransform& t);
RigidTransform transform_from_json(const nlohmann::json& j);

}  // namespace fidreg
