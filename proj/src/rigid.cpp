#include "fidreg/rigid.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>

#include "fidreg/error.hpp"

namespace fidreg {

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& translation) {
    return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), translation};
}

bool RigidTransform::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        return false;
    }
    const Mat3 gram = rotation.transpose() * rotation;
    return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Vec3 apply(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

Mat3 orthonormalize(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(2) *= -1.0;
    }
    return u * v.transpose();
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out{a.rotation * b.rotation, a.rotation * b.translation + a.translation};
    const Mat3 gram = out.rotation.transpose() * out.rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12) {
        out.rotation = orthonormalize(out.rotation);
    }
    return out;
}

RigidTransform inverse(const RigidTransform& t) {
    const Mat3 rt = t.rotation.transpose();
    return {rt, -(rt * t.translation)};
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
    const Mat3 rel = a.transpose() * b;
    // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
    const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

bool is_collinear(std::span<const Vec3> points, double ratio) {
    if (points.size() < 3) {
        return true;
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) {
        centroid += p;
    }
    centroid /= static_cast<double>(points.size());
    Eigen::MatrixX3d centered(points.size(), 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        centered.row(static_cast<Eigen::Index>(i)) = (points[i] - centroid).transpose();
    }
    const Vec3 sv = Eigen::JacobiSVD<Eigen::MatrixX3d>(centered).singularValues();
    const double largest = sv[0];
    const double second = sv[1];
    return !(largest > 0.0) || second < ratio * largest;
}

double rmsd(const RigidTransform& t, std::span<const Vec3> source, std::span<const Vec3> target) {
    if (source.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t n = 0; n < source.size(); ++n) {
        sum += (t.apply(source[n]) - target[n]).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(source.size()));
}

AlignmentFit absolute_orientation(std::span<const Vec3> source, std::span<const Vec3> target) {
    if (source.size() != target.size()) {
        throw PreconditionError("absolute_orientation: source and target lengths differ");
    }
    if (source.size() < 3) {
        throw PreconditionError("absolute_orientation: at least 3 correspondences required");
    }
    if (is_collinear(source)) {
        throw DegenerateGeometryError("absolute_orientation: source points are collinear");
    }

    const double n = static_cast<double>(source.size());
    Vec3 cs = Vec3::Zero();
    Vec3 ct = Vec3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        cs += source[i];
        ct += target[i];
    }
    cs /= n;
    ct /= n;

    Mat3 m = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        m += (source[i] - cs) * (target[i] - ct).transpose();
    }
    const double sxx = m(0, 0), sxy = m(0, 1), sxz = m(0, 2);
    const double syx = m(1, 0), syy = m(1, 1), syz = m(1, 2);
    const double szx = m(2, 0), szy = m(2, 1), szz = m(2, 2);

    Eigen::Matrix4d profile;
    profile << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
               syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
               szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
               sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(profile);
    const Eigen::Vector4d q = eig.eigenvectors().col(3);  // eigenvalues ascending
    const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);

    AlignmentFit fit;
    fit.transform.rotation = quat.normalized().toRotationMatrix();
    fit.transform.translation = ct - fit.transform.rotation * cs;
    fit.rmsd = rmsd(fit.transform, source, target);
    return fit;
}

AlignmentFit absolute_orientation(const PointCorrespondences& corr) {
    return absolute_orientation(std::span<const Vec3>(corr.source), std::span<const Vec3>(corr.target));
}

nlohmann::json to_json(const RigidTransform& t) {
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot.push_back(t.rotation(r, c));
        }
    }
    return {{"rotation", rot}, {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

RigidTransform transform_from_json(const nlohmann::json& j) {
    try {
        const auto& rot = j.at("rotation");
        const auto& tr = j.at("translation");
        if (rot.size() != 9 || tr.size() != 3) {
            throw FormatError("transform JSON needs 9 rotation and 3 translation entries");
        }
        RigidTransform t;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                t.rotation(r, c) = rot.at(static_cast<std::size_t>(3 * r + c)).get<double>();
            }
        }
        for (int a = 0; a < 3; ++a) {
            t.translation[a] = tr.at(static_cast<std::size_t>(a)).get<double>();
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad transform JSON: ") + e.what());
    }
}

}  // namespace fidreg
