// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fidreg/rigid.hpp"
#include "fidreg/volume.hpp"

namespace fidreg::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fidreg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Vec3 random_point(std::mt19937_64& rng, double half_extent) {
    std::uniform_real_distribution<double> u(-half_extent, half_extent);
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    return {x, y, z};
}

inline RigidTransform random_transform(std::mt19937_64& rng, double translation = 100.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    std::uniform_real_distribution<double> u(-translation, translation);
    return {q.toRotationMatrix(), Vec3(u(rng), u(rng), u(rng))};
}

/// Kabsch/SVD rigid fit with the det(R) = +1 correction. Independent of the
/// quaternion route in the library.
inline AlignmentFit kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= static_cast<double>(src.size());
    cd /= static_cast<double>(src.size());
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        h += (src[i] - cs) * (dst[i] - cd).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
    AlignmentFit fit;
    fit.transform.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    fit.transform.translation = cd - fit.transform.rotation * cs;
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        sum += (fit.transform.apply(src[i]) - dst[i]).squaredNorm();
    }
    fit.rmsd = std::sqrt(sum / static_cast<double>(src.size()));
    return fit;
}

/// Brute-force best proper fit over all 6 vertex pairings of two triangles.
inline double best_pairing_rmsd(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
    std::array<int, 3> perm{0, 1, 2};
    double best = INFINITY;
    do {
        const std::vector<Vec3> permuted{dst[perm[0]], dst[perm[1]], dst[perm[2]]};
        best = std::min(best, kabsch(src, permuted).rmsd);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Cube of `side` voxels centred on voxel `center` (odd side keeps it exact).
inline void paint_cube(std::vector<std::int16_t>& voxels, const Dims& dims, VoxelIndex center, int side,
                       std::int16_t value) {
    const int h = side / 2;
    for (int k = center.k - h; k < center.k - h + side; ++k) {
        for (int j = center.j - h; j < center.j - h + side; ++j) {
            for (int i = center.i - h; i < center.i - h + side; ++i) {
                if (i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2]) {
                    voxels[static_cast<std::size_t>(i) +
                           static_cast<std::size_t>(dims[0]) *
                               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k)] = value;
                }
            }
        }
    }
}

/// Solid sphere with a one-voxel linear partial-volume rim, so the iso
/// surface at the half level sits at `radius_mm`.
inline Volume sphere_volume(int n, double spacing, double radius_mm, std::int16_t inside = 1000,
                            std::int16_t outside = 0) {
    const Dims dims{n, n, n};
    std::vector<std::int16_t> voxels(static_cast<std::size_t>(n) * n * n);
    const double c = 0.5 * (n - 1) * spacing;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const double r = Vec3(i * spacing - c, j * spacing - c, k * spacing - c).norm();
                const double w = std::clamp((radius_mm - r) / spacing + 0.5, 0.0, 1.0);
                voxels[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)] =
                    static_cast<std::int16_t>(std::lround(outside + w * (inside - outside)));
            }
        }
    }
    return Volume(dims, Vec3::Constant(spacing), Vec3::Constant(-c), std::move(voxels));
}

}  // namespace fidreg::testing
