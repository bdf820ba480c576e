#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>

namespace fidreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Integer voxel index (i, j, k).
struct VoxelIndex {
    int i = 0;
    int j = 0;
    int k = 0;
    friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

using Dims = std::array<int, 3>;

}  // namespace fidreg
