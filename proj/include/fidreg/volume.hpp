#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fidreg/types.hpp"

namespace fidreg {

/// CT volume: int16 Hounsfield units on a regular grid, x-fastest.
///
/// World position of voxel (i,j,k) is the voxel center,
/// `origin + (i*sx, j*sy, k*sz)`. Immutable once constructed.
class Volume {
public:
    Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::int16_t> voxels);
    /// Volume filled with a constant value.
    Volume(Dims dims, Vec3 spacing, Vec3 origin, std::int16_t fill);

    const Dims& dims() const noexcept { return dims_; }
    const Vec3& spacing() const noexcept { return spacing_; }
    const Vec3& origin() const noexcept { return origin_; }
    const std::vector<std::int16_t>& voxels() const noexcept { return voxels_; }
    std::size_t size() const noexcept { return voxels_.size(); }

    std::size_t linear_index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
    }
    std::int16_t at(int i, int j, int k) const noexcept { return voxels_[linear_index(i, j, k)]; }
    Vec3 world(const VoxelIndex& v) const noexcept {
        return origin_ + Vec3(v.i * spacing_.x(), v.j * spacing_.y(), v.k * spacing_.z());
    }
    double voxel_volume_mm3() const noexcept { return spacing_.x() * spacing_.y() * spacing_.z(); }

    friend bool operator==(const Volume& a, const Volume& b);

private:
    Dims dims_;
    Vec3 spacing_;
    Vec3 origin_;
    std::vector<std::int16_t> voxels_;
};

Volume read_volume(const std::filesystem::path& path);
void write_volume(const Volume& volume, const std::filesystem::path& path);

}  // namespace fidreg
