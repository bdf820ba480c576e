#pragma once

#include <cstdint>
#include <vector>

#include "fidreg/kv_config.hpp"
#include "fidreg/markers.hpp"
#include "fidreg/volume.hpp"

namespace fidreg {

struct BinaryMask {
    Dims dims{};
    std::vector<std::uint8_t> bits;  // 0/1 per voxel, same ordering as Volume

    bool at(int i, int j, int k) const noexcept {
        return bits[static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(dims[0]) *
                        (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k))] != 0;
    }
    std::size_t popcount() const noexcept;
};

enum class Connectivity : int { Face = 6, Edge = 18, Corner = 26 };

Connectivity connectivity_from_int(long long value);

/// Maximal connected set of mask voxels. `voxels` are in scan order.
struct Component {
    int label = 0;
    std::vector<VoxelIndex> voxels;
    double volume_mm3 = 0.0;

    std::size_t voxel_count() const noexcept { return voxels.size(); }
};

struct SegmentationConfig {
    double hu_min = 300.0;
    Connectivity connectivity = Connectivity::Corner;
    double expected_mm3 = 0.0;  // required, no default
    double tolerance_fraction = 0.5;
    bool weighted_centroid = false;

    /// Reads hu_min, connectivity, expected_mm3 (required), tolerance_fraction,
    /// weighted_centroid. Unknown keys are rejected.
    static SegmentationConfig from_key_values(KeyValues kv);
    void validate() const;
};

BinaryMask threshold_volume(const Volume& volume, double hu_min);

/// Labels are 1..K in first-encounter scan order.
std::vector<Component> connected_components(const BinaryMask& mask, Connectivity connectivity,
                                            const Vec3& spacing = Vec3::Ones());

/// Keeps components whose volume lies in the closed interval
/// [expected*(1-tol), expected*(1+tol)]; order is preserved.
std::vector<Component> filter_by_size(const std::vector<Component>& components, double expected_mm3,
                                      double tolerance_fraction);

/// Unweighted mean of member voxel centers in world coordinates.
Vec3 component_centroid(const Component& component, const Volume& volume);

/// Weights each voxel by (HU - hu_min + 1), which is positive for every member.
Vec3 weighted_component_centroid(const Component& component, const Volume& volume, double hu_min);

struct SegmentationResult {
    MarkerSet markers;
    std::vector<Component> kept;
    std::size_t components_found = 0;
};

SegmentationResult segment_markers_detailed(const Volume& volume, const SegmentationConfig& config);
MarkerSet segment_markers(const Volume& volume, const SegmentationConfig& config);

}  // namespace fidreg
