#include "fidreg/segmentation.hpp"

#include <algorithm>
#include <numeric>

#include "fidreg/error.hpp"

namespace fidreg {

namespace {

struct Offset {
    int di, dj, dk;
};

// Neighbor offsets that precede the current voxel in scan order.
std::vector<Offset> backward_offsets(Connectivity connectivity) {
    const int max_nonzero = connectivity == Connectivity::Face ? 1 : connectivity == Connectivity::Edge ? 2 : 3;
    std::vector<Offset> out;
    for (int dk = -1; dk <= 0; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                const bool before = dk < 0 || (dk == 0 && (dj < 0 || (dj == 0 && di < 0)));
                const int nonzero = (di != 0) + (dj != 0) + (dk != 0);
                if (before && nonzero <= max_nonzero) {
                    out.push_back({di, dj, dk});
                }
            }
        }
    }
    return out;
}

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

std::size_t BinaryMask::popcount() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Connectivity connectivity_from_int(long long value) {
    switch (value) {
        case 6: return Connectivity::Face;
        case 18: return Connectivity::Edge;
        case 26: return Connectivity::Corner;
        default: throw ConfigError("connectivity must be 6, 18 or 26, got " + std::to_string(value));
    }
}

SegmentationConfig SegmentationConfig::from_key_values(KeyValues kv) {
    SegmentationConfig c;
    c.hu_min = kv.get_double("hu_min", c.hu_min);
    c.connectivity = connectivity_from_int(kv.get_int("connectivity", static_cast<int>(c.connectivity)));
    c.expected_mm3 = kv.require_double("expected_mm3");
    c.tolerance_fraction = kv.get_double("tolerance_fraction", c.tolerance_fraction);
    c.weighted_centroid = kv.get_bool("weighted_centroid", c.weighted_centroid);
    kv.ensure_all_consumed();
    c.validate();
    return c;
}

void SegmentationConfig::validate() const {
    if (!(expected_mm3 > 0.0)) {
        throw ConfigError("expected_mm3 must be > 0");
    }
    if (!(tolerance_fraction > 0.0 && tolerance_fraction < 1.0)) {
        throw ConfigError("tolerance_fraction must be in (0, 1)");
    }
}

BinaryMask threshold_volume(const Volume& volume, double hu_min) {
    BinaryMask mask{volume.dims(), std::vector<std::uint8_t>(volume.size())};
    const auto& v = volume.voxels();
    for (std::size_t n = 0; n < v.size(); ++n) {
        mask.bits[n] = static_cast<double>(v[n]) >= hu_min ? 1 : 0;
    }
    return mask;
}

std::vector<Component> connected_components(const BinaryMask& mask, Connectivity connectivity, const Vec3& spacing) {
    const auto [nx, ny, nz] = mask.dims;
    const auto offsets = backward_offsets(connectivity);
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = sy * static_cast<std::size_t>(ny);

    // Two-pass union-find labeling; provisional label 0 means background.
    std::vector<std::uint32_t> labels(mask.bits.size(), 0);
    std::vector<std::uint32_t> parent{0};
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t idx = i * sx + j * sy + k * sz;
                if (mask.bits[idx] == 0) {
                    continue;
                }
                std::uint32_t current = 0;
                for (const auto& o : offsets) {
                    const int ni = i + o.di, nj = j + o.dj, nk = k + o.dk;
                    if (ni < 0 || nj < 0 || nk < 0 || ni >= nx || nj >= ny) {
                        continue;
                    }
                    const std::uint32_t l = labels[ni * sx + nj * sy + nk * sz];
                    if (l == 0) {
                        continue;
                    }
                    if (current == 0) {
                        current = find_root(parent, l);
                    } else {
                        const auto a = find_root(parent, current);
                        const auto b = find_root(parent, l);
                        if (a != b) {
                            parent[std::max(a, b)] = std::min(a, b);
                            current = std::min(a, b);
                        }
                    }
                }
                if (current == 0) {
                    current = static_cast<std::uint32_t>(parent.size());
                    parent.push_back(current);
                }
                labels[idx] = current;
            }
        }
    }

    // Final labels in first-encounter order of each root.
    std::vector<int> final_label(parent.size(), 0);
    std::vector<Component> components;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t idx = i * sx + j * sy + k * sz;
                if (labels[idx] == 0) {
                    continue;
                }
                const auto root = find_root(parent, labels[idx]);
                if (final_label[root] == 0) {
                    components.push_back(Component{static_cast<int>(components.size()) + 1, {}, 0.0});
                    final_label[root] = static_cast<int>(components.size());
                }
                components[final_label[root] - 1].voxels.push_back({i, j, k});
            }
        }
    }
    const double voxel_mm3 = spacing.x() * spacing.y() * spacing.z();
    for (auto& c : components) {
        c.volume_mm3 = static_cast<double>(c.voxels.size()) * voxel_mm3;
    }
    return components;
}

std::vector<Component> filter_by_size(const std::vector<Component>& components, double expected_mm3,
                                      double tolerance_fraction) {
    if (!(expected_mm3 > 0.0) || !(tolerance_fraction > 0.0 && tolerance_fraction < 1.0)) {
        throw PreconditionError("filter_by_size requires expected_mm3 > 0 and 0 < tolerance < 1");
    }
    const double lo = expected_mm3 * (1.0 - tolerance_fraction);
    const double hi = expected_mm3 * (1.0 + tolerance_fraction);
    std::vector<Component> kept;
    for (const auto& c : components) {
        if (c.volume_mm3 >= lo && c.volume_mm3 <= hi) {
            kept.push_back(c);
        }
    }
    return kept;
}

Vec3 component_centroid(const Component& component, const Volume& volume) {
    if (component.voxels.empty()) {
        throw PreconditionError("centroid of an empty component");
    }
    Vec3 sum = Vec3::Zero();
    for (const auto& v : component.voxels) {
        sum += Vec3(v.i, v.j, v.k);
    }
    const Vec3 mean_index = sum / static_cast<double>(component.voxels.size());
    return volume.origin() + mean_index.cwiseProduct(volume.spacing());
}

Vec3 weighted_component_centroid(const Component& component, const Volume& volume, double hu_min) {
    if (component.voxels.empty()) {
        throw PreconditionError("centroid of an empty component");
    }
    Vec3 sum = Vec3::Zero();
    double total = 0.0;
    for (const auto& v : component.voxels) {
        const double w = static_cast<double>(volume.at(v.i, v.j, v.k)) - hu_min + 1.0;
        sum += w * Vec3(v.i, v.j, v.k);
        total += w;
    }
    return volume.origin() + (sum / total).cwiseProduct(volume.spacing());
}

SegmentationResult segment_markers_detailed(const Volume& volume, const SegmentationConfig& config) {
    config.validate();
    const auto mask = threshold_volume(volume, config.hu_min);
    auto components = connected_components(mask, config.connectivity, volume.spacing());
    SegmentationResult result;
    result.components_found = components.size();
    result.kept = filter_by_size(components, config.expected_mm3, config.tolerance_fraction);
    if (result.kept.size() < 3) {
        throw InsufficientMarkersError(result.kept.size());
    }
    result.markers.frame = Frame::Ct;
    for (const auto& c : result.kept) {
        result.markers.points.push_back(config.weighted_centroid
                                            ? weighted_component_centroid(c, volume, config.hu_min)
                                            : component_centroid(c, volume));
    }
    return result;
}

MarkerSet segment_markers(const Volume& volume, const SegmentationConfig& config) {
    return segment_markers_detailed(volume, config).markers;
}

}  // namespace fidreg
