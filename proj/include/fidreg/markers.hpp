#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fidreg/types.hpp"

namespace fidreg {

enum class Frame { Ct, Device };

std::string to_string(Frame frame);
Frame frame_from_string(const std::string& name);

/// Ordered marker centroids (mm) in one coordinate frame.
///
/// `ids` is either empty (no identifiers) or has one entry per point; an
/// individual entry may be the empty string.
struct MarkerSet {
    Frame frame = Frame::Ct;
    std::vector<Vec3> points;
    std::vector<std::string> ids;

    std::size_t size() const noexcept { return points.size(); }
    bool has_ids() const noexcept { return !ids.empty(); }
    /// Throws PreconditionError on non-finite points or an ids/points length mismatch.
    void validate() const;

    friend bool operator==(const MarkerSet&, const MarkerSet&) = default;
};

// CSV with header `frame,id,x_mm,y_mm,z_mm`.
std::string marker_set_to_csv(const MarkerSet& markers);
MarkerSet marker_set_from_csv(const std::string& text);
MarkerSet read_marker_csv(const std::filesystem::path& path);
void write_marker_csv(const MarkerSet& markers, const std::filesystem::path& path);

}  // namespace fidreg
