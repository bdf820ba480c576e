#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fidreg/types.hpp"
#include "fidreg/volume.hpp"

namespace fidreg {

/// Triangle mesh in world mm. Faces wind counter-clockwise seen from the side
/// their normal points to.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const noexcept { return faces.empty(); }
    double surface_area() const;
    /// V - E + F with edges counted as unique undirected vertex pairs.
    long long euler_characteristic() const;
    /// Every undirected edge is used by exactly two faces.
    bool is_watertight() const;
    /// Every directed edge appears at most once, i.e. neighbours traverse a
    /// shared edge in opposite directions.
    bool is_consistently_oriented() const;
};

inline constexpr double kDefaultSkinIsoHu = -300.0;

/// Marching cubes over every 2x2x2 cell. Voxels with value >= iso are inside;
/// face normals point from inside (above iso) toward outside (below iso).
///
/// Ambiguous cell faces are resolved by always separating the inside corners,
/// so neighbouring cells agree and closed surfaces come out watertight.
/// Vertices on a shared cell edge are emitted once; vertices that land on the
/// exact same coordinate are merged and faces collapsed by the merge dropped.
TriangleMesh marching_cubes(const Volume& volume, double iso_hu);

/// Binary little-endian STL with recomputed facet normals.
void write_stl(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string stl_bytes(const TriangleMesh& mesh);

/// ASCII OBJ with `v` and 1-based `f` lines.
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
std::string obj_text(const TriangleMesh& mesh);
TriangleMesh parse_obj(const std::string& text);

}  // namespace fidreg
