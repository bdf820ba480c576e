#include "fidreg/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"

namespace fidreg {

namespace {

constexpr std::array<std::array<int, 3>, 8> kCorner{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

constexpr std::array<std::array<int, 2>, 12> kEdge{{
    {0, 1}, {1, 2}, {3, 2}, {0, 3}, {4, 5}, {5, 6}, {7, 6}, {4, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e) {
        if ((kEdge[e][0] == a && kEdge[e][1] == b) || (kEdge[e][0] == b && kEdge[e][1] == a)) {
            return e;
        }
    }
    return -1;
}

Vec3 corner_pos(int c) { return Vec3(kCorner[c][0], kCorner[c][1], kCorner[c][2]); }

// Polygon loops (as cube edge lists) for each of the 256 inside/outside cases.
struct CaseTable {
    std::array<std::vector<std::vector<int>>, 256> loops;

    CaseTable() {
        // Faces as corner cycles, counter-clockwise about the outward normal.
        std::array<std::array<int, 4>, 6> faces{{
            {0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4}, {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5},
        }};
        const Vec3 center(0.5, 0.5, 0.5);
        for (auto& f : faces) {
            const Vec3 n = (corner_pos(f[1]) - corner_pos(f[0])).cross(corner_pos(f[3]) - corner_pos(f[0]));
            const Vec3 face_center = 0.25 * (corner_pos(f[0]) + corner_pos(f[1]) + corner_pos(f[2]) + corner_pos(f[3]));
            if (n.dot(face_center - center) < 0.0) {
                std::swap(f[1], f[3]);
            }
        }

        for (int cfg = 0; cfg < 256; ++cfg) {
            auto inside = [cfg](int c) { return ((cfg >> c) & 1) != 0; };
            // next[e] = edge that follows e along the directed contour.
            std::array<int, 12> next;
            next.fill(-1);
            for (const auto& f : faces) {
                // Crossings in cycle order; an entry goes outside->inside.
                for (int s = 0; s < 4; ++s) {
                    const int a = f[s], b = f[(s + 1) % 4];
                    if (inside(a) || !inside(b)) {
                        continue;
                    }
                    // Entry on edge (a,b); walk the inside run to its exit.
                    int t = (s + 1) % 4;
                    while (inside(f[(t + 1) % 4])) {
                        t = (t + 1) % 4;
                    }
                    const int exit_edge = edge_between(f[t], f[(t + 1) % 4]);
                    next[edge_between(a, b)] = exit_edge;
                }
            }
            std::array<bool, 12> used{};
            for (int e = 0; e < 12; ++e) {
                if (next[e] < 0 || used[e]) {
                    continue;
                }
                std::vector<int> loop;
                for (int cur = e; !used[cur]; cur = next[cur]) {
                    used[cur] = true;
                    loop.push_back(cur);
                }
                loops[cfg].push_back(std::move(loop));
            }
        }

        // Orient so that normals point away from inside corners; the contour
        // rule is uniform, so one reference case decides for all.
        const auto& ref = loops[1].front();
        auto mid = [](int e) { return 0.5 * (corner_pos(kEdge[e][0]) + corner_pos(kEdge[e][1])); };
        const Vec3 n = (mid(ref[1]) - mid(ref[0])).cross(mid(ref[2]) - mid(ref[0]));
        if (n.dot(mid(ref[0]) - corner_pos(0)) < 0.0) {
            for (auto& case_loops : loops) {
                for (auto& loop : case_loops) {
                    std::reverse(loop.begin(), loop.end());
                }
            }
        }
    }
};

const CaseTable& case_table() {
    static const CaseTable table;
    return table;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    }
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::map<std::pair<int, int>, int> undirected_edge_use(const TriangleMesh& mesh) {
    std::map<std::pair<int, int>, int> use;
    for (const auto& f : mesh.faces) {
        for (int s = 0; s < 3; ++s) {
            const int a = f[s], b = f[(s + 1) % 3];
            ++use[{std::min(a, b), std::max(a, b)}];
        }
    }
    return use;
}

}  // namespace

double TriangleMesh::surface_area() const {
    double area = 0.0;
    for (const auto& f : faces) {
        area += 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
    }
    return area;
}

long long TriangleMesh::euler_characteristic() const {
    return static_cast<long long>(vertices.size()) - static_cast<long long>(undirected_edge_use(*this).size()) +
           static_cast<long long>(faces.size());
}

bool TriangleMesh::is_watertight() const {
    for (const auto& [edge, count] : undirected_edge_use(*this)) {
        if (count != 2) {
            return false;
        }
    }
    return true;
}

bool TriangleMesh::is_consistently_oriented() const {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& f : faces) {
        for (int s = 0; s < 3; ++s) {
            if (++directed[{f[s], f[(s + 1) % 3]}] > 1) {
                return false;
            }
        }
    }
    return true;
}

TriangleMesh marching_cubes(const Volume& volume, double iso_hu) {
    const auto [nx, ny, nz] = volume.dims();
    if (nx < 2 || ny < 2 || nz < 2) {
        throw PreconditionError("marching_cubes needs at least 2 voxels along every axis");
    }
    const auto& table = case_table();

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    auto vertex_for = [&](int i, int j, int k, int edge) {
        const auto& c0 = kCorner[kEdge[edge][0]];
        const auto& c1 = kCorner[kEdge[edge][1]];
        const int ai = i + c0[0], aj = j + c0[1], ak = k + c0[2];
        const int bi = i + c1[0], bj = j + c1[1], bk = k + c1[2];
        const int axis = c0[0] != c1[0] ? 0 : c0[1] != c1[1] ? 1 : 2;
        // Edge endpoints are listed with the lower corner first.
        const std::uint64_t key = static_cast<std::uint64_t>(volume.linear_index(ai, aj, ak)) * 3 + axis;
        if (const auto it = edge_vertex.find(key); it != edge_vertex.end()) {
            return it->second;
        }
        const double va = volume.at(ai, aj, ak);
        const double vb = volume.at(bi, bj, bk);
        const double t = (iso_hu - va) / (vb - va);
        const Vec3 pa = volume.world({ai, aj, ak});
        const Vec3 pb = volume.world({bi, bj, bk});
        const int id = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(pa + t * (pb - pa));
        edge_vertex.emplace(key, id);
        return id;
    };

    for (int k = 0; k + 1 < nz; ++k) {
        for (int j = 0; j + 1 < ny; ++j) {
            for (int i = 0; i + 1 < nx; ++i) {
                int cfg = 0;
                for (int c = 0; c < 8; ++c) {
                    if (volume.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]) >= iso_hu) {
                        cfg |= 1 << c;
                    }
                }
                if (cfg == 0 || cfg == 255) {
                    continue;
                }
                for (const auto& loop : table.loops[cfg]) {
                    const int first = vertex_for(i, j, k, loop[0]);
                    for (std::size_t n = 1; n + 1 < loop.size(); ++n) {
                        mesh.faces.push_back({first, vertex_for(i, j, k, loop[n]), vertex_for(i, j, k, loop[n + 1])});
                    }
                }
            }
        }
    }

    // Merge vertices with identical coordinates (iso exactly on a voxel value).
    std::map<std::array<double, 3>, int> by_coord;
    std::vector<int> remap(mesh.vertices.size());
    std::vector<Vec3> merged;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const auto& p = mesh.vertices[v];
        const auto [it, inserted] = by_coord.try_emplace({p.x(), p.y(), p.z()}, static_cast<int>(merged.size()));
        if (inserted) {
            merged.push_back(p);
        }
        remap[v] = it->second;
    }
    if (merged.size() != mesh.vertices.size()) {
        std::vector<std::array<int, 3>> faces;
        for (const auto& f : mesh.faces) {
            const std::array<int, 3> g{remap[f[0]], remap[f[1]], remap[f[2]]};
            if (g[0] != g[1] && g[1] != g[2] && g[0] != g[2]) {
                faces.push_back(g);
            }
        }
        mesh.vertices = std::move(merged);
        mesh.faces = std::move(faces);
    }
    return mesh;
}

std::string stl_bytes(const TriangleMesh& mesh) {
    std::string out;
    out.reserve(84 + 50 * mesh.faces.size());
    std::string header = "fidreg marching cubes; facet normals point toward values below iso";
    header.resize(80, '\0');
    out += header;
    put_u32(out, static_cast<std::uint32_t>(mesh.faces.size()));
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
        for (const Vec3* p : std::array<const Vec3*, 4>{&n, &a, &b, &c}) {
            put_f32(out, static_cast<float>(p->x()));
            put_f32(out, static_cast<float>(p->y()));
            put_f32(out, static_cast<float>(p->z()));
        }
        out.push_back('\0');
        out.push_back('\0');
    }
    return out;
}

void write_stl(const TriangleMesh& mesh, const std::filesystem::path& path) { write_file(path, stl_bytes(mesh)); }

std::string obj_text(const TriangleMesh& mesh) {
    std::ostringstream out;
    out << "# fidreg marching cubes; faces wind counter-clockwise about normals pointing toward values below iso\n";
    for (const auto& v : mesh.vertices) {
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    return out.str();
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) { write_file(path, obj_text(mesh)); }

TriangleMesh parse_obj(const std::string& text) {
    TriangleMesh mesh;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            std::string x, y, z;
            ls >> x >> y >> z;
            const auto px = parse_double(x), py = parse_double(y), pz = parse_double(z);
            if (!px || !py || !pz) {
                throw FormatError("bad vertex", line_no);
            }
            mesh.vertices.emplace_back(*px, *py, *pz);
        } else if (tag == "f") {
            std::array<int, 3> f{};
            for (auto& idx : f) {
                std::string tok;
                ls >> tok;
                const auto v = parse_int(tok.substr(0, tok.find('/')));
                if (!v || *v < 1) {
                    throw FormatError("bad face index", line_no);
                }
                idx = static_cast<int>(*v - 1);
            }
            mesh.faces.push_back(f);
        }
    }
    for (const auto& f : mesh.faces) {
        for (const int idx : f) {
            if (idx >= static_cast<int>(mesh.vertices.size())) {
                throw FormatError("face index out of range");
            }
        }
    }
    return mesh;
}

}  // namespace fidreg
