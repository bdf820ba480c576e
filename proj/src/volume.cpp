#include "fidreg/volume.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"

namespace fidreg {

namespace {

void check_geometry(const Dims& dims, const Vec3& spacing, const Vec3& origin) {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) {
            throw PreconditionError("volume dims must be positive");
        }
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
            throw PreconditionError("volume spacing must be finite and strictly positive");
        }
        if (!std::isfinite(origin[a])) {
            throw PreconditionError("volume origin must be finite");
        }
    }
}

std::size_t voxel_count(const Dims& dims) {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') {
            ++pos;
        }
        const auto start = pos;
        while (pos < line.size() && line[pos] != ' ') {
            ++pos;
        }
        if (pos > start) {
            out.push_back(line.substr(start, pos - start));
        }
    }
    return out;
}

Vec3 parse_triple(std::string_view line, std::string_view keyword, std::size_t line_no) {
    const auto parts = split_ws(line);
    if (parts.size() != 4 || parts[0] != keyword) {
        throw FormatError("expected '" + std::string(keyword) + " x y z', got '" + std::string(line) + "'",
                          line_no);
    }
    Vec3 v;
    for (int a = 0; a < 3; ++a) {
        const auto d = parse_double(parts[a + 1]);
        if (!d || !std::isfinite(*d)) {
            throw FormatError("bad number '" + std::string(parts[a + 1]) + "' in " + std::string(keyword),
                              line_no);
        }
        v[a] = *d;
    }
    return v;
}

}  // namespace

Volume::Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<std::int16_t> voxels)
    : dims_(dims), spacing_(spacing), origin_(origin), voxels_(std::move(voxels)) {
    check_geometry(dims_, spacing_, origin_);
    if (voxels_.size() != voxel_count(dims_)) {
        throw PreconditionError("voxel count " + std::to_string(voxels_.size()) + " does not match dims " +
                                std::to_string(voxel_count(dims_)));
    }
}

Volume::Volume(Dims dims, Vec3 spacing, Vec3 origin, std::int16_t fill)
    : dims_(dims), spacing_(spacing), origin_(origin) {
    check_geometry(dims_, spacing_, origin_);
    voxels_.assign(voxel_count(dims_), fill);
}

bool operator==(const Volume& a, const Volume& b) {
    return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.origin_ == b.origin_ && a.voxels_ == b.voxels_;
}

Volume read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open volume file " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string_view {
        ++line_no;
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string::npos) {
            throw FormatError("unexpected end of header", line_no);
        }
        std::string_view line(bytes.data() + pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    if (next_line() != "VOL1") {
        throw FormatError("expected magic 'VOL1'", line_no);
    }

    Dims dims{};
    {
        const auto line = next_line();
        const auto parts = split_ws(line);
        if (parts.size() != 4 || parts[0] != "DIMS") {
            throw FormatError("expected 'DIMS nx ny nz', got '" + std::string(line) + "'", line_no);
        }
        for (int a = 0; a < 3; ++a) {
            const auto v = parse_int(parts[a + 1]);
            if (!v || *v <= 0 || *v > (1 << 20)) {
                throw FormatError("bad dimension '" + std::string(parts[a + 1]) + "'", line_no);
            }
            dims[a] = static_cast<int>(*v);
        }
    }
    const auto spacing_line = next_line();
    const Vec3 spacing = parse_triple(spacing_line, "SPACING", line_no);
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0.0)) {
            throw FormatError("spacing must be strictly positive", line_no);
        }
    }
    const auto origin_line = next_line();
    const Vec3 origin = parse_triple(origin_line, "ORIGIN", line_no);
    if (const auto line = next_line(); line != "DTYPE int16le") {
        throw FormatError("expected 'DTYPE int16le', got '" + std::string(line) + "'", line_no);
    }
    if (const auto line = next_line(); line != "DATA") {
        throw FormatError("expected 'DATA', got '" + std::string(line) + "'", line_no);
    }

    const std::size_t count = voxel_count(dims);
    const std::size_t payload = bytes.size() - pos;
    if (payload != count * 2) {
        throw TruncationError(count * 2, payload);
    }
    std::vector<std::int16_t> voxels(count);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (std::size_t n = 0; n < count; ++n) {
        const auto lo = static_cast<std::uint16_t>(p[2 * n]);
        const auto hi = static_cast<std::uint16_t>(p[2 * n + 1]);
        voxels[n] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return Volume(dims, spacing, origin, std::move(voxels));
}

void write_volume(const Volume& volume, const std::filesystem::path& path) {
    std::ostringstream header;
    const auto& d = volume.dims();
    const auto& s = volume.spacing();
    const auto& o = volume.origin();
    header << "VOL1\n"
           << "DIMS " << d[0] << ' ' << d[1] << ' ' << d[2] << '\n'
           << "SPACING " << format_double(s.x()) << ' ' << format_double(s.y()) << ' ' << format_double(s.z())
           << '\n'
           << "ORIGIN " << format_double(o.x()) << ' ' << format_double(o.y()) << ' ' << format_double(o.z())
           << '\n'
           << "DTYPE int16le\n"
           << "DATA\n";

    std::string payload(volume.size() * 2, '\0');
    for (std::size_t n = 0; n < volume.size(); ++n) {
        const auto u = static_cast<std::uint16_t>(volume.voxels()[n]);
        payload[2 * n] = static_cast<char>(u & 0xff);
        payload[2 * n + 1] = static_cast<char>(u >> 8);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const auto h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace fidreg
