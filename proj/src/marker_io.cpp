#include "fidreg/markers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"

namespace fidreg {

namespace {
constexpr const char* kHeader = "frame,id,x_mm,y_mm,z_mm";
}

std::string to_string(Frame frame) { return frame == Frame::Ct ? "ct" : "device"; }

Frame frame_from_string(const std::string& name) {
    if (name == "ct") {
        return Frame::Ct;
    }
    if (name == "device") {
        return Frame::Device;
    }
    throw FormatError("unknown frame '" + name + "'");
}

void MarkerSet::validate() const {
    for (const auto& p : points) {
        if (!p.allFinite()) {
            throw PreconditionError("marker set contains a non-finite point");
        }
    }
    if (!ids.empty() && ids.size() != points.size()) {
        throw PreconditionError("marker ids length does not match points");
    }
}

std::string marker_set_to_csv(const MarkerSet& markers) {
    markers.validate();
    std::ostringstream out;
    out << kHeader << '\n';
    for (std::size_t n = 0; n < markers.size(); ++n) {
        const auto& p = markers.points[n];
        out << to_string(markers.frame) << ',' << (markers.has_ids() ? markers.ids[n] : std::string{}) << ','
            << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << '\n';
    }
    return out.str();
}

MarkerSet marker_set_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw FormatError("empty marker file", 1);
    }
    ++line_no;
    if (trim(line) != kHeader) {
        throw FormatError(std::string("expected header '") + kHeader + "'", line_no);
    }

    MarkerSet markers;
    std::vector<std::string> ids;
    bool any_id = false;
    bool frame_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = row.find(',', start);
            fields.emplace_back(trim(row.substr(start, comma == std::string_view::npos ? comma : comma - start)));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (fields.size() != 5) {
            throw FormatError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
        }
        Frame frame{};
        try {
            frame = frame_from_string(fields[0]);
        } catch (const FormatError&) {
            throw FormatError("unknown frame '" + fields[0] + "'", line_no);
        }
        if (frame_seen && frame != markers.frame) {
            throw FormatError("mixed frames in one marker file", line_no);
        }
        markers.frame = frame;
        frame_seen = true;

        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            const auto v = parse_double(fields[2 + a]);
            if (!v || !std::isfinite(*v)) {
                throw FormatError("non-numeric coordinate '" + fields[2 + a] + "'", line_no);
            }
            p[a] = *v;
        }
        markers.points.push_back(p);
        any_id = any_id || !fields[1].empty();
        ids.push_back(fields[1]);
    }
    if (any_id) {
        markers.ids = std::move(ids);
    }
    return markers;
}

MarkerSet read_marker_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open marker file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return marker_set_from_csv(ss.str());
    } catch (const FormatError& e) {
        throw e.with_context(path.string());
    }
}

void write_marker_csv(const MarkerSet& markers, const std::filesystem::path& path) {
    const auto text = marker_set_to_csv(markers);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace fidreg
