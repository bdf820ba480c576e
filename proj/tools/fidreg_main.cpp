// fidreg: fiducial-marker CT segmentation, triangle registration, ICP
// baseline, surface export and synthetic benchmarks.
//
// Exit codes: 0 success, 1 domain error (e.g. too few markers, no match),
// 2 usage, format or I/O error. Errors are one line on stderr.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fidreg/bench.hpp"
#include "fidreg/error.hpp"
#include "fidreg/icp.hpp"
#include "fidreg/mesh.hpp"
#include "fidreg/segmentation.hpp"
#include "fidreg/triangle_registration.hpp"
#include "fidreg/volume.hpp"

namespace fs = std::filesystem;
using namespace fidreg;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

MarkerSet load_markers(const fs::path& path, Frame expected) {
    auto markers = read_marker_csv(path);
    if (!markers.points.empty() && markers.frame != expected) {
        throw FormatError(path.string() + ": expected frame '" + to_string(expected) + "'");
    }
    markers.frame = expected;
    return markers;
}

int cmd_segment(const fs::path& volume_path, const fs::path& config_path, const fs::path& out_csv) {
    const auto volume = read_volume(volume_path);
    const auto config = SegmentationConfig::from_key_values(KeyValues::load(config_path));
    const auto result = segment_markers_detailed(volume, config);
    write_marker_csv(result.markers, out_csv);
    std::cerr << "markers: " << result.markers.size() << " (of " << result.components_found << " components)\n";
    for (std::size_t n = 0; n < result.kept.size(); ++n) {
        std::cerr << "  marker " << n << ": " << result.kept[n].voxel_count() << " voxels, "
                  << result.kept[n].volume_mm3 << " mm3\n";
    }
    return 0;
}

int cmd_mesh(const fs::path& volume_path, double iso, const fs::path& out) {
    const auto ext = out.extension().string();
    if (ext != ".stl" && ext != ".obj") {
        throw UsageError("output must end in .stl or .obj, got '" + out.string() + "'");
    }
    const auto mesh = marching_cubes(read_volume(volume_path), iso);
    if (ext == ".stl") {
        write_stl(mesh, out);
    } else {
        write_obj(mesh, out);
    }
    std::cerr << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.faces.size() << " faces\n";
    return 0;
}

int cmd_register(const fs::path& ct_csv, const fs::path& device_csv, const std::string& config_path,
                 const fs::path& out_json) {
    const auto ct = load_markers(ct_csv, Frame::Ct);
    const auto device = load_markers(device_csv, Frame::Device);
    const auto config =
        config_path.empty() ? RegistrationConfig{} : RegistrationConfig::from_key_values(KeyValues::load(config_path));
    const auto result = register_marker_sets(ct, device, config);
    write_json(out_json, to_json(result, &device));
    std::cerr << "registered: rmsd " << result.rmsd << " mm, flipped " << (result.flipped ? "true" : "false") << "\n";
    return 0;
}

int cmd_icp(const fs::path& ct_csv, const fs::path& device_csv, const std::string& config_path,
            const fs::path& out_json) {
    const auto ct = load_markers(ct_csv, Frame::Ct);
    const auto device = load_markers(device_csv, Frame::Device);
    const auto config = config_path.empty() ? IcpConfig{} : IcpConfig::from_key_values(KeyValues::load(config_path));
    const auto result = icp_register(ct, device, config);
    write_json(out_json, to_json(result));
    std::cerr << "icp: rmsd " << result.rmsd << " mm after " << result.iterations_used << " iterations\n";
    return 0;
}

int cmd_simulate(const fs::path& spec_path, const std::string& prefix) {
    auto kv = KeyValues::load(spec_path);
    const auto spec = SceneSpec::from_key_values(kv);
    kv.ensure_all_consumed();
    const auto scene = generate_scene(spec);
    write_marker_csv(scene.ct, prefix + "_ct.csv");
    write_marker_csv(scene.device, prefix + "_device.csv");
    write_json(prefix + "_truth.json", to_json(scene.truth));
    return 0;
}

int cmd_bench(const fs::path& grid_path, const fs::path& out_csv, const std::string& out_json) {
    const auto grid = BenchGrid::from_key_values(KeyValues::load(grid_path));
    const auto records = run_benchmark(grid.cells, grid.methods, grid.trials_per_cell);
    write_text(out_csv, records_to_csv(records));
    if (!out_json.empty()) {
        write_json(out_json, summary_to_json(summarize(records)));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fiducial-marker CT registration toolkit"};
    app.require_subcommand(1);

    std::string volume, config, out, ct, device, spec, prefix, grid, out_json;
    double iso = kDefaultSkinIsoHu;

    auto* segment = app.add_subcommand("segment", "Segment fiducial markers from a VOL file into a marker CSV");
    segment->add_option("--volume", volume, "Input VOL file")->required();
    segment->add_option("--config", config, "Segmentation key/value config (expected_mm3 required)")->required();
    segment->add_option("--out", out, "Output marker CSV")->required();

    auto* mesh = app.add_subcommand("mesh", "Extract an isosurface as binary STL or ASCII OBJ");
    mesh->add_option("--volume", volume, "Input VOL file")->required();
    mesh->add_option("--iso", iso, "Iso value in HU (default -300, skin)");
    mesh->add_option("--out", out, "Output .stl or .obj")->required();

    auto* reg = app.add_subcommand("register", "Triangle-matching registration of CT markers to device markers");
    reg->add_option("--ct", ct, "CT marker CSV")->required();
    reg->add_option("--device", device, "Device marker CSV (inserted in file order)")->required();
    reg->add_option("--config", config, "Registration key/value config");
    reg->add_option("--out", out, "Output result JSON")->required();

    auto* icp = app.add_subcommand("icp", "ICP baseline registration of CT markers to device markers");
    icp->add_option("--ct", ct, "CT marker CSV (source)")->required();
    icp->add_option("--device", device, "Device marker CSV (target)")->required();
    icp->add_option("--config", config, "ICP key/value config");
    icp->add_option("--out", out, "Output result JSON")->required();

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic CT/device marker scene");
    simulate->add_option("--spec", spec, "Scene key/value spec")->required();
    simulate->add_option("--out-prefix", prefix, "Writes <prefix>_ct.csv, <prefix>_device.csv, <prefix>_truth.json")
        ->required();

    auto* bench = app.add_subcommand("bench", "Run a Monte-Carlo benchmark grid");
    bench->add_option("--grid", grid, "Grid key/value file")->required();
    bench->add_option("--out", out, "Output per-trial CSV")->required();
    bench->add_option("--summary", out_json, "Output per-cell JSON summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (segment->parsed()) {
            return cmd_segment(volume, config, out);
        }
        if (mesh->parsed()) {
            return cmd_mesh(volume, iso, out);
        }
        if (reg->parsed()) {
            return cmd_register(ct, device, config, out);
        }
        if (icp->parsed()) {
            return cmd_icp(ct, device, config, out);
        }
        if (simulate->parsed()) {
            return cmd_simulate(spec, prefix);
        }
        if (bench->parsed()) {
            return cmd_bench(grid, out, out_json);
        }
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
