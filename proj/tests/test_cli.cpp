#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "fidreg/markers.hpp"
#include "fidreg/volume.hpp"
#include "test_support.hpp"

using namespace fidreg;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

Run fidreg_cli(const fs::path& dir, const std::string& args) {
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(FIDREG_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(err)};
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

void write_phantom(const fs::path& path, bool with_markers) {
    const Dims dims{40, 40, 30};
    std::vector<std::int16_t> vox(40 * 40 * 30, 40);
    if (with_markers) {
        testing::paint_cube(vox, dims, {8, 8, 8}, 5, 2000);
        testing::paint_cube(vox, dims, {30, 10, 15}, 5, 2000);
        testing::paint_cube(vox, dims, {15, 30, 22}, 5, 2000);
    }
    write_volume(Volume(dims, Vec3::Ones(), Vec3::Zero(), vox), path);
}

}  // namespace

TEST_CASE("segment") {
    const auto dir = testing::temp_dir("cli_segment");
    write_phantom(dir / "p.vol", true);
    write_phantom(dir / "soft.vol", false);
    spit(dir / "seg.cfg", "expected_mm3 = 125\n");

    auto r = fidreg_cli(dir, "segment --volume " + (dir / "p.vol").string() + " --config " + (dir / "seg.cfg").string() +
                                  " --out " + (dir / "m.csv").string());
    CHECK(r.code == 0);
    CHECK(count_lines(slurp(dir / "m.csv")) == 4);
    CHECK(r.err.find("markers: 3") != std::string::npos);
    CHECK(read_marker_csv(dir / "m.csv").frame == Frame::Ct);

    r = fidreg_cli(dir, "segment --volume " + (dir / "soft.vol").string() + " --config " + (dir / "seg.cfg").string() +
                            " --out " + (dir / "n.csv").string());
    CHECK(r.code == 1);
    CHECK(r.err == "error: insufficient markers: found 0\n");

    r = fidreg_cli(dir, "segment --volume " + (dir / "nope.vol").string() + " --config " + (dir / "seg.cfg").string() +
                            " --out " + (dir / "n.csv").string());
    CHECK(r.code == 2);
    CHECK(count_lines(r.err) == 1);

    r = fidreg_cli(dir, "segment --volume " + (dir / "p.vol").string());
    CHECK(r.code == 2);
    CHECK(fidreg_cli(dir, "").code == 2);
    CHECK(fidreg_cli(dir, "bogus").code == 2);
    CHECK(fidreg_cli(dir, "--help").code == 0);
}

TEST_CASE("simulate, register and icp compose") {
    const auto dir = testing::temp_dir("cli_register");
    spit(dir / "scene.cfg", "n_markers = 6\nseed = 1234\n");
    const std::string sim = "simulate --spec " + (dir / "scene.cfg").string() + " --out-prefix ";
    REQUIRE(fidreg_cli(dir, sim + (dir / "a").string()).code == 0);
    REQUIRE(fidreg_cli(dir, sim + (dir / "b").string()).code == 0);
    CHECK(slurp(dir / "a_ct.csv") == slurp(dir / "b_ct.csv"));
    CHECK(slurp(dir / "a_device.csv") == slurp(dir / "b_device.csv"));
    CHECK(slurp(dir / "a_truth.json") == slurp(dir / "b_truth.json"));

    const std::string pair = " --ct " + (dir / "a_ct.csv").string() + " --device " + (dir / "a_device.csv").string();
    REQUIRE(fidreg_cli(dir, "register" + pair + " --out " + (dir / "r.json").string()).code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(j["rmsd"].get<double>() < 1e-6);
    CHECK(j["device_ids"].size() == 3);
    const auto truth = nlohmann::json::parse(slurp(dir / "a_truth.json"));
    for (int n = 0; n < 3; ++n) {
        CHECK(std::abs(j["transform"]["translation"][n].get<double>() - truth["translation"][n].get<double>()) < 1e-6);
    }
    REQUIRE(fidreg_cli(dir, "register" + pair + " --out " + (dir / "r2.json").string()).code == 0);
    CHECK(slurp(dir / "r.json") == slurp(dir / "r2.json"));

    CHECK(fidreg_cli(dir, "icp" + pair + " --out " + (dir / "i.json").string()).code == 0);
    CHECK(nlohmann::json::parse(slurp(dir / "i.json")).contains("iterations_used"));

    spit(dir / "reg.cfg", "k = 0\n");
    CHECK(fidreg_cli(dir, "register" + pair + " --config " + (dir / "reg.cfg").string() + " --out " +
                              (dir / "x.json").string())
              .code == 2);
}

TEST_CASE("register error mapping") {
    const auto dir = testing::temp_dir("cli_errors");
    spit(dir / "ct.csv", "frame,id,x_mm,y_mm,z_mm\nct,,0,0,0\nct,,30,0,0\nct,,0,40,0\n");
    spit(dir / "two.csv", "frame,id,x_mm,y_mm,z_mm\ndevice,a,0,0,0\ndevice,b,30,0,0\n");
    spit(dir / "bad.csv", "frame,id,x_mm,y_mm,z_mm\ndevice,a,0,0,0\ndevice,b,30,zero,0\ndevice,c,0,40,0\n");
    spit(dir / "big.csv", "frame,id,x_mm,y_mm,z_mm\ndevice,a,0,0,0\ndevice,b,60,0,0\ndevice,c,0,80,0\n");
    const std::string ct = " --ct " + (dir / "ct.csv").string();
    const std::string out = " --out " + (dir / "o.json").string();

    auto r = fidreg_cli(dir, "register" + ct + " --device " + (dir / "two.csv").string() + out);
    CHECK(r.code == 1);
    r = fidreg_cli(dir, "register" + ct + " --device " + (dir / "bad.csv").string() + out);
    CHECK(r.code == 2);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(count_lines(r.err) == 1);
    r = fidreg_cli(dir, "register" + ct + " --device " + (dir / "big.csv").string() + out);
    CHECK(r.code == 1);
    CHECK(r.err.find("no match") != std::string::npos);
    CHECK(r.err.find("best rejected") != std::string::npos);
    r = fidreg_cli(dir, "register --ct " + (dir / "two.csv").string() + " --device " + (dir / "ct.csv").string() + out);
    CHECK(r.code == 2);  // frame mismatch is a format error
}

TEST_CASE("mesh") {
    const auto dir = testing::temp_dir("cli_mesh");
    // Soft-tissue sphere in air, so the default skin iso applies.
    const auto unit = testing::sphere_volume(32, 1.0, 10.0, 40, -1000);
    write_volume(unit, dir / "s.vol");
    REQUIRE(fidreg_cli(dir, "mesh --volume " + (dir / "s.vol").string() + " --out " + (dir / "s.stl").string()).code == 0);
    const auto stl = slurp(dir / "s.stl");
    REQUIRE(stl.size() >= 84);
    std::uint32_t faces = 0;
    for (int n = 3; n >= 0; --n) {
        faces = (faces << 8) | static_cast<unsigned char>(stl[80 + n]);
    }
    CHECK(faces > 0);
    CHECK(stl.size() == 84 + 50 * static_cast<std::size_t>(faces));

    REQUIRE(fidreg_cli(dir, "mesh --volume " + (dir / "s.vol").string() + " --iso 0 --out " + (dir / "s.obj").string())
                .code == 0);
    CHECK(slurp(dir / "s.obj").find("\nf ") != std::string::npos);
    CHECK(fidreg_cli(dir, "mesh --volume " + (dir / "s.vol").string() + " --out " + (dir / "s.ply").string()).code == 2);
}

TEST_CASE("bench") {
    const auto dir = testing::temp_dir("cli_bench");
    spit(dir / "grid.cfg", "n_markers = 5\nnoise_sigma_mm = 1\ntrials = 5\nseed = 3\n");
    const std::string args = "bench --grid " + (dir / "grid.cfg").string() + " --out " + (dir / "b.csv").string() +
                             " --summary " + (dir / "b.json").string();
    REQUIRE(fidreg_cli(dir, args).code == 0);
    const auto csv = slurp(dir / "b.csv");
    CHECK(count_lines(csv) == 6);
    CHECK(csv.rfind("method,seed,n_markers,noise_sigma_mm,dropout,decoys,tre_mm,rot_err_rad,trans_err_mm,time_us,flipped,status\n", 0) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "b.json"));
    CHECK(summary["cells"][0]["trials"] == 5);

    spit(dir / "bad.cfg", "n_markers = 5\nnoise_sigma_mm\n");
    const auto r = fidreg_cli(dir, "bench --grid " + (dir / "bad.cfg").string() + " --out " + (dir / "c.csv").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
}
