#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fidreg/bench.hpp"
#include "fidreg/error.hpp"
#include "fidreg/icp.hpp"
#include "fidreg/mesh.hpp"
#include "fidreg/rng.hpp"
#include "fidreg/segmentation.hpp"
#include "fidreg/triangle_registration.hpp"
#include "fidreg/volume.hpp"

namespace py = pybind11;
using namespace fidreg;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const Points& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) {
        throw PreconditionError("expected an (N, 3) array of points");
    }
    const auto r = a.unchecked<2>();
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t n = 0; n < a.shape(0); ++n) {
        out.emplace_back(r(n, 0), r(n, 1), r(n, 2));
    }
    return out;
}

py::array_t<double> from_points(const std::vector<Vec3>& pts) {
    py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t n = 0; n < pts.size(); ++n) {
        for (int a = 0; a < 3; ++a) {
            w(static_cast<py::ssize_t>(n), a) = pts[n][a];
        }
    }
    return out;
}

py::dict transform_dict(const RigidTransform& t) {
    py::dict d;
    d["rotation"] = Mat3(t.rotation);
    d["translation"] = Vec3(t.translation);
    return d;
}

RigidTransform transform_from(const Mat3& r, const Vec3& t) {
    RigidTransform out{r, t};
    if (!out.is_valid()) {
        throw PreconditionError("rotation is not a proper orthonormal matrix");
    }
    return out;
}

// Array indexed [k, j, i], matching the x-fastest voxel order.
Volume make_volume(const py::array_t<std::int16_t, py::array::c_style | py::array::forcecast>& data,
                   const Vec3& spacing, const Vec3& origin) {
    if (data.ndim() != 3) {
        throw PreconditionError("volume data must be a 3-D array indexed [k, j, i]");
    }
    const Dims dims{static_cast<int>(data.shape(2)), static_cast<int>(data.shape(1)), static_cast<int>(data.shape(0))};
    std::vector<std::int16_t> vox(data.data(), data.data() + data.size());
    return Volume(dims, spacing, origin, std::move(vox));
}

py::array_t<std::int16_t> volume_array(const Volume& v) {
    const auto& d = v.dims();
    py::array_t<std::int16_t> out({d[2], d[1], d[0]});
    std::copy(v.voxels().begin(), v.voxels().end(), out.mutable_data());
    return out;
}

py::dict scene_dict(const Scene& s) {
    py::dict d;
    d["ct"] = from_points(s.ct.points);
    d["device"] = from_points(s.device.points);
    d["device_ids"] = s.device.ids;
    d["device_source"] = s.device_source;
    d["truth"] = transform_dict(s.truth);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fiducial-marker registration core";

    py::register_exception<DomainError>(m, "DomainError", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    py::class_<Volume>(m, "Volume")
        .def(py::init(&make_volume), py::arg("data"), py::arg("spacing") = Vec3(1, 1, 1),
             py::arg("origin") = Vec3(0, 0, 0))
        .def_property_readonly("dims", &Volume::dims)
        .def_property_readonly("spacing", [](const Volume& v) { return Vec3(v.spacing()); })
        .def_property_readonly("origin", [](const Volume& v) { return Vec3(v.origin()); })
        .def_property_readonly("array", &volume_array)
        .def("__eq__", [](const Volume& a, const Volume& b) { return a == b; });

    m.def("read_volume", &read_volume, py::arg("path"));
    m.def("write_volume", &write_volume, py::arg("volume"), py::arg("path"));

    m.def(
        "segment_markers",
        [](const Volume& v, double expected_mm3, double hu_min, int connectivity, double tolerance_fraction,
           bool weighted_centroid) {
            SegmentationConfig cfg;
            cfg.expected_mm3 = expected_mm3;
            cfg.hu_min = hu_min;
            cfg.connectivity = connectivity_from_int(connectivity);
            cfg.tolerance_fraction = tolerance_fraction;
            cfg.weighted_centroid = weighted_centroid;
            cfg.validate();
            return from_points(segment_markers(v, cfg).points);
        },
        py::arg("volume"), py::arg("expected_mm3"), py::arg("hu_min") = 300.0, py::arg("connectivity") = 26,
        py::arg("tolerance_fraction") = 0.5, py::arg("weighted_centroid") = false,
        "Marker centroids (N, 3) in world mm.");

    m.def(
        "absolute_orientation",
        [](const Points& source, const Points& target) {
            const auto fit = absolute_orientation(to_points(source), to_points(target));
            py::dict d = transform_dict(fit.transform);
            d["rmsd"] = fit.rmsd;
            return d;
        },
        py::arg("source"), py::arg("target"));

    m.def(
        "triangle_key",
        [](const Vec3& a, const Vec3& b, const Vec3& c) {
            const auto k = triangle_key(a, b, c);
            return py::make_tuple(k.r2, k.r3, k.e1);
        },
        py::arg("p1"), py::arg("p2"), py::arg("p3"), "(e2/e1, e3/e1, e1) with e1 the longest edge.");

    m.def(
        "register_markers",
        [](const Points& ct, const Points& device, std::size_t k, double scale_tolerance_mm, double tie_epsilon_mm) {
            RegistrationConfig cfg;
            cfg.k = k;
            cfg.scale_tolerance_mm = scale_tolerance_mm;
            cfg.tie_epsilon_mm = tie_epsilon_mm;
            const auto r = register_marker_sets({Frame::Ct, to_points(ct), {}}, {Frame::Device, to_points(device), {}},
                                                cfg);
            py::dict d = transform_dict(r.transform);
            d["rmsd"] = r.rmsd;
            d["triangle_rmsd"] = r.triangle_rmsd;
            d["shape_distance"] = r.shape_distance;
            d["flipped"] = r.flipped;
            d["ct_indices"] = r.ct_indices;
            d["device_indices"] = r.device_indices;
            return d;
        },
        py::arg("ct"), py::arg("device"), py::arg("k") = 4, py::arg("scale_tolerance_mm") = 5.0,
        py::arg("tie_epsilon_mm") = 0.5);

    m.def(
        "icp_register",
        [](const Points& source, const Points& target, int max_iterations, double tolerance, const Mat3& r0,
           const Vec3& t0) {
            IcpConfig cfg;
            cfg.max_iterations = max_iterations;
            cfg.rmsd_delta_tolerance = tolerance;
            cfg.initial_transform = transform_from(r0, t0);
            const auto r = icp_register({Frame::Ct, to_points(source), {}}, {Frame::Device, to_points(target), {}}, cfg);
            py::dict d = transform_dict(r.transform);
            d["rmsd"] = r.rmsd;
            d["iterations_used"] = r.iterations_used;
            d["converged"] = r.converged;
            d["rmsd_history"] = r.rmsd_history;
            return d;
        },
        py::arg("source"), py::arg("target"), py::arg("max_iterations") = 100, py::arg("rmsd_delta_tolerance") = 1e-6,
        py::arg("initial_rotation") = Mat3(Mat3::Identity()), py::arg("initial_translation") = Vec3(0, 0, 0));

    m.def(
        "marching_cubes",
        [](const Volume& v, double iso) {
            const auto mesh = marching_cubes(v, iso);
            py::array_t<int> faces({static_cast<py::ssize_t>(mesh.faces.size()), py::ssize_t{3}});
            auto w = faces.mutable_unchecked<2>();
            for (std::size_t n = 0; n < mesh.faces.size(); ++n) {
                for (int a = 0; a < 3; ++a) {
                    w(static_cast<py::ssize_t>(n), a) = mesh.faces[n][a];
                }
            }
            return py::make_tuple(from_points(mesh.vertices), faces);
        },
        py::arg("volume"), py::arg("iso_hu") = kDefaultSkinIsoHu, "(vertices (V, 3), faces (F, 3)).");

    m.def(
        "stl_bytes",
        [](const Volume& v, double iso) { return py::bytes(stl_bytes(marching_cubes(v, iso))); },
        py::arg("volume"), py::arg("iso_hu") = kDefaultSkinIsoHu);

    m.def(
        "generate_scene",
        [](int n_markers, double noise_sigma_mm, int dropout, int decoys, std::uint64_t seed,
           double rotation_angle_deg, double translation_range_mm, double min_separation_mm) {
            SceneSpec s;
            s.n_markers = n_markers;
            s.noise_sigma_mm = noise_sigma_mm;
            s.dropout_count = dropout;
            s.decoy_count = decoys;
            s.seed = seed;
            s.rotation_angle_deg = rotation_angle_deg;
            s.translation_range_mm = translation_range_mm;
            s.min_separation_mm = min_separation_mm;
            return scene_dict(generate_scene(s));
        },
        py::arg("n_markers") = 3, py::arg("noise_sigma_mm") = 0.0, py::arg("dropout") = 0, py::arg("decoys") = 0,
        py::arg("seed") = 0, py::arg("rotation_angle_deg") = -1.0, py::arg("translation_range_mm") = 100.0,
        py::arg("min_separation_mm") = 0.0);

    m.def(
        "run_benchmark",
        [](const std::vector<int>& n_markers, double noise_sigma_mm, const std::vector<std::string>& methods,
           int trials, std::uint64_t seed) {
            std::vector<SceneSpec> grid;
            for (std::size_t c = 0; c < n_markers.size(); ++c) {
                SceneSpec s;
                s.n_markers = n_markers[c];
                s.noise_sigma_mm = noise_sigma_mm;
                s.seed = derive_seed(seed, c);
                grid.push_back(s);
            }
            std::vector<Method> ms;
            for (const auto& name : methods) {
                ms.push_back(method_from_string(name));
            }
            return records_to_csv(run_benchmark(grid, ms, trials));
        },
        py::arg("n_markers"), py::arg("noise_sigma_mm") = 0.0, py::arg("methods") = std::vector<std::string>{"triangle"},
        py::arg("trials") = 10, py::arg("seed") = 0, "Trial records as CSV text.");
}
