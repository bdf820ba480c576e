#include "fidreg/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fidreg/error.hpp"
#include "fidreg/format.hpp"
#include "fidreg/rng.hpp"

namespace fidreg {

namespace {

void read_common(KeyValues& kv, SceneSpec& s) {
    const auto extent = kv.get_double_list("placement_extent_mm",
                                           {s.placement_extent_mm.x(), s.placement_extent_mm.y(),
                                            s.placement_extent_mm.z()});
    if (extent.size() == 1) {
        s.placement_extent_mm = Vec3::Constant(extent[0]);
    } else if (extent.size() == 3) {
        s.placement_extent_mm = Vec3(extent[0], extent[1], extent[2]);
    } else {
        throw ConfigError("placement_extent_mm takes 1 or 3 values");
    }
    s.random_transform = kv.get_bool("random_transform", s.random_transform);
    s.rotation_angle_deg = kv.get_double("rotation_angle_deg", s.rotation_angle_deg);
    s.translation_range_mm = kv.get_double("translation_range_mm", s.translation_range_mm);
    s.min_separation_mm = kv.get_double("min_separation_mm", s.min_separation_mm);
    const auto seed = kv.get_int("seed", static_cast<long long>(s.seed));
    if (seed < 0) {
        throw ConfigError("seed must be non-negative");
    }
    s.seed = static_cast<std::uint64_t>(seed);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

SceneSpec SceneSpec::from_key_values(KeyValues& kv) {
    SceneSpec s;
    s.n_markers = static_cast<int>(kv.get_int("n_markers", s.n_markers));
    s.noise_sigma_mm = kv.get_double("noise_sigma_mm", s.noise_sigma_mm);
    s.dropout_count = static_cast<int>(kv.get_int("dropout", s.dropout_count));
    s.decoy_count = static_cast<int>(kv.get_int("decoys", s.decoy_count));
    read_common(kv, s);
    s.validate();
    return s;
}

void SceneSpec::validate() const {
    if (n_markers < 3) {
        throw ConfigError("n_markers must be >= 3");
    }
    if (dropout_count < 0 || decoy_count < 0) {
        throw ConfigError("dropout and decoys must be >= 0");
    }
    if (n_markers - dropout_count < 3) {
        throw ConfigError("n_markers - dropout must be >= 3");
    }
    if (!(noise_sigma_mm >= 0.0) || !(min_separation_mm >= 0.0) || !(translation_range_mm >= 0.0)) {
        throw ConfigError("noise, separation and translation range must be >= 0");
    }
    if (!(placement_extent_mm.minCoeff() > 0.0)) {
        throw ConfigError("placement extent must be > 0");
    }
    if (!random_transform && !fixed_transform.is_valid()) {
        throw ConfigError("fixed_transform is not a proper rigid transform");
    }
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);
    const Vec3 half = 0.5 * spec.placement_extent_mm;
    auto box_point = [&] {
        const double x = rng.uniform(-half.x(), half.x());
        const double y = rng.uniform(-half.y(), half.y());
        const double z = rng.uniform(-half.z(), half.z());
        return Vec3(x, y, z);
    };

    Scene scene;
    scene.ct.frame = Frame::Ct;
    constexpr int kMaxAttempts = 100000;
    for (int m = 0; m < spec.n_markers; ++m) {
        int attempts = 0;
        while (true) {
            const Vec3 p = box_point();
            bool ok = true;
            for (const auto& q : scene.ct.points) {
                if ((p - q).norm() < spec.min_separation_mm) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                scene.ct.points.push_back(p);
                break;
            }
            if (++attempts >= kMaxAttempts) {
                throw ConfigError("cannot place markers with the requested min_separation_mm");
            }
        }
    }

    if (spec.random_transform) {
        if (spec.rotation_angle_deg >= 0.0) {
            const Vec3 axis = rng.random_unit_vector();
            scene.truth.rotation = RigidTransform::from_axis_angle(axis, spec.rotation_angle_deg * std::numbers::pi / 180.0).rotation;
        } else {
            scene.truth.rotation = rng.random_rotation();
        }
        const double r = spec.translation_range_mm;
        const double tx = rng.uniform(-r, r);
        const double ty = rng.uniform(-r, r);
        const double tz = rng.uniform(-r, r);
        scene.truth.translation = Vec3(tx, ty, tz);
    } else {
        scene.truth = spec.fixed_transform;
    }

    std::vector<Vec3> device;
    std::vector<int> source;
    for (int m = 0; m < spec.n_markers; ++m) {
        const double nx = rng.normal();
        const double ny = rng.normal();
        const double nz = rng.normal();
        Vec3 p = scene.truth.apply(scene.ct.points[static_cast<std::size_t>(m)]);
        if (spec.noise_sigma_mm > 0.0) {
            p += spec.noise_sigma_mm * Vec3(nx, ny, nz);
        }
        device.push_back(p);
        source.push_back(m);
    }
    for (int d = 0; d < spec.dropout_count; ++d) {
        const auto idx = static_cast<std::ptrdiff_t>(rng.below(device.size()));
        device.erase(device.begin() + idx);
        source.erase(source.begin() + idx);
    }
    for (int d = 0; d < spec.decoy_count; ++d) {
        device.push_back(scene.truth.apply(box_point()));
        source.push_back(-1 - d);
    }
    for (std::size_t n = device.size(); n > 1; --n) {
        const auto j = static_cast<std::size_t>(rng.below(n));
        std::swap(device[n - 1], device[j]);
        std::swap(source[n - 1], source[j]);
    }

    scene.device.frame = Frame::Device;
    scene.device.points = std::move(device);
    for (const int s : source) {
        scene.device.ids.push_back(s >= 0 ? "m" + std::to_string(s) : "decoy" + std::to_string(-1 - s));
        scene.device_source.push_back(s >= 0 ? s : -1);
    }
    return scene;
}

double target_registration_error(const RigidTransform& estimated, const RigidTransform& truth,
                                 const std::vector<Vec3>& targets) {
    if (targets.empty()) {
        throw PreconditionError("target_registration_error needs at least one target");
    }
    double sum = 0.0;
    for (const auto& p : targets) {
        sum += (estimated.apply(p) - truth.apply(p)).norm();
    }
    return sum / static_cast<double>(targets.size());
}

std::string to_string(Method method) { return method == Method::Triangle ? "triangle" : "icp"; }

Method method_from_string(const std::string& name) {
    if (name == "triangle") {
        return Method::Triangle;
    }
    if (name == "icp") {
        return Method::Icp;
    }
    throw ConfigError("unknown method '" + name + "'");
}

TrialRecord run_trial(const Scene& scene, const SceneSpec& spec, Method method, const BenchOptions& options) {
    TrialRecord rec;
    rec.method = method;
    rec.seed = spec.seed;
    rec.n_markers = spec.n_markers;
    rec.noise_sigma_mm = spec.noise_sigma_mm;
    rec.dropout = spec.dropout_count;
    rec.decoys = spec.decoy_count;

    RigidTransform estimate;
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    try {
        if (method == Method::Triangle) {
            const auto result = register_marker_sets(scene.ct, scene.device, options.registration);
            estimate = result.transform;
            rec.flipped = result.flipped;
        } else {
            estimate = icp_register(scene.ct, scene.device, options.icp).transform;
        }
    } catch (const NoMatchError&) {
        rec.status = "no_match";
    } catch (const DegenerateGeometryError&) {
        rec.status = "degenerate";
    } catch (const InsufficientMarkersError&) {
        rec.status = "insufficient";
    }
    rec.time_us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();

    if (!rec.ok()) {
        rec.tre_mm = rec.rotation_error_rad = rec.translation_error_mm = nan();
        return rec;
    }
    std::vector<Vec3> targets = scene.ct.points;
    targets.push_back(Vec3::Zero());  // scene-box centre
    rec.tre_mm = target_registration_error(estimate, scene.truth, targets);
    rec.rotation_error_rad = rotation_angle_between(estimate.rotation, scene.truth.rotation);
    rec.translation_error_mm = (estimate.translation - scene.truth.translation).norm();
    return rec;
}

std::vector<TrialRecord> run_benchmark(const std::vector<SceneSpec>& grid, const std::vector<Method>& methods,
                                       int trials_per_cell, const BenchOptions& options) {
    if (trials_per_cell < 1) {
        throw PreconditionError("trials_per_cell must be >= 1");
    }
    std::vector<TrialRecord> records;
    for (const auto& cell : grid) {
        cell.validate();
        for (const auto method : methods) {
            if (options.warmup) {
                SceneSpec s = cell;
                s.seed = derive_seed(cell.seed, 0);
                (void)run_trial(generate_scene(s), s, method, options);
            }
            for (int t = 0; t < trials_per_cell; ++t) {
                SceneSpec s = cell;
                s.seed = derive_seed(cell.seed, static_cast<std::uint64_t>(t));
                records.push_back(run_trial(generate_scene(s), s, method, options));
            }
        }
    }
    return records;
}

Stat mean_and_stddev(const std::vector<double>& values) {
    Stat s;
    if (values.empty()) {
        s.mean = nan();
        return s;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (const double v : values) {
            sq += (v - s.mean) * (v - s.mean);
        }
        s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
    std::vector<CellSummary> out;
    auto same_cell = [](const CellSummary& c, const TrialRecord& r) {
        return c.method == r.method && c.n_markers == r.n_markers && c.noise_sigma_mm == r.noise_sigma_mm &&
               c.dropout == r.dropout && c.decoys == r.decoys;
    };
    std::size_t n = 0;
    while (n < records.size()) {
        CellSummary c;
        const auto& first = records[n];
        c.method = first.method;
        c.n_markers = first.n_markers;
        c.noise_sigma_mm = first.noise_sigma_mm;
        c.dropout = first.dropout;
        c.decoys = first.decoys;
        std::vector<double> tre, rot, trans, time;
        for (; n < records.size() && same_cell(c, records[n]); ++n) {
            const auto& r = records[n];
            ++c.trials;
            if (!r.ok()) {
                ++c.failures;
                continue;
            }
            tre.push_back(r.tre_mm);
            rot.push_back(r.rotation_error_rad);
            trans.push_back(r.translation_error_mm);
            time.push_back(r.time_us);
        }
        c.tre_mm = mean_and_stddev(tre);
        c.rotation_error_rad = mean_and_stddev(rot);
        c.translation_error_mm = mean_and_stddev(trans);
        c.time_us = mean_and_stddev(time);
        out.push_back(c);
    }
    return out;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "method,seed,n_markers,noise_sigma_mm,dropout,decoys,tre_mm,rot_err_rad,trans_err_mm,time_us,flipped,status\n";
    for (const auto& r : records) {
        out << to_string(r.method) << ',' << r.seed << ',' << r.n_markers << ',' << format_double(r.noise_sigma_mm)
            << ',' << r.dropout << ',' << r.decoys << ',' << format_double(r.tre_mm) << ','
            << format_double(r.rotation_error_rad) << ',' << format_double(r.translation_error_mm) << ','
            << format_double(r.time_us) << ',' << (r.flipped ? "true" : "false") << ',' << r.status << '\n';
    }
    return out.str();
}

nlohmann::json summary_to_json(const std::vector<CellSummary>& summary) {
    auto stat = [](const Stat& s) {
        nlohmann::json j;
        j["mean"] = std::isfinite(s.mean) ? nlohmann::json(s.mean) : nlohmann::json(nullptr);
        j["stddev"] = s.stddev;
        return j;
    };
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : summary) {
        cells.push_back({{"method", to_string(c.method)},
                         {"n_markers", c.n_markers},
                         {"noise_sigma_mm", c.noise_sigma_mm},
                         {"dropout", c.dropout},
                         {"decoys", c.decoys},
                         {"trials", c.trials},
                         {"failures", c.failures},
                         {"tre_mm", stat(c.tre_mm)},
                         {"rot_err_rad", stat(c.rotation_error_rad)},
                         {"trans_err_mm", stat(c.translation_error_mm)},
                         {"time_us", stat(c.time_us)}});
    }
    return {{"cells", cells}};
}

BenchGrid BenchGrid::from_key_values(KeyValues kv) {
    BenchGrid grid;
    const auto markers = kv.get_int_list("n_markers", {3});
    const auto noise = kv.get_double_list("noise_sigma_mm", {0.0});
    const auto dropout = kv.get_int_list("dropout", {0});
    const auto decoys = kv.get_int_list("decoys", {0});
    grid.trials_per_cell = static_cast<int>(kv.get_int("trials", grid.trials_per_cell));
    grid.methods.clear();
    for (const auto& m : kv.get_string_list("methods", {"triangle"})) {
        grid.methods.push_back(method_from_string(m));
    }
    SceneSpec base;
    read_common(kv, base);
    kv.ensure_all_consumed();
    if (grid.trials_per_cell < 1) {
        throw ConfigError("trials must be >= 1");
    }

    std::uint64_t cell_index = 0;
    for (const auto n : markers) {
        for (const double sigma : noise) {
            for (const auto drop : dropout) {
                for (const auto dec : decoys) {
                    SceneSpec s = base;
                    s.n_markers = static_cast<int>(n);
                    s.noise_sigma_mm = sigma;
                    s.dropout_count = static_cast<int>(drop);
                    s.decoy_count = static_cast<int>(dec);
                    s.seed = derive_seed(base.seed, cell_index++);
                    s.validate();
                    grid.cells.push_back(s);
                }
            }
        }
    }
    return grid;
}

}  // namespace fidreg
