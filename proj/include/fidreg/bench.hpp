#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fidreg/icp.hpp"
#include "fidreg/kv_config.hpp"
#include "fidreg/markers.hpp"
#include "fidreg/rigid.hpp"
#include "fidreg/triangle_registration.hpp"

namespace fidreg {

/// Synthetic registration scene.
///
/// Draw order from SplitMix64(seed), which fixes the scene bit-for-bit:
///  1. CT markers, x then y then z uniform in the box centred on the origin
///     (rejected and redrawn while closer than min_separation_mm to an earlier one);
///  2. if random_transform: rotation (uniform over SO(3), or a uniform axis with
///     rotation_angle_deg when that is >= 0), then translation x,y,z uniform in
///     [-translation_range_mm, translation_range_mm];
///  3. three normals per CT marker (noise, scaled by noise_sigma_mm);
///  4. dropout_count removals, each uniform over the remaining device markers;
///  5. decoy_count CT-box points mapped by the true transform;
///  6. Fisher-Yates shuffle of the device markers.
struct SceneSpec {
    int n_markers = 3;
    Vec3 placement_extent_mm{150.0, 150.0, 150.0};
    bool random_transform = true;
    RigidTransform fixed_transform;
    double rotation_angle_deg = -1.0;
    double translation_range_mm = 100.0;
    double noise_sigma_mm = 0.0;
    int dropout_count = 0;
    int decoy_count = 0;
    double min_separation_mm = 0.0;
    std::uint64_t seed = 0;

    static SceneSpec from_key_values(KeyValues& kv);
    void validate() const;
};

struct Scene {
    MarkerSet ct;
    MarkerSet device;
    RigidTransform truth;  // ct -> device
    std::vector<int> device_source;  // CT index per device marker, -1 for decoys
};

Scene generate_scene(const SceneSpec& spec);

/// Mean distance between estimated(p) and truth(p) over the targets.
double target_registration_error(const RigidTransform& estimated, const RigidTransform& truth,
                                 const std::vector<Vec3>& targets);

enum class Method { Triangle, Icp };
std::string to_string(Method method);
Method method_from_string(const std::string& name);

struct TrialRecord {
    Method method = Method::Triangle;
    std::uint64_t seed = 0;
    int n_markers = 0;
    double noise_sigma_mm = 0.0;
    int dropout = 0;
    int decoys = 0;
    double tre_mm = 0.0;
    double rotation_error_rad = 0.0;
    double translation_error_mm = 0.0;
    double time_us = 0.0;
    bool flipped = false;
    std::string status = "ok";

    bool ok() const noexcept { return status == "ok"; }
};

struct BenchOptions {
    RegistrationConfig registration;
    IcpConfig icp;
    bool warmup = true;
};

/// Runs every (scene spec, method) cell for `trials_per_cell` trials. Trial t
/// of a cell uses seed derive_seed(spec.seed, t), so methods see the same
/// scenes. Output is ordered by spec, then method, then trial.
std::vector<TrialRecord> run_benchmark(const std::vector<SceneSpec>& grid, const std::vector<Method>& methods,
                                       int trials_per_cell, const BenchOptions& options = {});

/// One trial on a given scene; failures are reported in the status field.
TrialRecord run_trial(const Scene& scene, const SceneSpec& spec, Method method, const BenchOptions& options);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for fewer than 2 values
};
Stat mean_and_stddev(const std::vector<double>& values);

struct CellSummary {
    Method method = Method::Triangle;
    int n_markers = 0;
    double noise_sigma_mm = 0.0;
    int dropout = 0;
    int decoys = 0;
    int trials = 0;
    int failures = 0;
    Stat tre_mm, rotation_error_rad, translation_error_mm, time_us;
};

/// Aggregates consecutive records of the same cell over successful trials.
std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

std::string records_to_csv(const std::vector<TrialRecord>& records);
nlohmann::json summary_to_json(const std::vector<CellSummary>& summary);

struct BenchGrid {
    std::vector<SceneSpec> cells;
    std::vector<Method> methods{Method::Triangle};
    int trials_per_cell = 10;

    /// List-valued keys n_markers, noise_sigma_mm, dropout, decoys expand to
    /// their Cartesian product; the remaining SceneSpec keys apply to all cells.
    static BenchGrid from_key_values(KeyValues kv);
};

}  // namespace fidreg
