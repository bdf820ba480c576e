#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fidreg/kv_config.hpp"
#include "fidreg/markers.hpp"
#include "fidreg/rigid.hpp"

namespace fidreg {

struct IcpConfig {
    int max_iterations = 100;
    double rmsd_delta_tolerance = 1e-6;
    RigidTransform initial_transform;

    /// Reads max_iterations and rmsd_delta_tolerance.
    static IcpConfig from_key_values(KeyValues kv);
    void validate() const;
};

struct IcpResult {
    RigidTransform transform;
    double rmsd = 0.0;
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> rmsd_history;  // one entry per accepted iteration, non-increasing
};

/// One point-to-point step: pair every source point (moved by `current`)
/// with its nearest target, or with `forced_pairs[i]` when given, then solve
/// absolute orientation on the original source points.
AlignmentFit icp_step(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& current,
                      std::span<const std::size_t> forced_pairs = {});

/// Point-to-point ICP, source -> target.
///
/// Iterates until the rmsd improves by less than the tolerance or the
/// iteration cap is reached. A step that would raise the rmsd is rejected and
/// ends the run, so rmsd_history never increases.
IcpResult icp_register(const MarkerSet& source, const MarkerSet& target, const IcpConfig& config = {});

nlohmann::json to_json(const IcpResult& result);

}  // namespace fidreg
