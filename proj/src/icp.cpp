#include "fidreg/icp.hpp"

#include <algorithm>
#include <limits>

#include "fidreg/error.hpp"
#include "fidreg/kdtree.hpp"

namespace fidreg {

namespace {

// Below this size a linear scan is used; results match the tree exactly.
constexpr std::size_t kBruteForceLimit = 32;

class NearestTarget {
public:
    explicit NearestTarget(std::span<const Vec3> target) : target_(target) {
        if (target.size() >= kBruteForceLimit) {
            for (const auto& p : target) {
                tree_.insert(p);
            }
        }
    }

    std::size_t operator()(const Vec3& q) const {
        if (!tree_.empty()) {
            return tree_.nearest(q, 1).front().id;
        }
        std::size_t best = 0;
        double best_d = KdTree<3>::squared_distance(target_[0], q);
        for (std::size_t n = 1; n < target_.size(); ++n) {
            const double d = KdTree<3>::squared_distance(target_[n], q);
            if (d < best_d) {
                best_d = d;
                best = n;
            }
        }
        return best;
    }

private:
    std::span<const Vec3> target_;
    KdTree<3> tree_;
};

AlignmentFit step_with(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& current,
                       const NearestTarget& nearest, std::span<const std::size_t> forced_pairs) {
    std::vector<Vec3> paired(source.size());
    for (std::size_t n = 0; n < source.size(); ++n) {
        const std::size_t idx = forced_pairs.empty() ? nearest(current.apply(source[n])) : forced_pairs[n];
        paired[n] = target[idx];
    }
    return absolute_orientation(source, paired);
}

}  // namespace

IcpConfig IcpConfig::from_key_values(KeyValues kv) {
    IcpConfig c;
    c.max_iterations = static_cast<int>(kv.get_int("max_iterations", c.max_iterations));
    c.rmsd_delta_tolerance = kv.get_double("rmsd_delta_tolerance", c.rmsd_delta_tolerance);
    kv.ensure_all_consumed();
    c.validate();
    return c;
}

void IcpConfig::validate() const {
    if (max_iterations < 1) {
        throw ConfigError("max_iterations must be >= 1");
    }
    if (!(rmsd_delta_tolerance > 0.0)) {
        throw ConfigError("rmsd_delta_tolerance must be > 0");
    }
    if (!initial_transform.is_valid()) {
        throw ConfigError("initial_transform is not a proper rigid transform");
    }
}

AlignmentFit icp_step(std::span<const Vec3> source, std::span<const Vec3> target, const RigidTransform& current,
                      std::span<const std::size_t> forced_pairs) {
    if (target.empty()) {
        throw PreconditionError("icp_step: empty target");
    }
    if (!forced_pairs.empty()) {
        if (forced_pairs.size() != source.size()) {
            throw PreconditionError("icp_step: forced pairs must cover every source point");
        }
        for (const auto idx : forced_pairs) {
            if (idx >= target.size()) {
                throw PreconditionError("icp_step: forced pair index out of range");
            }
        }
    }
    const NearestTarget nearest(target);
    return step_with(source, target, current, nearest, forced_pairs);
}

IcpResult icp_register(const MarkerSet& source, const MarkerSet& target, const IcpConfig& config) {
    config.validate();
    source.validate();
    target.validate();
    if (source.size() < 3 || target.size() < 3) {
        throw InsufficientMarkersError(std::min(source.size(), target.size()));
    }
    if (is_collinear(source.points)) {
        throw DegenerateGeometryError("icp_register: source points are collinear");
    }

    const std::span<const Vec3> src(source.points);
    const std::span<const Vec3> dst(target.points);
    const NearestTarget nearest(dst);

    IcpResult result;
    result.transform = config.initial_transform;
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iterations; ++it) {
        const auto fit = step_with(src, dst, result.transform, nearest, {});
        if (fit.rmsd > previous) {
            result.converged = true;
            break;
        }
        result.transform = fit.transform;
        result.rmsd = fit.rmsd;
        result.rmsd_history.push_back(fit.rmsd);
        result.iterations_used = it + 1;
        if (previous - fit.rmsd < config.rmsd_delta_tolerance) {
            result.converged = true;
            break;
        }
        previous = fit.rmsd;
    }
    return result;
}

nlohmann::json to_json(const IcpResult& result) {
    return {{"transform", to_json(result.transform)},
            {"rmsd", result.rmsd},
            {"iterations_used", result.iterations_used},
            {"converged", result.converged},
            {"rmsd_history", result.rmsd_history}};
}

}  // namespace fidreg
