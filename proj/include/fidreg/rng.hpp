#pragma once

#include <cstdint>

#include "fidreg/types.hpp"

namespace fidreg {

/// SplitMix64 stream, the generator behind every synthetic scene.
///
/// State advances by 0x9E3779B97F4A7C15 per draw and the output is the
/// SplitMix64 finalizer of the new state, so draw n of seed s is a pure
/// function of (s, n). Derived quantities:
///   uniform01  = (next() >> 11) * 2^-53
///   normal     = Box-Muller pair from two uniforms, cos branch then sin branch
///   rotation   = Shoemake's uniform unit quaternion from three uniforms
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    double uniform01();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, bound) by rejection, bound > 0.
    std::uint64_t below(std::uint64_t bound);
    double normal();
    Mat3 random_rotation();
    /// Uniform direction on the unit sphere.
    Vec3 random_unit_vector();

    static std::uint64_t mix(std::uint64_t z);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Seed for trial `index` of a cell seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace fidreg
