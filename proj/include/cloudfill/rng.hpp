#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cloudfill/types.hpp"

namespace cloudfill {

/// splitmix64 step; used to derive independent per-trial seeds from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic random source. The mt19937_64 stream is pinned by the
/// standard and all mappings to doubles are written out by hand, so the same
/// seed yields the same sequence on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    Vec3 normal_vec3(double sigma = 1.0) { return Vec3(normal(), normal(), normal()) * sigma; }

    /// Uniform direction on the unit sphere.
    Vec3 unit_vector() {
        const double z = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, 2.0 * M_PI);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Vec3(s * std::cos(phi), s * std::sin(phi), z);
    }

    /// Uniform point in the unit ball (rejection sampling).
    Vec3 in_unit_ball() {
        for (;;) {
            const Vec3 p(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
            if (p.squaredNorm() <= 1.0) return p;
        }
    }

    /// Rotation by a uniform angle in [0, max_angle_rad] about a uniform axis.
    Mat3 rotation(double max_angle_rad) {
        const Vec3 axis = unit_vector();
        const double angle = uniform(0.0, max_angle_rad);
        return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace cloudfill
