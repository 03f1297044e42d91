#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cloudfill/errors.hpp"

namespace cloudfill {

/// All tunables of the completion pipeline. The JSON form is a flat object
/// whose keys mirror the field names below; unknown keys are rejected and
/// missing keys keep their defaults.
struct CompletionConfig {
    double alpha = 1.0;                    // weight of the geometric term in the alignment objective
    double beta = 0.1;                     // weight of the color term
    double scale_min = 0.8;                // scale grid lower bound
    double scale_max = 1.2;                // scale grid upper bound
    double scale_step = 0.1;               // scale grid spacing
    std::size_t camera_count = 42;         // viewpoint lattice size
    std::array<int, 2> depth_resolution = {512, 512};
    int raw_splat_px = 1;                  // splat half-size parameter for raw depth
    int full_splat_px = 5;                 // splat half-size parameter for the silhouette
    double overlap_radius_factor = 2.0;    // times the median nearest-neighbor spacing
    int icp_max_iters = 50;
    double icp_tol = 1e-6;
    double hpr_radius_factor = 100.0;      // flip-sphere radius as a multiple of the max distance
    double w1 = 1.0;                       // image term weight in preservation loss
    double w2 = 1.0;                       // depth term weight in preservation loss
    std::uint64_t rng_seed = 0;

    /// Throws InvalidArgumentError when any field is out of range.
    void validate() const;

    /// Scale values scale_min, scale_min + scale_step, ... up to scale_max
    /// (inclusive, robust to floating-point accumulation).
    std::vector<double> scale_grid() const;

    std::string to_json_string() const;
    static CompletionConfig from_json_string(const std::string& text);
    static CompletionConfig load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;
};

}  // namespace cloudfill
