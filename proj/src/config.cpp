#include "cloudfill/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace cloudfill {

using nlohmann::json;

void CompletionConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw InvalidArgumentError("alpha and beta must be non-negative");
    if (!(scale_step > 0.0))
        throw InvalidArgumentError("scale_step must be positive");
    if (!(scale_min > 0.0) || !(scale_max >= scale_min))
        throw InvalidArgumentError("scale grid bounds must satisfy 0 < scale_min <= scale_max");
    if (camera_count < 2)
        throw InvalidArgumentError("camera_count must be at least 2");
    if (depth_resolution[0] <= 0 || depth_resolution[1] <= 0)
        throw InvalidArgumentError("depth_resolution must be positive");
    if (raw_splat_px < 1 || full_splat_px < 1)
        throw InvalidArgumentError("splat sizes must be at least 1");
    if (raw_splat_px > full_splat_px)
        throw InvalidArgumentError("raw_splat_px must not exceed full_splat_px");
    if (!(overlap_radius_factor >= 0.0))
        throw InvalidArgumentError("overlap_radius_factor must be non-negative");
    if (icp_max_iters < 1)
        throw InvalidArgumentError("icp_max_iters must be at least 1");
    if (!(icp_tol > 0.0))
        throw InvalidArgumentError("icp_tol must be positive");
    if (!(hpr_radius_factor >= 1.0))
        throw InvalidArgumentError("hpr_radius_factor must be at least 1");
    if (!(w1 >= 0.0) || !(w2 >= 0.0))
        throw InvalidArgumentError("w1 and w2 must be non-negative");
}

std::vector<double> CompletionConfig::scale_grid() const {
    std::vector<double> grid;
    // Recompute each value from the index so accumulation error cannot drop
    // the final grid point (0.8 + 4 * 0.1 lands a hair above 1.2).
    for (int k = 0;; ++k) {
        const double s = scale_min + k * scale_step;
        if (s > scale_max + 1e-9 * scale_step) break;
        grid.push_back(s);
    }
    return grid;
}

namespace {

json config_to_json(const CompletionConfig& c) {
    json j;
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["scale_min"] = c.scale_min;
    j["scale_max"] = c.scale_max;
    j["scale_step"] = c.scale_step;
    j["camera_count"] = c.camera_count;
    j["depth_resolution"] = c.depth_resolution;
    j["raw_splat_px"] = c.raw_splat_px;
    j["full_splat_px"] = c.full_splat_px;
    j["overlap_radius_factor"] = c.overlap_radius_factor;
    j["icp_max_iters"] = c.icp_max_iters;
    j["icp_tol"] = c.icp_tol;
    j["hpr_radius_factor"] = c.hpr_radius_factor;
    j["w1"] = c.w1;
    j["w2"] = c.w2;
    j["rng_seed"] = c.rng_seed;
    return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ParseError(std::string("config field '") + key + "': " + e.what(), 0);
        }
    }
}

}  // namespace

std::string CompletionConfig::to_json_string() const {
    return config_to_json(*this).dump(2) + "\n";
}

CompletionConfig CompletionConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
    }
    if (!j.is_object()) throw ParseError("config root must be a JSON object", 0);

    CompletionConfig c;
    const json known = config_to_json(c);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()))
            throw ParseError("unknown config key '" + it.key() + "'", 0);

    read_field(j, "alpha", c.alpha);
    read_field(j, "beta", c.beta);
    read_field(j, "scale_min", c.scale_min);
    read_field(j, "scale_max", c.scale_max);
    read_field(j, "scale_step", c.scale_step);
    read_field(j, "camera_count", c.camera_count);
    read_field(j, "depth_resolution", c.depth_resolution);
    read_field(j, "raw_splat_px", c.raw_splat_px);
    read_field(j, "full_splat_px", c.full_splat_px);
    read_field(j, "overlap_radius_factor", c.overlap_radius_factor);
    read_field(j, "icp_max_iters", c.icp_max_iters);
    read_field(j, "icp_tol", c.icp_tol);
    read_field(j, "hpr_radius_factor", c.hpr_radius_factor);
    read_field(j, "w1", c.w1);
    read_field(j, "w2", c.w2);
    read_field(j, "rng_seed", c.rng_seed);
    c.validate();
    return c;
}

CompletionConfig CompletionConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgumentError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_string(buf.str());
}

void CompletionConfig::save_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgumentError("cannot write config file " + path.string());
    out << to_json_string();
}

}  // namespace cloudfill
