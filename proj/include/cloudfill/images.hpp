#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudfill/errors.hpp"
#include "cloudfill/types.hpp"

namespace cloudfill {

/// Row-major depth raster. depth[i] is meaningful only where valid[i] != 0;
/// valid depths are finite and strictly positive.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> depth;
    std::vector<std::uint8_t> valid;

    DepthImage() = default;
    DepthImage(int w, int h)
        : width(w), height(h), depth(std::size_t(w) * h, 0.0), valid(std::size_t(w) * h, 0) {}

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
    double at(int x, int y) const { return depth[idx(x, y)]; }
    bool valid_at(int x, int y) const { return valid[idx(x, y)] != 0; }

    std::size_t count_valid() const {
        std::size_t n = 0;
        for (std::uint8_t v : valid) n += (v != 0);
        return n;
    }
};

/// Row-major binary raster (silhouettes, inpaint masks).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(std::size_t(w) * h, 0) {}

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
    bool at(int x, int y) const { return bits[idx(x, y)] != 0; }
    void set(int x, int y, bool on) { bits[idx(x, y)] = on ? 1 : 0; }

    std::size_t count_set() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += (b != 0);
        return n;
    }
};

/// Row-major RGB raster with channels in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h, Vec3::Zero()) {}

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t idx(int x, int y) const { return std::size_t(y) * width + x; }
    const Vec3& at(int x, int y) const { return pixels[idx(x, y)]; }
    Vec3& at(int x, int y) { return pixels[idx(x, y)]; }
};

/// Validity bitmap of a depth image.
inline BinaryMask occupancy(const DepthImage& depth) {
    BinaryMask mask(depth.width, depth.height);
    for (std::size_t i = 0; i < depth.valid.size(); ++i) mask.bits[i] = depth.valid[i] ? 1 : 0;
    return mask;
}

}  // namespace cloudfill
