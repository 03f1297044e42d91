#pragma once

#include <filesystem>
#include <string>

#include "cloudfill/images.hpp"

namespace cloudfill {

/// Depth maps travel as 16-bit PGM. Valid depths map linearly from
/// [near, far] onto samples [1, 65535]; sample 0 means invalid. The
/// near/far pair is recorded in a header comment so readers can undo the
/// quantization. Writers emit ASCII (P2); readers accept P2 and P5.
std::string write_depth_pgm(const DepthImage& depth);
DepthImage read_depth_pgm(const std::string& bytes);

/// Binary masks travel as 8-bit PGM with samples 0 / 255.
std::string write_mask_pgm(const BinaryMask& mask);
BinaryMask read_mask_pgm(const std::string& bytes);

/// RGB rasters travel as 8-bit binary PPM (P6).
std::string write_ppm(const RgbImage& image);
RgbImage read_ppm(const std::string& bytes);

void write_text_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cloudfill
