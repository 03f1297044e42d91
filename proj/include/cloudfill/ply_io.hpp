#pragma once

#include <filesystem>
#include <string>

#include "cloudfill/types.hpp"

namespace cloudfill {

/// Parses a PLY byte buffer (format ascii or binary_little_endian 1.0).
/// Vertices need float32 x, y, z and may carry uint8 red, green, blue;
/// other fixed-size scalar properties are skipped. Throws ParseError with
/// the byte offset of the problem.
PointCloud read_ply(const std::string& bytes);

/// Serializes to ASCII PLY. Coordinates are written as float32 values with
/// nine significant digits, so write -> read round-trips exactly; colors are
/// written as round(c * 255).
std::string write_ply(const PointCloud& cloud);

PointCloud read_ply_file(const std::filesystem::path& path);
void write_ply_file(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace cloudfill
