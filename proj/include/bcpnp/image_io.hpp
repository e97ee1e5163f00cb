#pragma once

#include <string>
#include <vector>

#include "bcpnp/block.hpp"

namespace bcpnp {

/// Row-major real image.
struct Image {
  int height = 0;
  int width = 0;
  Vector pixels;
};

/// Binary (P5) or ASCII (P2) PGM, 8- or 16-bit. Pixels are scaled to [0, 1]
/// by the file's maxval.
Image read_pgm(const std::string& path);
/// Writes a P5 PGM after clamping to [0, 1]; bits is 8 or 16.
void write_pgm(const std::string& path, const Image& image, int bits = 16);

/// Comma-separated numeric matrix, one row per line.
Image read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Image& image);

}  // namespace bcpnp
