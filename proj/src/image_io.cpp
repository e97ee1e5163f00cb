#include "bcpnp/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bcpnp {
namespace {

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PGM file " + path);
  const std::string magic = header_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error(path + ": not a PGM file");
  Image img;
  int maxval = 0;
  try {
    img.width = std::stoi(header_token(in));
    img.height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
  if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 65535) {
    throw std::runtime_error(path + ": unsupported PGM dimensions or maxval");
  }
  const Index n = static_cast<Index>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P2") {
    for (Index i = 0; i < n; ++i) {
      int v;
      if (!(in >> v)) throw std::runtime_error(path + ": truncated PGM data");
      img.pixels[i] = static_cast<double>(v) / maxval;
    }
    return img;
  }
  const int bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(static_cast<std::size_t>(n) * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error(path + ": truncated PGM data");
  }
  for (Index i = 0; i < n; ++i) {
    const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];  // big-endian
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void write_pgm(const std::string& path, const Image& image, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("write_pgm: bits must be 8 or 16");
  if (image.pixels.size() != static_cast<Index>(image.height) * image.width) {
    throw std::invalid_argument("write_pgm: pixel count does not match shape");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PGM file " + path);
  const int maxval = bits == 8 ? 255 : 65535;
  out << "P5\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
  for (Index i = 0; i < image.pixels.size(); ++i) {
    const double p = std::clamp(image.pixels[i], 0.0, 1.0);
    const auto v = static_cast<int>(std::lround(p * maxval));
    if (bits == 8) {
      out.put(static_cast<char>(v));
    } else {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
}

Image read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file " + path);
  std::vector<double> values;
  Image img;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + cell +
                                 "'");
      }
      ++cols;
    }
    if (img.height == 0) {
      img.width = cols;
    } else if (cols != img.width) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged row");
    }
    ++img.height;
  }
  if (img.height == 0 || img.width == 0) throw std::runtime_error(path + ": empty matrix");
  img.pixels = Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
  return img;
}

void write_csv_matrix(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV file " + path);
  char buf[32];
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", image.pixels[static_cast<Index>(r) * image.width + c]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace bcpnp
