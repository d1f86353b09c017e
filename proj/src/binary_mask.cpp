#include "mis/binary_mask.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "mis/errors.hpp"

namespace mis {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

BinaryMask BinaryMask::upsample(std::uint32_t factor) const {
  if (factor == 0) throw ArgumentError("upsample factor must be positive");
  BinaryMask out(height_ * factor, width_ * factor);
  for (std::uint32_t r = 0; r < out.height_; ++r) {
    for (std::uint32_t c = 0; c < out.width_; ++c) {
      out.set(r, c, get(r / factor, c / factor));
    }
  }
  return out;
}

void write_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  std::string row(mask.width(), '\0');
  for (std::uint32_t r = 0; r < mask.height(); ++r) {
    for (std::uint32_t c = 0; c < mask.width(); ++c) {
      row[c] = mask.get(r, c) ? static_cast<char>(255) : '\0';
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("short write to " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(ch);
  }
  return token;
}

}  // namespace

BinaryMask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (header_token(in) != "P5") throw FormatError(path.string() + " is not a binary PGM");
  unsigned long width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(header_token(in));
    height = std::stoul(header_token(in));
    maxval = std::stoul(header_token(in));
  } catch (const std::exception&) {
    throw FormatError("malformed PGM header in " + path.string());
  }
  if (width == 0 || height == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported PGM geometry or maxval in " + path.string());
  }
  BinaryMask mask(static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width));
  std::string row(width, '\0');
  for (std::uint32_t r = 0; r < height; ++r) {
    if (!in.read(row.data(), static_cast<std::streamsize>(width))) {
      throw TruncationError("PGM raster truncated in " + path.string());
    }
    for (std::uint32_t c = 0; c < width; ++c) {
      mask.set(r, c, static_cast<unsigned char>(row[c]) * 2 >= maxval);
    }
  }
  return mask;
}

}  // namespace mis
