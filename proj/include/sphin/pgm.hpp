#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "sphin/image.hpp"

namespace sphin {

class format_error : public std::runtime_error {
 public:
  format_error(const std::string& path, std::size_t offset, const std::string& what)
      : std::runtime_error(path + ": " + what + " (byte " + std::to_string(offset) + ")") {}
};

namespace detail {

class PgmScanner {
 public:
  PgmScanner(const std::string& path, std::string bytes)
      : path_(path), bytes_(std::move(bytes)) {}

  // Next whitespace-delimited token, skipping '#' comments to end of line.
  std::string token() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail("unexpected end of header");
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      ++pos_;
    return bytes_.substr(start, pos_ - start);
  }

  int int_token(const char* what) {
    const std::size_t at = pos_;
    const std::string t = token();
    for (char c : t)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        fail_at(at, std::string("expected integer for ") + what);
    if (t.size() > 9) fail_at(at, std::string("integer out of range for ") + what);
    return std::stoi(t);
  }

  // Consumes exactly one whitespace byte after the maxval token (PGM rule),
  // leaving pos_ at the first payload byte.
  void begin_payload() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      fail("missing whitespace before payload");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  const std::string& bytes() const { return bytes_; }

  [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
    throw format_error(path_, at, what);
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t pos_ = 0;

 private:
  std::string path_;
  std::string bytes_;
};

}  // namespace detail

// Reads a binary (P5) or ASCII (P2) portable graymap with maxval <= 255.
inline ImageD read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  detail::PgmScanner s(path, std::move(bytes));
  const std::string magic = s.token();
  if (magic != "P5" && magic != "P2") s.fail_at(0, "not a P5/P2 graymap");
  const int width = s.int_token("width");
  const int height = s.int_token("height");
  const int maxval = s.int_token("maxval");
  if (width <= 0 || height <= 0) s.fail("degenerate dimensions");
  if (maxval <= 0 || maxval > 255) s.fail("unsupported maxval (must be 1..255)");

  ImageD img(height, width);
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (magic == "P5") {
    s.begin_payload();
    if (s.bytes().size() - s.pos() < n) s.fail_at(s.bytes().size(), "truncated payload");
    const std::size_t base = s.pos();
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<unsigned char>(s.bytes()[base + i]);
      if (v > maxval) s.fail_at(base + i, "sample exceeds maxval");
      img.data()[i] = static_cast<double>(v);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      s.skip_space_and_comments();
      const std::size_t at = s.pos();
      if (at >= s.bytes().size()) s.fail_at(at, "truncated payload");
      const int v = s.int_token("sample");
      if (v > maxval) s.fail_at(at, "sample exceeds maxval");
      img.data()[i] = static_cast<double>(v);
    }
  }
  return img;
}

// Writes binary P5 with maxval 255; values are rounded half away from zero
// and clamped to [0, 255].
inline void write_pgm(const ImageD& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols()));
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      row[static_cast<std::size_t>(x)] = static_cast<unsigned char>(quantize_byte(img(y, x)));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace sphin
