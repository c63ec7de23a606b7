#pragma once

#include <Eigen/Dense>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sphin/image.hpp"
#include "sphin/pgm.hpp"
#include "sphin/rng.hpp"

namespace sphin {

// A particle of the reconstruction: pixel position, carried gray value,
// Voronoi influence area V, initial smoothing length h, and an optional
// anisotropy tensor (absent means isotropic support of radius h).
struct MaskPoint {
  PixelCoord pos;
  double gray = 0.0;
  double area = 1.0;
  double smoothing = 1.0;
  std::optional<Eigen::Matrix2d> tensor;
};

class InpaintingMask {
 public:
  InpaintingMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("mask: degenerate dimensions");
    index_ = Eigen::ArrayXXi::Constant(height, width, -1);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t pixel_count() const { return std::int64_t(width_) * height_; }
  const std::vector<MaskPoint>& points() const { return points_; }
  std::vector<MaskPoint>& points() { return points_; }
  std::size_t size() const { return points_.size(); }
  double density() const { return double(points_.size()) / double(pixel_count()); }

  bool occupied(int x, int y) const { return index_(y, x) >= 0; }
  // Index of the point at (x, y), or -1.
  int index_at(int x, int y) const { return index_(y, x); }

  void add(MaskPoint p) {
    if (p.pos.x < 0 || p.pos.x >= width_ || p.pos.y < 0 || p.pos.y >= height_)
      throw std::invalid_argument("mask: point outside image");
    if (occupied(p.pos.x, p.pos.y))
      throw std::invalid_argument("mask: duplicate point position");
    index_(p.pos.y, p.pos.x) = static_cast<int>(points_.size());
    points_.push_back(std::move(p));
  }

  bool any_tensor() const {
    for (const auto& p : points_)
      if (p.tensor) return true;
    return false;
  }

 private:
  int width_, height_;
  std::vector<MaskPoint> points_;
  Eigen::ArrayXXi index_;
};

// Square grid of mask points with the given step, anchored at (0, 0).
inline InpaintingMask make_regular_mask(int width, int height, int step, const ImageD& img) {
  if (step < 1) throw std::invalid_argument("regular mask: step must be >= 1");
  InpaintingMask m(width, height);
  for (int y = 0; y < height; y += step)
    for (int x = 0; x < width; x += step)
      m.add({{x, y}, img(y, x)});
  return m;
}

// floor(density * w * h) distinct positions drawn uniformly without
// replacement (partial Fisher-Yates over the pixel indices).
inline InpaintingMask make_random_mask(int width, int height, double density,
                                       std::uint64_t seed, const ImageD& img) {
  if (!(density > 0.0) || density > 1.0)
    throw std::invalid_argument("random mask: density must be in (0, 1]");
  const std::int64_t n_pixels = std::int64_t(width) * height;
  const auto n_points = static_cast<std::int64_t>(density * double(n_pixels));
  if (n_points < 1) throw std::invalid_argument("random mask: density selects zero pixels");

  std::vector<std::int64_t> slots(static_cast<std::size_t>(n_pixels));
  for (std::int64_t i = 0; i < n_pixels; ++i) slots[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  InpaintingMask m(width, height);
  for (std::int64_t i = 0; i < n_points; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(bounded(rng, std::uint64_t(n_pixels - i)));
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
    const int x = static_cast<int>(slots[static_cast<std::size_t>(i)] % width);
    const int y = static_cast<int>(slots[static_cast<std::size_t>(i)] / width);
    m.add({{x, y}, img(y, x)});
  }
  return m;
}

// Pixels with mask-image value >= 128 are known; gray values come from the
// damaged image. Used for scratch/text removal inputs.
inline InpaintingMask mask_from_image(const ImageD& maskfile, const ImageD& damaged) {
  if (maskfile.rows() != damaged.rows() || maskfile.cols() != damaged.cols())
    throw std::invalid_argument("mask_from_image: dimension mismatch");
  InpaintingMask m(static_cast<int>(maskfile.cols()), static_cast<int>(maskfile.rows()));
  for (int y = 0; y < maskfile.rows(); ++y)
    for (int x = 0; x < maskfile.cols(); ++x)
      if (maskfile(y, x) >= 128.0) m.add({{x, y}, damaged(y, x)});
  if (m.size() == 0) throw std::runtime_error("mask_from_image: empty mask");
  return m;
}

inline std::string gray_sidecar_path(const std::string& path) { return path + ".gray.txt"; }
inline std::string tensor_sidecar_path(const std::string& path) { return path + ".tensors.txt"; }

// Mask PGM (255 = mask point) plus a text sidecar of `x y gray` triples that
// preserves point order and exact gray values. Tensors, when present, go to
// a second sidecar of `x y gxx gxy gyy` rows.
inline void write_mask(const InpaintingMask& mask, const std::string& path) {
  ImageD grid = ImageD::Zero(mask.height(), mask.width());
  for (const auto& p : mask.points()) grid(p.pos.y, p.pos.x) = 255.0;
  write_pgm(grid, path);

  std::ofstream gray(gray_sidecar_path(path), std::ios::binary);
  if (!gray) throw std::runtime_error(path + ": cannot write gray sidecar");
  char buf[128];
  for (const auto& p : mask.points()) {
    std::snprintf(buf, sizeof buf, "%.17g", p.gray);
    gray << p.pos.x << " " << p.pos.y << " " << buf << "\n";
  }
  gray.close();

  if (mask.any_tensor()) {
    std::ofstream ten(tensor_sidecar_path(path), std::ios::binary);
    if (!ten) throw std::runtime_error(path + ": cannot write tensor sidecar");
    for (const auto& p : mask.points()) {
      if (!p.tensor) continue;
      const Eigen::Matrix2d& g = *p.tensor;
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", g(0, 0), g(0, 1), g(1, 1));
      ten << p.pos.x << " " << p.pos.y << " " << buf << "\n";
    }
  }
}

inline InpaintingMask read_mask(const std::string& path) {
  const ImageD grid = read_pgm(path);
  const int w = static_cast<int>(grid.cols());
  const int h = static_cast<int>(grid.rows());
  std::int64_t grid_points = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (grid(y, x) >= 128.0) ++grid_points;

  std::ifstream gray(gray_sidecar_path(path), std::ios::binary);
  if (!gray) throw std::runtime_error(path + ": missing gray sidecar");
  InpaintingMask m(w, h);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(gray, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int x, y;
    double value;
    if (!(ss >> x >> y >> value))
      throw std::runtime_error(path + ": bad sidecar line " + std::to_string(line_no));
    if (x < 0 || x >= w || y < 0 || y >= h || grid(y, x) < 128.0)
      throw std::runtime_error(path + ": sidecar point not on mask grid at line " +
                               std::to_string(line_no));
    m.add({{x, y}, value});
  }
  if (static_cast<std::int64_t>(m.size()) != grid_points)
    throw std::runtime_error(path + ": sidecar/grid point count mismatch");
  if (m.size() == 0) throw std::runtime_error(path + ": empty mask");

  std::ifstream ten(tensor_sidecar_path(path), std::ios::binary);
  if (ten) {
    line_no = 0;
    while (std::getline(ten, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      int x, y;
      double gxx, gxy, gyy;
      if (!(ss >> x >> y >> gxx >> gxy >> gyy))
        throw std::runtime_error(path + ": bad tensor line " + std::to_string(line_no));
      if (x < 0 || x >= w || y < 0 || y >= h || !m.occupied(x, y))
        throw std::runtime_error(path + ": tensor for non-mask pixel at line " +
                                 std::to_string(line_no));
      Eigen::Matrix2d g;
      g << gxx, gxy, gxy, gyy;
      m.points()[static_cast<std::size_t>(m.index_at(x, y))].tensor = g;
    }
  }
  return m;
}

}  // namespace sphin
