#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "sphin/image.hpp"
#include "sphin/mask.hpp"

namespace sphin {

// Voronoi tessellation of the pixel grid: per-pixel nearest-seed label and
// exact squared Euclidean distance, per-seed cell area in pixels.
struct VoronoiDiagram {
  int width = 0;
  int height = 0;
  Eigen::ArrayXXi label;                 // (y, x) -> seed index
  ImageD dist2;                          // integer-valued squared distance
  std::vector<std::int64_t> area;        // pixels per cell, sums to w*h
};

namespace detail {

// Lower envelope of equal-curvature parabolas over integer abscissas,
// minimizing the combined key big*((x - c)^2 + d2(c)) + label(c). Because
// labels are distinct and below `big`, keys never tie at integer pixels, so
// exact rational boundary comparisons make the result the lexicographic
// (dist2, label) minimum. One instance is reused across rows.
class EnvelopeScan {
 public:
  explicit EnvelopeScan(int n)
      : centers_(n + 1), offsets_(n + 1), num_(n + 1), den_(n + 1) {}

  void reset() { k_ = -1; }

  // Parabolas must be pushed with strictly increasing center c.
  void push(std::int64_t c, std::int64_t offset, std::int64_t big) {
    std::int64_t n = 0, d = 1;
    // pop segments whose boundary the new parabola reaches (z[0] = -inf)
    while (k_ > 0) {
      crossing(centers_[k_], offsets_[k_], c, offset, big, n, d);
      if (static_cast<__int128>(n) * den_[k_] <= static_cast<__int128>(num_[k_]) * d)
        --k_;
      else
        break;
    }
    if (k_ < 0) {
      k_ = 0;
      centers_[0] = c;
      offsets_[0] = offset;
      return;
    }
    crossing(centers_[k_], offsets_[k_], c, offset, big, n, d);
    ++k_;
    centers_[k_] = c;
    offsets_[k_] = offset;
    num_[k_] = n;
    den_[k_] = d;
  }

  bool empty() const { return k_ < 0; }

  // Winning center for pixel x; pixels must be queried in ascending order
  // per sweep (call begin_queries() first).
  void begin_queries() { q_ = 0; }
  std::int64_t winner(std::int64_t x) {
    while (q_ < k_ && static_cast<__int128>(num_[q_ + 1]) < static_cast<__int128>(x) * den_[q_ + 1])
      ++q_;
    return centers_[q_];
  }

 private:
  static void crossing(std::int64_t a, std::int64_t va, std::int64_t b, std::int64_t vb,
                       std::int64_t big, std::int64_t& num, std::int64_t& den) {
    // big*(s-a)^2 + va = big*(s-b)^2 + vb
    num = vb - va + big * (b * b - a * a);
    den = 2 * big * (b - a);
  }

  std::vector<std::int64_t> centers_;
  std::vector<std::int64_t> offsets_{};
  std::vector<std::int64_t> num_, den_;
  int k_ = -1;
  int q_ = 0;
};

}  // namespace detail

// Exact squared Euclidean distance transform with argmin propagation:
// a column sweep collapses each column to its best (dist2, label) per row,
// then a row sweep runs the parabola lower envelope. O(width * height).
// Equidistant seeds resolve to the lowest index.
inline VoronoiDiagram distance_transform(const InpaintingMask& mask) {
  if (mask.size() == 0) throw std::invalid_argument("distance_transform: empty mask");
  const int w = mask.width();
  const int h = mask.height();
  const auto big = static_cast<std::int64_t>(mask.size());

  // Column pass: nearest seed row above and below, lexicographic combine.
  constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::max();
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> d1(h, w);
  Eigen::ArrayXXi l1(h, w);
  d1.setConstant(kNone);
  l1.setConstant(-1);
  for (int x = 0; x < w; ++x) {
    int last_row = -1, last_idx = -1;
    for (int y = 0; y < h; ++y) {
      if (mask.occupied(x, y)) {
        last_row = y;
        last_idx = mask.index_at(x, y);
      }
      if (last_row >= 0) {
        const std::int64_t d = std::int64_t(y - last_row) * (y - last_row);
        d1(y, x) = d;
        l1(y, x) = last_idx;
      }
    }
    last_row = -1;
    last_idx = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (mask.occupied(x, y)) {
        last_row = y;
        last_idx = mask.index_at(x, y);
      }
      if (last_row >= 0) {
        const std::int64_t d = std::int64_t(last_row - y) * (last_row - y);
        if (d < d1(y, x) || (d == d1(y, x) && last_idx < l1(y, x))) {
          d1(y, x) = d;
          l1(y, x) = last_idx;
        }
      }
    }
  }

  VoronoiDiagram out;
  out.width = w;
  out.height = h;
  out.label.resize(h, w);
  out.dist2.resize(h, w);
  out.area.assign(mask.size(), 0);

  // Row pass: envelope over the seeded columns of this row.
  detail::EnvelopeScan env(w);
  for (int y = 0; y < h; ++y) {
    env.reset();
    for (int x = 0; x < w; ++x) {
      if (d1(y, x) == kNone) continue;
      env.push(x, big * d1(y, x) + l1(y, x), big);
    }
    if (env.empty()) throw std::logic_error("distance_transform: row envelope empty");
    env.begin_queries();
    for (int x = 0; x < w; ++x) {
      const auto cx = static_cast<int>(env.winner(x));
      const std::int64_t d = std::int64_t(x - cx) * (x - cx) + d1(y, cx);
      out.dist2(y, x) = static_cast<double>(d);
      out.label(y, x) = l1(y, cx);
      ++out.area[static_cast<std::size_t>(l1(y, cx))];
    }
  }
  return out;
}

// Per-pixel squared reconstruction error |f - u|^2.
inline ImageD pixel_errors(const ImageD& f, const ImageD& u) {
  if (f.rows() != u.rows() || f.cols() != u.cols())
    throw std::invalid_argument("pixel_errors: dimension mismatch");
  return (f - u).square();
}

// Sum of squared reconstruction errors over each Voronoi cell.
inline std::vector<double> cell_errors(const VoronoiDiagram& vd, const ImageD& f,
                                       const ImageD& u) {
  if (f.rows() != vd.height || f.cols() != vd.width)
    throw std::invalid_argument("cell_errors: dimension mismatch");
  const ImageD eq = pixel_errors(f, u);
  std::vector<double> e(vd.area.size(), 0.0);
  for (int y = 0; y < vd.height; ++y)
    for (int x = 0; x < vd.width; ++x)
      e[static_cast<std::size_t>(vd.label(y, x))] += eq(y, x);
  return e;
}

// Debug view of the labeling (label mod 256), for visual inspection.
inline ImageD label_map_image(const VoronoiDiagram& vd) {
  ImageD img(vd.height, vd.width);
  for (int y = 0; y < vd.height; ++y)
    for (int x = 0; x < vd.width; ++x)
      img(y, x) = static_cast<double>(vd.label(y, x) % 256);
  return img;
}

}  // namespace sphin
