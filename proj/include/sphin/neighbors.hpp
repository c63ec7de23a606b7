#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sphin/image.hpp"
#include "sphin/mask.hpp"
#include "sphin/parallel.hpp"

namespace sphin {

// Scatter-approach candidate lists: pixel q holds seed j iff q lies inside
// the support of the kernel centered at p_j at the current growth scale.
struct NeighborField {
  int width = 0;
  int height = 0;
  int iteration = 1;
  std::vector<std::vector<int>> lists;  // per pixel, ascending seed index
};

namespace detail {

struct SeedSupport {
  double x = 0, y = 0;
  double h = 1.0;                   // isotropic initial smoothing length
  bool aniso = false;
  Eigen::Matrix2d g;                // anisotropy tensor at scale k = 1
  double bx = 0, by = 0;            // support bounding half-extents at k = 1
};

inline std::vector<SeedSupport> seed_supports(const InpaintingMask& mask) {
  std::vector<SeedSupport> s;
  s.reserve(mask.size());
  for (const auto& p : mask.points()) {
    SeedSupport ss;
    ss.x = p.pos.x;
    ss.y = p.pos.y;
    ss.h = p.smoothing;
    if (p.tensor) {
      ss.aniso = true;
      ss.g = *p.tensor;
      const Eigen::Matrix2d ginv = ss.g.inverse();
      ss.bx = std::hypot(ginv(0, 0), ginv(0, 1));
      ss.by = std::hypot(ginv(1, 0), ginv(1, 1));
    } else {
      ss.bx = ss.by = ss.h;
    }
    s.push_back(ss);
  }
  return s;
}

// Largest integer t >= 0 with t*t <= v (v real, possibly negative -> -1).
inline int floor_sqrt(double v) {
  if (v < 0) return -1;
  int t = static_cast<int>(std::sqrt(v));
  while (double(t + 1) * (t + 1) <= v) ++t;
  while (t > 0 && double(t) * t > v) --t;
  return t;
}

// Visits pixels newly covered by seed j when the scale grows from k-1 to k,
// i.e. with k-1 < ||q - p_j|| / h <= k (iso) or k-1 < ||G (q - p_j)|| <= k.
template <class Fn>
void stamp_annulus(const SeedSupport& s, int k, int width, int height, const Fn& fn) {
  const int px = static_cast<int>(s.x);
  const int py = static_cast<int>(s.y);
  if (!s.aniso) {
    const double r2 = (double(k) * s.h) * (double(k) * s.h);
    const double p2 = (double(k - 1) * s.h) * (double(k - 1) * s.h);
    const int ry = floor_sqrt(r2);
    for (int dy = -ry; dy <= ry; ++dy) {
      const int y = py + dy;
      if (y < 0 || y >= height) continue;
      const double rem = r2 - double(dy) * dy;
      const int hi = floor_sqrt(rem);
      // -1 when the row misses the inner disc; k = 1 keeps distance 0
      const int lo = k == 1 ? -1 : floor_sqrt(p2 - double(dy) * dy);
      for (int a = lo + 1; a <= hi; ++a) {
        if (a == 0) {
          if (px >= 0 && px < width) fn(px, y);
          continue;
        }
        if (px - a >= 0 && px - a < width) fn(px - a, y);
        if (px + a >= 0 && px + a < width) fn(px + a, y);
      }
    }
  } else {
    const double bk_x = s.bx * k;
    const double bk_y = s.by * k;
    const int x0 = std::max(0, px - static_cast<int>(std::floor(bk_x)));
    const int x1 = std::min(width - 1, px + static_cast<int>(std::floor(bk_x)));
    const int y0 = std::max(0, py - static_cast<int>(std::floor(bk_y)));
    const int y1 = std::min(height - 1, py + static_cast<int>(std::floor(bk_y)));
    // squared-norm comparisons keep the support test bit-consistent with
    // the kernel evaluation (no pre-scaling of the tensor by 1/k)
    const double r2 = double(k) * k;
    const double p2 = double(k - 1) * (k - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d d(x - s.x, y - s.y);
        const double sn = (s.g * d).squaredNorm();
        if (sn <= r2 && (k == 1 || sn > p2)) fn(x, y);
      }
  }
}

// Smallest k at which every seed support covers the whole image; past this
// point neighbor sets can no longer change.
inline int coverage_limit(const std::vector<SeedSupport>& seeds, int width, int height) {
  const double diag = std::hypot(double(width - 1), double(height - 1));
  double worst = 1.0;
  for (const auto& s : seeds) {
    double lam;  // largest stretch of the support-space map
    if (s.aniso) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s.g);
      lam = es.eigenvalues().maxCoeff();
    } else {
      lam = 1.0 / s.h;
    }
    worst = std::max(worst, lam);
  }
  return static_cast<int>(std::ceil(diag * worst)) + 1;
}

}  // namespace detail

// Full support stamp at growth iteration k (used directly by tests; the
// growth loop stamps incrementally by annulus).
inline NeighborField stamp_neighbors(const InpaintingMask& mask, int k) {
  if (k < 1) throw std::invalid_argument("stamp_neighbors: k must be >= 1");
  NeighborField nf;
  nf.width = mask.width();
  nf.height = mask.height();
  nf.iteration = k;
  nf.lists.assign(static_cast<std::size_t>(mask.pixel_count()), {});
  const auto seeds = detail::seed_supports(mask);
  for (std::size_t j = 0; j < seeds.size(); ++j)
    for (int kk = 1; kk <= k; ++kk)
      detail::stamp_annulus(seeds[j], kk, nf.width, nf.height, [&](int x, int y) {
        nf.lists[static_cast<std::size_t>(y) * nf.width + x].push_back(static_cast<int>(j));
      });
  for (auto& l : nf.lists) std::sort(l.begin(), l.end());
  return nf;
}

// All neighbor positions affinely dependent: smallest eigenvalue of the
// position scatter matrix <= 1e-9 times the largest.
inline bool neighbors_collinear(const InpaintingMask& mask, std::span<const int> idx) {
  if (idx.size() < 3) return true;
  double mx = 0, my = 0;
  for (int j : idx) {
    mx += mask.points()[static_cast<std::size_t>(j)].pos.x;
    my += mask.points()[static_cast<std::size_t>(j)].pos.y;
  }
  mx /= double(idx.size());
  my /= double(idx.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (int j : idx) {
    const double dx = mask.points()[static_cast<std::size_t>(j)].pos.x - mx;
    const double dy = mask.points()[static_cast<std::size_t>(j)].pos.y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double lam_max = tr / 2 + disc;
  const double lam_min = tr / 2 - disc;
  return lam_min <= 1e-9 * lam_max;
}

// Per-pixel outcome of one settle attempt.
struct SettleOutcome {
  double value = 0.0;
  std::uint8_t order = 0;  // 1 zero-order, 2 first-order (replay tags)
};

struct GrowthConfig {
  int min_neighbors = 5;
  bool require_noncollinear = false;  // first-order and mixed modes
};

struct GrowthRecord {
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tag;
  Eigen::ArrayXXi settle_k;
  int iterations = 0;  // final growth iteration reached
};

// Adaptive smoothing-length loop: h_j = k * h_{j,init}, k = 1, 2, ...
// At each k, unsettled pixels whose candidate count meets the minimum (and,
// when required, whose candidates are not collinear) are handed to `step`;
// a nullopt return defers the pixel to the next iteration. Once every seed
// support covers the image (`final` flag), the collinearity gate is lifted
// so that pathological all-collinear masks still terminate via the step's
// own fallback. Known pixels are copied from the mask up front.
//
// step signature: optional<SettleOutcome>(PixelCoord q, span<const int>
// neighbors, int k, bool final_coverage)
template <class Step>
std::pair<ImageD, GrowthRecord> grow_until_covered(const InpaintingMask& mask,
                                                   const GrowthConfig& cfg, const Step& step) {
  if (mask.size() == 0) throw std::invalid_argument("grow_until_covered: empty mask");
  if (cfg.min_neighbors < 1)
    throw std::invalid_argument("grow_until_covered: min_neighbors must be >= 1");
  const int w = mask.width();
  const int h = mask.height();

  ImageD out = ImageD::Zero(h, w);
  GrowthRecord rec;
  rec.tag.setZero(h, w);
  rec.settle_k.setZero(h, w);

  std::vector<std::int64_t> unsettled;
  unsettled.reserve(static_cast<std::size_t>(mask.pixel_count()));
  std::vector<std::uint8_t> settled(static_cast<std::size_t>(mask.pixel_count()), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!mask.occupied(x, y)) unsettled.push_back(std::int64_t(y) * w + x);
  for (const auto& p : mask.points()) out(p.pos.y, p.pos.x) = p.gray;

  const auto seeds = detail::seed_supports(mask);
  const int limit = detail::coverage_limit(seeds, w, h);
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(mask.pixel_count()));
  std::vector<std::int64_t> batch;
  std::vector<std::optional<SettleOutcome>> results;

  int k = 0;
  while (!unsettled.empty()) {
    ++k;
    if (k > limit + 1)
      throw std::logic_error("grow_until_covered: pixels left past full coverage");
    for (std::size_t j = 0; j < seeds.size(); ++j)
      detail::stamp_annulus(seeds[j], k, w, h, [&](int x, int y) {
        auto& l = lists[static_cast<std::size_t>(y) * w + x];
        l.push_back(static_cast<int>(j));
      });

    const bool final_coverage = k >= limit;
    batch.clear();
    for (std::int64_t q : unsettled)
      if (static_cast<int>(lists[static_cast<std::size_t>(q)].size()) >= cfg.min_neighbors)
        batch.push_back(q);
    if (batch.empty()) continue;

    results.assign(batch.size(), std::nullopt);
    const auto settle_one = [&](std::int64_t i) {
      const std::int64_t q = batch[static_cast<std::size_t>(i)];
      auto& l = lists[static_cast<std::size_t>(q)];
      std::sort(l.begin(), l.end());
      const PixelCoord pc{static_cast<int>(q % w), static_cast<int>(q / w)};
      if (cfg.require_noncollinear && !final_coverage && neighbors_collinear(mask, l)) return;
      results[static_cast<std::size_t>(i)] = step(pc, std::span<const int>(l), k, final_coverage);
    };
    if (static_cast<std::int64_t>(batch.size()) >= 2048 && thread_count() > 1) {
      parallel_for(static_cast<std::int64_t>(batch.size()), settle_one);
    } else {
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(batch.size()); ++i) settle_one(i);
    }

    bool any = false;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!results[i]) continue;
      const std::int64_t q = batch[i];
      const int x = static_cast<int>(q % w);
      const int y = static_cast<int>(q / w);
      out(y, x) = results[i]->value;
      rec.tag(y, x) = results[i]->order;
      rec.settle_k(y, x) = k;
      settled[static_cast<std::size_t>(q)] = 1;
      any = true;
    }
    if (any)
      std::erase_if(unsettled,
                    [&](std::int64_t q) { return settled[static_cast<std::size_t>(q)] != 0; });
  }
  rec.iterations = k;
  return {std::move(out), std::move(rec)};
}

// Re-runs the stamping schedule of a finished growth pass and hands each
// pixel its neighbor list at the recorded settle iteration. Reproduces the
// exact (sorted) lists the pass used.
template <class Fn>
void replay_neighbors(const InpaintingMask& mask, const Eigen::ArrayXXi& settle_k,
                      const Fn& fn) {
  const int w = mask.width();
  const int h = mask.height();
  const int max_k = settle_k.maxCoeff();
  if (max_k == 0) return;

  std::vector<std::vector<std::int64_t>> by_k(static_cast<std::size_t>(max_k) + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (settle_k(y, x) > 0)
        by_k[static_cast<std::size_t>(settle_k(y, x))].push_back(std::int64_t(y) * w + x);

  const auto seeds = detail::seed_supports(mask);
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(mask.pixel_count()));
  for (int k = 1; k <= max_k; ++k) {
    for (std::size_t j = 0; j < seeds.size(); ++j)
      detail::stamp_annulus(seeds[j], k, w, h, [&](int x, int y) {
        lists[static_cast<std::size_t>(y) * w + x].push_back(static_cast<int>(j));
      });
    for (std::int64_t q : by_k[static_cast<std::size_t>(k)]) {
      auto& l = lists[static_cast<std::size_t>(q)];
      std::sort(l.begin(), l.end());
      fn(PixelCoord{static_cast<int>(q % w), static_cast<int>(q / w)},
         std::span<const int>(l), k);
    }
  }
}

}  // namespace sphin
