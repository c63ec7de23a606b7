#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "sphin/mask.hpp"

namespace sphin {

struct AnisoOptions {
  int window = 25;        // odd box side, pixels
  int min_points = 15;    // below this the kernel stays isotropic
  double max_ratio = 8.0; // axis-ratio clamp of the support ellipse
  bool gaussian_weights = true;  // sigma = window / 4; uniform otherwise
};

// Anisotropy tensor for mask point j from the weighted covariance of the
// mask points inside its window. Axis lengths are the square roots of the
// covariance eigenvalues, rescaled so their geometric mean equals the
// point's smoothing length (area-preserving), with the axis ratio clamped.
// Absent when the window holds too few points or the covariance is
// degenerate.
inline std::optional<Eigen::Matrix2d> estimate_tensor(const InpaintingMask& mask, int j,
                                                      const AnisoOptions& opt = {}) {
  if (opt.window % 2 == 0) throw std::invalid_argument("estimate_tensor: window must be odd");
  const MaskPoint& pj = mask.points()[static_cast<std::size_t>(j)];
  const int half = (opt.window - 1) / 2;
  const double sigma = double(opt.window) / 4.0;

  const int x0 = std::max(0, pj.pos.x - half);
  const int x1 = std::min(mask.width() - 1, pj.pos.x + half);
  const int y0 = std::max(0, pj.pos.y - half);
  const int y1 = std::min(mask.height() - 1, pj.pos.y + half);

  double wsum = 0, mx = 0, my = 0;
  int count = 0;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!mask.occupied(x, y)) continue;
      ++count;
      const double d2 = double(x - pj.pos.x) * (x - pj.pos.x) +
                        double(y - pj.pos.y) * (y - pj.pos.y);
      const double w = opt.gaussian_weights ? std::exp(-d2 / (2 * sigma * sigma)) : 1.0;
      wsum += w;
      mx += w * x;
      my += w * y;
    }
  if (count < opt.min_points) return std::nullopt;
  mx /= wsum;
  my /= wsum;

  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!mask.occupied(x, y)) continue;
      const double d2 = double(x - pj.pos.x) * (x - pj.pos.x) +
                        double(y - pj.pos.y) * (y - pj.pos.y);
      const double w = opt.gaussian_weights ? std::exp(-d2 / (2 * sigma * sigma)) : 1.0;
      const Eigen::Vector2d d(x - mx, y - my);
      c.noalias() += w * d * d.transpose();
    }
  c /= wsum;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
  const double lam_min = es.eigenvalues()[0];
  const double lam_max = es.eigenvalues()[1];
  if (!(lam_max > 0) || lam_min <= 1e-12 * lam_max) return std::nullopt;

  const double ratio = std::min(std::sqrt(lam_max / lam_min), opt.max_ratio);
  const double h = pj.smoothing;
  const double len_major = h * std::sqrt(ratio);
  const double len_minor = h / std::sqrt(ratio);

  const Eigen::Vector2d v_minor = es.eigenvectors().col(0);  // small variance axis
  const Eigen::Vector2d v_major = es.eigenvectors().col(1);
  Eigen::Matrix2d g = (1.0 / len_major) * v_major * v_major.transpose() +
                      (1.0 / len_minor) * v_minor * v_minor.transpose();
  return g;
}

struct AnisoResult {
  InpaintingMask mask;
  int anisotropic_points = 0;
};

// Tensor estimation for every mask point; points below the window threshold
// stay isotropic.
inline AnisoResult install_anisotropy(const InpaintingMask& mask, const AnisoOptions& opt = {}) {
  AnisoResult res{mask, 0};
  for (std::size_t j = 0; j < mask.size(); ++j) {
    auto g = estimate_tensor(mask, static_cast<int>(j), opt);
    if (g) {
      res.mask.points()[j].tensor = *g;
      ++res.anisotropic_points;
    } else {
      res.mask.points()[j].tensor.reset();
    }
  }
  return res;
}

}  // namespace sphin
