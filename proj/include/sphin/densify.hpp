#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "sphin/diffusion.hpp"
#include "sphin/inpaint.hpp"
#include "sphin/rng.hpp"
#include "sphin/voronoi.hpp"

namespace sphin {

// One inpainting method the densifier (and CLI) can drive: an SPH
// consistency mode with its kernel, or a diffusion baseline.
struct MethodSpec {
  enum class Kind { Sph, Harmonic, Biharmonic };
  Kind kind = Kind::Sph;
  ConsistencyMode mode = ConsistencyMode::Mixed;
  KernelSpecD kernel = KernelSpecD::gaussian();
  int min_neighbors = 5;
  bool strict_first_order = false;
};

struct MethodResult {
  ImageD image;
  std::optional<ReplayLog> replay;  // SPH kinds only
};

inline MethodResult run_method(const InpaintingMask& mask, const MethodSpec& method,
                               const ImageD* ground_truth,
                               std::span<const double> areas = {}) {
  switch (method.kind) {
    case MethodSpec::Kind::Sph: {
      InpaintOptions opt;
      opt.kernel = method.kernel;
      opt.mode = method.mode;
      opt.min_neighbors = method.min_neighbors;
      opt.strict_first_order = method.strict_first_order;
      opt.ground_truth = ground_truth;
      auto res = inpaint(mask, opt, areas);
      return {std::move(res.image), std::move(res.replay)};
    }
    case MethodSpec::Kind::Harmonic:
      return {solve_diffusion(mask, DiffusionOrder::Harmonic), std::nullopt};
    case MethodSpec::Kind::Biharmonic:
      return {solve_diffusion(mask, DiffusionOrder::Biharmonic), std::nullopt};
  }
  throw std::logic_error("unknown method kind");
}

struct DensifyConfig {
  double target_density = 0.05;
  int points_per_iter = 1;
  std::uint64_t rng_seed = 0;
  MethodSpec method;
};

struct HistoryRow {
  int iteration = 0;
  std::int64_t points = 0;
  double mse = 0;
};

struct DensifyResult {
  InpaintingMask mask;
  ImageD image;
  std::vector<HistoryRow> history;
  std::optional<ReplayLog> replay;
};

// Greedy Voronoi densification: start from the minimum number of random
// seeds, then repeatedly insert mask points at the worst pixel of the worst
// cell(s) of the current reconstruction until the target density is
// reached. Ties break to the smallest cell index and the first (row-major)
// pixel; all insertions of one iteration come from the same frozen diagram.
inline DensifyResult densify(const ImageD& f, const DensifyConfig& cfg) {
  const int w = static_cast<int>(f.cols());
  const int h = static_cast<int>(f.rows());
  const std::int64_t n = std::int64_t(w) * h;
  const auto target = static_cast<std::int64_t>(cfg.target_density * double(n));
  const int seeds = cfg.method.min_neighbors;
  if (!(cfg.target_density > 0.0) || cfg.target_density > 1.0)
    throw std::invalid_argument("densify: target density must be in (0, 1]");
  if (target < seeds)
    throw std::invalid_argument("densify: target density below the initial seed count");
  if (cfg.points_per_iter < 1)
    throw std::invalid_argument("densify: points_per_iter must be >= 1");

  InpaintingMask mask(w, h);
  Rng rng(cfg.rng_seed);
  while (static_cast<std::int64_t>(mask.size()) < seeds) {
    const auto q = static_cast<std::int64_t>(bounded(rng, std::uint64_t(n)));
    const int x = static_cast<int>(q % w);
    const int y = static_cast<int>(q / w);
    if (!mask.occupied(x, y)) mask.add({{x, y}, f(y, x)});
  }

  DensifyResult out{std::move(mask), {}, {}, std::nullopt};
  VoronoiDiagram vd = distance_transform(out.mask);
  std::vector<double> areas(vd.area.begin(), vd.area.end());
  MethodResult mr = run_method(out.mask, cfg.method, &f, areas);

  int iteration = 0;
  while (static_cast<std::int64_t>(out.mask.size()) < target) {
    ++iteration;
    const auto want = std::min<std::int64_t>(cfg.points_per_iter,
                                             target - static_cast<std::int64_t>(out.mask.size()));

    const std::vector<double> cell_err = cell_errors(vd, f, mr.image);
    const ImageD eq = pixel_errors(f, mr.image);

    // Best free pixel of every cell in one pass (first row-major max wins).
    std::vector<double> best_err(cell_err.size(), -1.0);
    std::vector<std::int64_t> best_px(cell_err.size(), -1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (out.mask.occupied(x, y)) continue;
        const auto c = static_cast<std::size_t>(vd.label(y, x));
        if (eq(y, x) > best_err[c]) {
          best_err[c] = eq(y, x);
          best_px[c] = std::int64_t(y) * w + x;
        }
      }

    std::vector<int> order(cell_err.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (cell_err[static_cast<std::size_t>(a)] != cell_err[static_cast<std::size_t>(b)])
        return cell_err[static_cast<std::size_t>(a)] > cell_err[static_cast<std::size_t>(b)];
      return a < b;
    });

    std::int64_t added = 0;
    for (int c : order) {
      if (added == want) break;
      const std::int64_t px = best_px[static_cast<std::size_t>(c)];
      if (px < 0) continue;  // cell fully occupied
      const int x = static_cast<int>(px % w);
      const int y = static_cast<int>(px / w);
      out.mask.add({{x, y}, f(y, x)});
      ++added;
    }
    if (added == 0)
      throw std::logic_error("densify: no insertable pixel although below target density");

    vd = distance_transform(out.mask);
    areas.assign(vd.area.begin(), vd.area.end());
    mr = run_method(out.mask, cfg.method, &f, areas);
    out.history.push_back(
        {iteration, static_cast<std::int64_t>(out.mask.size()), mse(f, mr.image)});
  }

  out.image = std::move(mr.image);
  out.replay = std::move(mr.replay);
  return out;
}

}  // namespace sphin
