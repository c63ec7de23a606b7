#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sphin/kernels.hpp"
#include "sphin/mask.hpp"
#include "sphin/neighbors.hpp"
#include "sphin/voronoi.hpp"

namespace sphin {

enum class ConsistencyMode { ZeroOrder, FirstOrder, Mixed };

// A seed contributing to one pixel: kernel weight times influence area,
// offset p_j - q, and the carried gray value.
struct ResolvedNeighbor {
  double wv = 0;
  double dx = 0;
  double dy = 0;
  double gray = 0;
  int index = -1;
};

// Kernel-weight resolution at growth iteration k: h_j = k * h_init (iso)
// or tensor G_j / k (aniso).
inline void resolve_neighbors_into(const InpaintingMask& mask, std::span<const double> areas,
                                   const KernelSpecD& spec, PixelCoord q,
                                   std::span<const int> idx, int k,
                                   std::vector<ResolvedNeighbor>& out) {
  out.clear();
  out.reserve(idx.size());
  for (int j : idx) {
    const MaskPoint& p = mask.points()[static_cast<std::size_t>(j)];
    const Eigen::Vector2d diff(q.x - p.pos.x, q.y - p.pos.y);
    double w;
    if (p.tensor) {
      // effective tensor G / k, evaluated without pre-scaling so the
      // support test matches the stamping predicate bit for bit
      const Eigen::Matrix2d& g = *p.tensor;
      const double sn = (g * diff).squaredNorm();
      const double kk = double(k) * k;
      if (sn > kk) {
        w = 0.0;
      } else {
        const double det = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)) / kk;
        w = kernel_prefactor(spec) * det * kernel_profile(spec, std::sqrt(sn) / k);
      }
    } else {
      w = eval_iso<double>(spec, diff, double(k) * p.smoothing);
    }
    out.push_back({w * areas[static_cast<std::size_t>(j)], double(p.pos.x - q.x),
                   double(p.pos.y - q.y), p.gray, j});
  }
}

inline std::vector<ResolvedNeighbor> resolve_neighbors(const InpaintingMask& mask,
                                                       std::span<const double> areas,
                                                       const KernelSpecD& spec, PixelCoord q,
                                                       std::span<const int> idx, int k) {
  std::vector<ResolvedNeighbor> out;
  resolve_neighbors_into(mask, areas, spec, q, idx, k, out);
  return out;
}

// Shepard interpolation: sum f_j W_j V_j / sum W_j V_j. Empty optional
// signals "no effective neighbors" (all weights zero), deferring the pixel.
inline std::optional<double> shepard_value(std::span<const ResolvedNeighbor> nb) {
  double num = 0, den = 0;
  for (const auto& n : nb) {
    num += n.gray * n.wv;
    den += n.wv;
  }
  if (!(den > 0)) return std::nullopt;
  return num / den;
}

// Solves D b = e for the first-order modified-kernel coefficients, with
// D = sum W_j V_j v_j v_j^T, v_j = (1, dx_j, dy_j)^T. Cholesky first (D is
// PSD), pivoted LU as fallback; relative pivot below 1e-12 signals a
// singular system.
inline std::optional<Eigen::Vector3d> first_order_coeffs(std::span<const ResolvedNeighbor> nb) {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  for (const auto& n : nb) {
    const Eigen::Vector3d v(1.0, n.dx, n.dy);
    d.noalias() += n.wv * v * v.transpose();
  }
  const Eigen::Vector3d e(1.0, 0.0, 0.0);
  Eigen::LLT<Eigen::Matrix3d> llt(d);
  if (llt.info() == Eigen::Success) {
    const Eigen::Vector3d diag = llt.matrixLLT().diagonal();
    const double lo = diag.minCoeff();
    const double hi = diag.maxCoeff();
    if (hi > 0 && (lo / hi) * (lo / hi) >= 1e-12) return llt.solve(e);
  }
  const Eigen::PartialPivLU<Eigen::Matrix3d> lu(d);
  const Eigen::Vector3d u = lu.matrixLU().diagonal().cwiseAbs();
  const double lo = u.minCoeff();
  const double hi = u.maxCoeff();
  if (!(hi > 0) || lo / hi < 1e-12) return std::nullopt;
  return lu.solve(e);
}

inline double first_order_apply(std::span<const ResolvedNeighbor> nb,
                                const Eigen::Vector3d& b) {
  double sum = 0;
  for (const auto& n : nb) sum += n.gray * (b[0] + b[1] * n.dx + b[2] * n.dy) * n.wv;
  return sum;
}

inline std::optional<double> first_order_value(std::span<const ResolvedNeighbor> nb) {
  const auto b = first_order_coeffs(nb);
  if (!b) return std::nullopt;
  return first_order_apply(nb, *b);
}

// Per-pixel mixed choice: the branch with the smaller squared error against
// the ground truth wins; ties and singular first-order systems go to zero
// order.
struct MixedChoice {
  double value = 0;
  std::uint8_t order = 1;  // 1 zero, 2 first
};

inline std::optional<MixedChoice> mixed_value(std::span<const ResolvedNeighbor> nb,
                                              double f_true) {
  const auto u0 = shepard_value(nb);
  const auto u1 = first_order_value(nb);
  if (!u0 && !u1) return std::nullopt;
  if (!u1) return MixedChoice{*u0, 1};
  if (!u0) return MixedChoice{*u1, 2};
  const double e0 = (f_true - *u0) * (f_true - *u0);
  const double e1 = (f_true - *u1) * (f_true - *u1);
  if (e0 <= e1) return MixedChoice{*u0, 1};
  return MixedChoice{*u1, 2};
}

// Geometry signature used to pair replay logs with the mask they came from
// (gray values excluded: the operator depends only on geometry).
inline std::uint64_t mask_signature(const InpaintingMask& mask) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  auto mixd = [&](double v) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof bits);
    mix(bits);
  };
  mix(static_cast<std::uint64_t>(mask.width()));
  mix(static_cast<std::uint64_t>(mask.height()));
  mix(mask.size());
  for (const auto& p : mask.points()) {
    mix(static_cast<std::uint64_t>(p.pos.x));
    mix(static_cast<std::uint64_t>(p.pos.y));
    mixd(p.smoothing);
    mix(p.tensor ? 1 : 0);
    if (p.tensor) {
      mixd((*p.tensor)(0, 0));
      mixd((*p.tensor)(0, 1));
      mixd((*p.tensor)(1, 1));
    }
  }
  return h;
}

// Everything needed to rebuild the frozen reconstruction operator: which
// order each pixel used and the growth iteration it settled at (neighbor
// sets are a deterministic function of mask geometry and settle iteration).
struct ReplayLog {
  int width = 0;
  int height = 0;
  ConsistencyMode mode = ConsistencyMode::ZeroOrder;
  KernelFamily family = KernelFamily::Gaussian;
  double epsilon = 0;
  int min_neighbors = 5;
  std::uint64_t mask_hash = 0;
  Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> tag;
  Eigen::ArrayXXi settle_k;
  int iterations = 0;
};

struct InpaintOptions {
  KernelSpecD kernel = KernelSpecD::gaussian();
  ConsistencyMode mode = ConsistencyMode::ZeroOrder;
  int min_neighbors = 5;
  bool strict_first_order = false;
  const ImageD* ground_truth = nullptr;  // required for Mixed
};

struct InpaintResult {
  ImageD image;
  ReplayLog replay;
};

// Full-image driver: copies known pixels, fills the rest via the adaptive
// growth loop with the mode's per-pixel rule. First-order pixels with a
// singular system fall back to zero order at their settle iteration (unless
// strict deferral is requested); mixed propagates them to the zero branch.
inline InpaintResult inpaint(const InpaintingMask& mask, const InpaintOptions& opt,
                             std::span<const double> areas_in = {}) {
  if (mask.size() == 0) throw std::invalid_argument("inpaint: empty mask");
  if (opt.mode == ConsistencyMode::Mixed && opt.ground_truth == nullptr)
    throw std::invalid_argument("inpaint: mixed mode requires a ground-truth image");
  if (opt.mode != ConsistencyMode::ZeroOrder && opt.min_neighbors < 3)
    throw std::invalid_argument("inpaint: first-order modes require min_neighbors >= 3");

  std::vector<double> areas_storage;
  std::span<const double> areas = areas_in;
  if (areas.empty()) {
    const VoronoiDiagram vd = distance_transform(mask);
    areas_storage.assign(vd.area.begin(), vd.area.end());
    areas = areas_storage;
  }

  GrowthConfig cfg;
  cfg.min_neighbors = opt.min_neighbors;
  cfg.require_noncollinear = opt.mode != ConsistencyMode::ZeroOrder;

  auto step = [&](PixelCoord q, std::span<const int> idx, int k,
                  bool final_coverage) -> std::optional<SettleOutcome> {
    thread_local std::vector<ResolvedNeighbor> nb;
    resolve_neighbors_into(mask, areas, opt.kernel, q, idx, k, nb);
    switch (opt.mode) {
      case ConsistencyMode::ZeroOrder: {
        const auto v = shepard_value(nb);
        if (!v) return std::nullopt;
        return SettleOutcome{*v, 1};
      }
      case ConsistencyMode::FirstOrder: {
        const auto v = first_order_value(nb);
        if (v) return SettleOutcome{*v, 2};
        if (opt.strict_first_order) return std::nullopt;
        const auto z = shepard_value(nb);
        if (!z) return std::nullopt;
        return SettleOutcome{*z, 1};
      }
      case ConsistencyMode::Mixed: {
        const double f_true = (*opt.ground_truth)(q.y, q.x);
        const auto c = mixed_value(nb, f_true);
        if (!c) return std::nullopt;
        return SettleOutcome{c->value, c->order};
      }
    }
    return std::nullopt;
  };

  auto [image, rec] = grow_until_covered(mask, cfg, step);

  InpaintResult res;
  res.image = std::move(image);
  res.replay.width = mask.width();
  res.replay.height = mask.height();
  res.replay.mode = opt.mode;
  res.replay.family = opt.kernel.family;
  res.replay.epsilon = opt.kernel.epsilon;
  res.replay.min_neighbors = opt.min_neighbors;
  res.replay.mask_hash = mask_signature(mask);
  res.replay.tag = std::move(rec.tag);
  res.replay.settle_k = std::move(rec.settle_k);
  res.replay.iterations = rec.iterations;
  return res;
}

// Map of the order used per pixel (255 = first order, 0 = zero order /
// known), mirroring the consistency-map visualization.
inline ImageD order_map_image(const ReplayLog& replay) {
  ImageD img = ImageD::Zero(replay.height, replay.width);
  for (int y = 0; y < replay.height; ++y)
    for (int x = 0; x < replay.width; ++x)
      if (replay.tag(y, x) == 2) img(y, x) = 255.0;
  return img;
}

namespace detail {

template <class T>
void put_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get_raw(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof v);
}

}  // namespace detail

inline void write_replay(const ReplayLog& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write("SPHNRPL1", 8);
  detail::put_raw(out, std::int32_t(r.width));
  detail::put_raw(out, std::int32_t(r.height));
  detail::put_raw(out, std::uint8_t(r.mode));
  detail::put_raw(out, std::uint8_t(r.family));
  detail::put_raw(out, r.epsilon);
  detail::put_raw(out, std::int32_t(r.min_neighbors));
  detail::put_raw(out, r.mask_hash);
  detail::put_raw(out, std::int32_t(r.iterations));
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      detail::put_raw(out, r.tag(y, x));
      detail::put_raw(out, std::int32_t(r.settle_k(y, x)));
    }
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline ReplayLog read_replay(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "SPHNRPL1")
    throw std::runtime_error(path + ": not a replay log");
  ReplayLog r;
  std::int32_t w, h, minn, iters;
  std::uint8_t mode, family;
  detail::get_raw(in, w);
  detail::get_raw(in, h);
  detail::get_raw(in, mode);
  detail::get_raw(in, family);
  detail::get_raw(in, r.epsilon);
  detail::get_raw(in, minn);
  detail::get_raw(in, r.mask_hash);
  detail::get_raw(in, iters);
  if (!in || w <= 0 || h <= 0 || mode > 2 || family > 5)
    throw std::runtime_error(path + ": corrupt replay header");
  r.width = w;
  r.height = h;
  r.mode = static_cast<ConsistencyMode>(mode);
  r.family = static_cast<KernelFamily>(family);
  r.min_neighbors = minn;
  r.iterations = iters;
  r.tag.resize(h, w);
  r.settle_k.resize(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t t;
      std::int32_t k;
      detail::get_raw(in, t);
      detail::get_raw(in, k);
      r.tag(y, x) = t;
      r.settle_k(y, x) = k;
    }
  if (!in) throw std::runtime_error(path + ": truncated replay log");
  return r;
}

}  // namespace sphin
