#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sphin/aniso.hpp"
#include "sphin/densify.hpp"
#include "sphin/diffusion.hpp"
#include "sphin/inpaint.hpp"
#include "sphin/mask.hpp"
#include "sphin/parallel.hpp"
#include "sphin/pgm.hpp"
#include "sphin/tonal.hpp"
#include "sphin/voronoi.hpp"

namespace fs = std::filesystem;
using namespace sphin;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct KernelFlags {
  std::string name = "gaussian";
  double epsilon = -1.0;  // < 0 keeps the family default

  KernelSpecD spec() const {
    const auto family = parse_kernel_family(name);
    if (!family) throw UsageError("unknown kernel '" + name + "'");
    KernelSpecD k = make_kernel(*family);
    if (epsilon > 0) k.epsilon = epsilon;
    return k;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", name,
                    "kernel family: gaussian|matern0|matern2|lucy|cubic|wendland4");
    cmd->add_option("--epsilon", epsilon, "shape-constant override");
  }
};

MethodSpec::Kind parse_order_kind(const std::string& order) {
  if (order == "0" || order == "zero" || order == "1" || order == "first" || order == "mixed")
    return MethodSpec::Kind::Sph;
  if (order == "harmonic") return MethodSpec::Kind::Harmonic;
  if (order == "biharmonic") return MethodSpec::Kind::Biharmonic;
  throw UsageError("unknown --order '" + order + "' (0|1|mixed|harmonic|biharmonic)");
}

ConsistencyMode parse_consistency(const std::string& order) {
  if (order == "0" || order == "zero") return ConsistencyMode::ZeroOrder;
  if (order == "1" || order == "first") return ConsistencyMode::FirstOrder;
  return ConsistencyMode::Mixed;
}

int threads_flag = 0;

void attach_threads(CLI::App* cmd) {
  cmd->add_option("--threads", threads_flag, "worker cap (default: SPH_INPAINT_THREADS or hw)");
}

void apply_threads() {
  if (threads_flag > 0) set_thread_count(threads_flag);
}

void write_history(const std::string& path, const std::vector<HistoryRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "iteration,points,mse\n";
  for (const auto& r : rows) out << r.iteration << "," << r.points << "," << fmt(r.mse) << "\n";
}

// ---- subcommands ----------------------------------------------------------

struct MaskArgs {
  std::string image, maskfile, out, type = "regular";
  int step = 4;
  double density = 0.05;
  std::uint64_t seed = 0;
};

int run_mask(const MaskArgs& a) {
  const auto start = Clock::now();
  const ImageD img = read_pgm(a.image);
  const int w = static_cast<int>(img.cols());
  const int h = static_cast<int>(img.rows());
  std::optional<InpaintingMask> m;
  if (a.type == "regular") {
    m = make_regular_mask(w, h, a.step, img);
  } else if (a.type == "random") {
    m = make_random_mask(w, h, a.density, a.seed, img);
  } else if (a.type == "image") {
    if (a.maskfile.empty()) throw UsageError("--type image requires --maskfile");
    m = mask_from_image(read_pgm(a.maskfile), img);
  } else {
    throw UsageError("unknown --type '" + a.type + "' (regular|random|image)");
  }
  write_mask(*m, a.out);
  std::cout << "points=" << m->size() << " density=" << fmt(m->density())
            << " wall_ms=" << elapsed_ms(start) << "\n";
  return 0;
}

struct InpaintArgs {
  std::string mask, out, image, truth, replay, order = "0";
  std::string order_map, label_map;
  KernelFlags kernel;
  int min_neighbors = 5;
  bool strict_first = false;
  bool clamped = false;
};

int run_inpaint(const InpaintArgs& a) {
  const auto start = Clock::now();
  const InpaintingMask mask = read_mask(a.mask);
  const auto kind = parse_order_kind(a.order);

  ImageD out;
  int iterations = 0;
  if (kind == MethodSpec::Kind::Sph) {
    InpaintOptions opt;
    opt.kernel = a.kernel.spec();
    opt.mode = parse_consistency(a.order);
    opt.min_neighbors = a.min_neighbors;
    opt.strict_first_order = a.strict_first;
    ImageD truth;
    if (opt.mode == ConsistencyMode::Mixed) {
      if (a.truth.empty()) throw UsageError("--order mixed requires --truth");
      truth = read_pgm(a.truth);
      opt.ground_truth = &truth;
    }
    const auto res = inpaint(mask, opt);
    out = res.image;
    iterations = res.replay.iterations;
    if (!a.replay.empty()) write_replay(res.replay, a.replay);
    if (!a.order_map.empty()) write_pgm(order_map_image(res.replay), a.order_map);
  } else {
    if (!a.replay.empty())
      throw UsageError("--replay is only produced by the SPH consistency orders");
    out = solve_diffusion(mask, kind == MethodSpec::Kind::Harmonic
                                    ? DiffusionOrder::Harmonic
                                    : DiffusionOrder::Biharmonic);
  }
  write_pgm(out, a.out);
  if (!a.label_map.empty()) write_pgm(label_map_image(distance_transform(mask)), a.label_map);

  std::string line;
  if (!a.image.empty()) {
    const ImageD f = read_pgm(a.image);
    const double m = a.clamped ? mse_clamped(f, out) : mse(f, out);
    line += "mse=" + fmt(m) + " ";
  }
  std::cout << line << "points=" << mask.size() << " density=" << fmt(mask.density())
            << " iterations=" << iterations << " wall_ms=" << elapsed_ms(start) << "\n";
  return 0;
}

struct DensifyArgs {
  std::string image, out_mask, out, replay, history, order = "mixed";
  KernelFlags kernel;
  double density = 0.05;
  int per_iter = 1;
  int min_neighbors = 5;
  std::uint64_t seed = 0;
  bool clamped = false;
};

int run_densify(const DensifyArgs& a) {
  const auto start = Clock::now();
  const ImageD img = read_pgm(a.image);
  DensifyConfig cfg;
  cfg.target_density = a.density;
  cfg.points_per_iter = a.per_iter;
  cfg.rng_seed = a.seed;
  cfg.method.kind = parse_order_kind(a.order);
  cfg.method.mode = parse_consistency(a.order);
  cfg.method.kernel = a.kernel.spec();
  cfg.method.min_neighbors = a.min_neighbors;
  const auto res = densify(img, cfg);

  write_mask(res.mask, a.out_mask);
  if (!a.out.empty()) write_pgm(res.image, a.out);
  if (!a.replay.empty()) {
    if (!res.replay) throw UsageError("--replay is only produced by the SPH consistency orders");
    write_replay(*res.replay, a.replay);
  }
  if (!a.history.empty()) write_history(a.history, res.history);

  const double m = a.clamped ? mse_clamped(img, res.image) : mse(img, res.image);
  std::cout << "mse=" << fmt(m) << " points=" << res.mask.size()
            << " density=" << fmt(res.mask.density())
            << " iterations=" << res.history.size() << " wall_ms=" << elapsed_ms(start) << "\n";
  return 0;
}

struct TonalArgs {
  std::string image, mask, replay, out_mask, out, order;
  KernelFlags kernel;
  double tol = 1e-8;
  bool clamped = false;
};

int run_tonal(const TonalArgs& a) {
  const auto start = Clock::now();
  const ImageD img = read_pgm(a.image);
  InpaintingMask mask = read_mask(a.mask);

  ImageD out;
  int iterations = 0;
  if (!a.order.empty() && parse_order_kind(a.order) != MethodSpec::Kind::Sph) {
    const auto order = a.order == "harmonic" ? DiffusionOrder::Harmonic
                                             : DiffusionOrder::Biharmonic;
    const DiffusionSolveOperator op(mask, order);
    Eigen::VectorXd f(op.rows());
    for (int y = 0; y < img.rows(); ++y)
      for (int x = 0; x < img.cols(); ++x) f[y * img.cols() + x] = img(y, x);
    const auto cg = cgnr_solve(op, f, a.tol);
    for (std::size_t j = 0; j < mask.size(); ++j)
      mask.points()[j].gray = cg.g[static_cast<Eigen::Index>(j)];
    out = solve_diffusion(mask, order);
    iterations = cg.iterations;
    if (!a.out_mask.empty()) write_mask(mask, a.out_mask);
  } else {
    if (a.replay.empty()) throw UsageError("tonal needs --replay (or a diffusion --order)");
    const ReplayLog replay = read_replay(a.replay);
    const KernelSpecD spec = a.kernel.spec();
    if (replay.family != spec.family || replay.epsilon != spec.epsilon)
      throw std::runtime_error("replay log was recorded with a different kernel");
    const auto res = tonal_optimize(img, mask, replay, spec, a.tol);
    out = res.image;
    iterations = res.solver.iterations;
    if (!res.solver.converged)
      std::cerr << "warning: CGNR stopped at relative residual "
                << res.solver.relative_residual << " before reaching tolerance\n";
    if (!a.out_mask.empty()) write_mask(res.mask, a.out_mask);
  }
  if (!a.out.empty()) write_pgm(out, a.out);

  const double m = a.clamped ? mse_clamped(img, out) : mse(img, out);
  std::cout << "mse=" << fmt(m) << " points=" << mask.size()
            << " density=" << fmt(mask.density()) << " iterations=" << iterations
            << " wall_ms=" << elapsed_ms(start) << "\n";
  return 0;
}

struct AnisoArgs {
  std::string mask, out_mask, weights = "gauss";
  int window = 25;
  int min_points = 15;
  double max_ratio = 8.0;
};

int run_aniso(const AnisoArgs& a) {
  const auto start = Clock::now();
  const InpaintingMask mask = read_mask(a.mask);
  AnisoOptions opt;
  opt.window = a.window;
  opt.min_points = a.min_points;
  opt.max_ratio = a.max_ratio;
  if (a.weights == "gauss") {
    opt.gaussian_weights = true;
  } else if (a.weights == "uniform") {
    opt.gaussian_weights = false;
  } else {
    throw UsageError("unknown --aniso-weights '" + a.weights + "' (gauss|uniform)");
  }
  const auto res = install_anisotropy(mask, opt);
  write_mask(res.mask, a.out_mask);
  std::cout << "points=" << res.mask.size() << " density=" << fmt(res.mask.density())
            << " aniso_points=" << res.anisotropic_points << " wall_ms=" << elapsed_ms(start)
            << "\n";
  return 0;
}

struct PipelineArgs {
  std::string image, out, out_mask, checkpoint_dir, order = "mixed";
  KernelFlags kernel;
  double density = 0.05;
  int per_iter = 1;
  int min_neighbors = 5;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  bool aniso = false;
  AnisoArgs aniso_args;
  bool clamped = false;
};

int run_pipeline(const PipelineArgs& a) {
  const auto start = Clock::now();
  const ImageD img = read_pgm(a.image);
  if (parse_order_kind(a.order) != MethodSpec::Kind::Sph)
    throw UsageError("pipeline drives the SPH orders; use densify/tonal for the baselines");

  const bool checkpoints = !a.checkpoint_dir.empty();
  fs::path dir(a.checkpoint_dir);
  if (checkpoints) fs::create_directories(dir);
  const auto stage_mask = [&](int i) { return (dir / ("stage" + std::to_string(i) + ".mask.pgm")).string(); };
  const auto stage_replay = [&](int i) { return (dir / ("stage" + std::to_string(i) + ".replay.bin")).string(); };

  // stage 1: spatial optimization (isotropic)
  std::optional<InpaintingMask> mask;
  std::optional<ReplayLog> replay;
  std::size_t iterations = 0;
  if (checkpoints && fs::exists(stage_mask(1)) && fs::exists(stage_replay(1))) {
    mask = read_mask(stage_mask(1));
    replay = read_replay(stage_replay(1));
  } else {
    DensifyConfig cfg;
    cfg.target_density = a.density;
    cfg.points_per_iter = a.per_iter;
    cfg.rng_seed = a.seed;
    cfg.method.mode = parse_consistency(a.order);
    cfg.method.kernel = a.kernel.spec();
    cfg.method.min_neighbors = a.min_neighbors;
    auto res = densify(img, cfg);
    iterations = res.history.size();
    mask = std::move(res.mask);
    replay = std::move(res.replay);
    if (checkpoints) {
      write_mask(*mask, stage_mask(1));
      write_replay(*replay, stage_replay(1));
    }
  }

  // stage 2: anisotropy plus re-inpainting
  if (a.aniso) {
    if (checkpoints && fs::exists(stage_mask(2)) && fs::exists(stage_replay(2))) {
      mask = read_mask(stage_mask(2));
      replay = read_replay(stage_replay(2));
    } else {
      AnisoOptions opt;
      opt.window = a.aniso_args.window;
      opt.min_points = a.aniso_args.min_points;
      opt.max_ratio = a.aniso_args.max_ratio;
      auto an = install_anisotropy(*mask, opt);
      InpaintOptions iopt;
      iopt.kernel = a.kernel.spec();
      iopt.mode = parse_consistency(a.order);
      iopt.min_neighbors = a.min_neighbors;
      iopt.ground_truth = iopt.mode == ConsistencyMode::Mixed ? &img : nullptr;
      auto re = inpaint(an.mask, iopt);
      mask = std::move(an.mask);
      replay = std::move(re.replay);
      if (checkpoints) {
        write_mask(*mask, stage_mask(2));
        write_replay(*replay, stage_replay(2));
      }
    }
  }

  // stage 3: tonal optimization on the frozen operator
  const auto res = tonal_optimize(img, *mask, *replay, a.kernel.spec(), a.tol);
  if (!a.out.empty()) write_pgm(res.image, a.out);
  if (!a.out_mask.empty()) write_mask(res.mask, a.out_mask);

  const double m = a.clamped ? mse_clamped(img, res.image) : mse(img, res.image);
  std::cout << "mse=" << fmt(m) << " points=" << res.mask.size()
            << " density=" << fmt(res.mask.density()) << " iterations=" << iterations
            << " wall_ms=" << elapsed_ms(start) << "\n";
  return 0;
}

struct MseArgs {
  std::string a, b;
  bool clamped = false;
};

int run_mse(const MseArgs& args) {
  const ImageD x = read_pgm(args.a);
  const ImageD y = read_pgm(args.b);
  const double m = args.clamped ? mse_clamped(x, y) : mse(x, y);
  std::cout << "mse=" << fmt(m) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPH-based sparse image inpainting toolkit"};
  app.require_subcommand(1);

  MaskArgs mask_args;
  auto* cmd_mask = app.add_subcommand("mask", "generate an inpainting mask");
  cmd_mask->add_option("--image", mask_args.image, "source image (PGM)")->required();
  cmd_mask->add_option("--out-mask", mask_args.out, "output mask path")->required();
  cmd_mask->add_option("--type", mask_args.type, "regular|random|image");
  cmd_mask->add_option("--step", mask_args.step, "grid step for --type regular");
  cmd_mask->add_option("--density", mask_args.density, "density for --type random");
  cmd_mask->add_option("--seed", mask_args.seed, "PRNG seed for --type random");
  cmd_mask->add_option("--maskfile", mask_args.maskfile, "binary mask image for --type image");
  attach_threads(cmd_mask);

  InpaintArgs inpaint_args;
  auto* cmd_inpaint = app.add_subcommand("inpaint", "reconstruct an image from a mask");
  cmd_inpaint->add_option("--mask", inpaint_args.mask, "mask (PGM + sidecar)")->required();
  cmd_inpaint->add_option("--out", inpaint_args.out, "output image")->required();
  cmd_inpaint->add_option("--order", inpaint_args.order, "0|1|mixed|harmonic|biharmonic");
  cmd_inpaint->add_option("--image", inpaint_args.image, "reference image for the mse report");
  cmd_inpaint->add_option("--truth", inpaint_args.truth, "ground truth (required for mixed)");
  cmd_inpaint->add_option("--replay", inpaint_args.replay, "write the replay log here");
  cmd_inpaint->add_option("--min-neighbors", inpaint_args.min_neighbors, "minimum neighbor count");
  cmd_inpaint->add_flag("--strict-first-order", inpaint_args.strict_first,
                        "defer singular first-order pixels instead of zero-order fallback");
  cmd_inpaint->add_option("--order-map", inpaint_args.order_map, "write the consistency map here");
  cmd_inpaint->add_option("--label-map", inpaint_args.label_map, "write the Voronoi label map here");
  cmd_inpaint->add_flag("--mse-clamped", inpaint_args.clamped, "clamp to [0,255] before the mse");
  inpaint_args.kernel.attach(cmd_inpaint);
  attach_threads(cmd_inpaint);

  DensifyArgs densify_args;
  auto* cmd_densify = app.add_subcommand("densify", "greedy Voronoi mask densification");
  cmd_densify->add_option("--image", densify_args.image, "ground-truth image")->required();
  cmd_densify->add_option("--out-mask", densify_args.out_mask, "output mask path")->required();
  cmd_densify->add_option("--density", densify_args.density, "target mask density");
  cmd_densify->add_option("--order", densify_args.order, "0|1|mixed|harmonic|biharmonic");
  cmd_densify->add_option("--per-iter", densify_args.per_iter, "points inserted per iteration");
  cmd_densify->add_option("--seed", densify_args.seed, "PRNG seed for the initial points");
  cmd_densify->add_option("--min-neighbors", densify_args.min_neighbors, "minimum neighbor count");
  cmd_densify->add_option("--out", densify_args.out, "write the final reconstruction here");
  cmd_densify->add_option("--replay", densify_args.replay, "write the final replay log here");
  cmd_densify->add_option("--history", densify_args.history, "write the iteration,points,mse CSV here");
  cmd_densify->add_flag("--mse-clamped", densify_args.clamped, "clamp to [0,255] before the mse");
  densify_args.kernel.attach(cmd_densify);
  attach_threads(cmd_densify);

  TonalArgs tonal_args;
  auto* cmd_tonal = app.add_subcommand("tonal", "least-squares gray-value optimization");
  cmd_tonal->add_option("--image", tonal_args.image, "ground-truth image")->required();
  cmd_tonal->add_option("--mask", tonal_args.mask, "mask (PGM + sidecar)")->required();
  cmd_tonal->add_option("--replay", tonal_args.replay, "replay log of the frozen inpainting");
  cmd_tonal->add_option("--order", tonal_args.order,
                        "harmonic|biharmonic for the implicit diffusion operator");
  cmd_tonal->add_option("--tol", tonal_args.tol, "CGNR relative-residual tolerance");
  cmd_tonal->add_option("--out-mask", tonal_args.out_mask, "write the optimized mask here");
  cmd_tonal->add_option("--out", tonal_args.out, "write the reconstruction here");
  cmd_tonal->add_flag("--mse-clamped", tonal_args.clamped, "clamp to [0,255] before the mse");
  tonal_args.kernel.attach(cmd_tonal);
  attach_threads(cmd_tonal);

  AnisoArgs aniso_args;
  auto* cmd_aniso = app.add_subcommand("aniso", "estimate anisotropy tensors for a mask");
  cmd_aniso->add_option("--mask", aniso_args.mask, "mask (PGM + sidecar)")->required();
  cmd_aniso->add_option("--out-mask", aniso_args.out_mask, "output mask path")->required();
  cmd_aniso->add_option("--window", aniso_args.window, "covariance window (odd)");
  cmd_aniso->add_option("--min-points", aniso_args.min_points, "points required in the window");
  cmd_aniso->add_option("--max-ratio", aniso_args.max_ratio, "axis-ratio clamp");
  cmd_aniso->add_option("--aniso-weights", aniso_args.weights, "gauss|uniform");
  attach_threads(cmd_aniso);

  PipelineArgs pipe_args;
  auto* cmd_pipe = app.add_subcommand("pipeline",
                                      "densify, optionally anisotropize, then tonally optimize");
  cmd_pipe->add_option("--image", pipe_args.image, "ground-truth image")->required();
  cmd_pipe->add_option("--out", pipe_args.out, "final reconstruction");
  cmd_pipe->add_option("--out-mask", pipe_args.out_mask, "final optimized mask");
  cmd_pipe->add_option("--density", pipe_args.density, "target mask density");
  cmd_pipe->add_option("--order", pipe_args.order, "0|1|mixed");
  cmd_pipe->add_option("--per-iter", pipe_args.per_iter, "points inserted per iteration");
  cmd_pipe->add_option("--seed", pipe_args.seed, "PRNG seed");
  cmd_pipe->add_option("--min-neighbors", pipe_args.min_neighbors, "minimum neighbor count");
  cmd_pipe->add_option("--tol", pipe_args.tol, "CGNR tolerance");
  cmd_pipe->add_flag("--aniso", pipe_args.aniso, "insert the anisotropy stage");
  cmd_pipe->add_option("--window", pipe_args.aniso_args.window, "anisotropy window (odd)");
  cmd_pipe->add_option("--min-points", pipe_args.aniso_args.min_points,
                       "points required in the window");
  cmd_pipe->add_option("--max-ratio", pipe_args.aniso_args.max_ratio, "axis-ratio clamp");
  cmd_pipe->add_option("--checkpoint-dir", pipe_args.checkpoint_dir,
                       "stage outputs are written here and reused on rerun");
  cmd_pipe->add_flag("--mse-clamped", pipe_args.clamped, "clamp to [0,255] before the mse");
  pipe_args.kernel.attach(cmd_pipe);
  attach_threads(cmd_pipe);

  MseArgs mse_args;
  auto* cmd_mse = app.add_subcommand("mse", "mean squared error between two images");
  cmd_mse->add_option("--a", mse_args.a, "first image")->required();
  cmd_mse->add_option("--b", mse_args.b, "second image")->required();
  cmd_mse->add_flag("--mse-clamped", mse_args.clamped, "clamp to [0,255] first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_threads();
    if (cmd_mask->parsed()) return run_mask(mask_args);
    if (cmd_inpaint->parsed()) return run_inpaint(inpaint_args);
    if (cmd_densify->parsed()) return run_densify(densify_args);
    if (cmd_tonal->parsed()) return run_tonal(tonal_args);
    if (cmd_aniso->parsed()) return run_aniso(aniso_args);
    if (cmd_pipe->parsed()) return run_pipeline(pipe_args);
    if (cmd_mse->parsed()) return run_mse(mse_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
