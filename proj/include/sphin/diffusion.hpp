#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sphin/image.hpp"
#include "sphin/mask.hpp"

namespace sphin {

enum class DiffusionOrder { Harmonic, Biharmonic };

namespace detail {

// Negative 5-point Laplacian with reflecting boundaries on the full grid:
// (A u)_q = deg(q) u_q - sum of in-bounds neighbors. Mirrored ghost values
// equal the center, so boundary rows just drop the out-of-bounds terms.
inline void apply_grid_laplacian(const Eigen::VectorXd& u, Eigen::VectorXd& out, int w, int h) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::int64_t q = std::int64_t(y) * w + x;
      double sum = 0;
      int deg = 0;
      if (x > 0) { sum += u[q - 1]; ++deg; }
      if (x + 1 < w) { sum += u[q + 1]; ++deg; }
      if (y > 0) { sum += u[q - w]; ++deg; }
      if (y + 1 < h) { sum += u[q + w]; ++deg; }
      out[q] = deg * u[q] - sum;
    }
}

// The stencil operator restricted to the unknown pixel set (SPD: principal
// submatrix of the grid Laplacian, or of its square for the biharmonic
// case), with a Jacobi-preconditioned CG solver.
class ReducedStencil {
 public:
  ReducedStencil(const InpaintingMask& mask, bool biharmonic)
      : w_(mask.width()), h_(mask.height()), bi_(biharmonic) {
    const std::int64_t n = std::int64_t(w_) * h_;
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x)
        if (!mask.occupied(x, y)) unknown_.push_back(std::int64_t(y) * w_ + x);
    inv_diag_.resize(count());
    for (std::int64_t i = 0; i < count(); ++i) {
      const std::int64_t q = unknown_[static_cast<std::size_t>(i)];
      const int x = static_cast<int>(q % w_);
      const int y = static_cast<int>(q / w_);
      int deg = 0;
      if (x > 0) ++deg;
      if (x + 1 < w_) ++deg;
      if (y > 0) ++deg;
      if (y + 1 < h_) ++deg;
      inv_diag_[i] = 1.0 / (bi_ ? double(deg) * deg + deg : double(deg));
    }
    full_.resize(n);
    full2_.resize(n);
  }

  std::int64_t count() const { return static_cast<std::int64_t>(unknown_.size()); }
  const std::vector<std::int64_t>& unknown() const { return unknown_; }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    full_.setZero();
    scatter(x, full_);
    apply_grid_laplacian(full_, full2_, w_, h_);
    if (bi_) {
      apply_grid_laplacian(full2_, full_, w_, h_);
      gather(full_, y);
    } else {
      gather(full2_, y);
    }
  }

  // Full-grid stencil (A or A^2) of an arbitrary extension vector.
  void apply_full(const Eigen::VectorXd& ext, Eigen::VectorXd& out) const {
    apply_grid_laplacian(ext, full2_, w_, h_);
    if (bi_) {
      apply_grid_laplacian(full2_, out, w_, h_);
    } else {
      out = full2_;
    }
  }

  void scatter(const Eigen::VectorXd& x, Eigen::VectorXd& full) const {
    for (std::int64_t i = 0; i < count(); ++i) full[unknown_[static_cast<std::size_t>(i)]] = x[i];
  }
  void gather(const Eigen::VectorXd& full, Eigen::VectorXd& x) const {
    for (std::int64_t i = 0; i < count(); ++i) x[i] = full[unknown_[static_cast<std::size_t>(i)]];
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b, double tol, std::int64_t max_iter,
                        const char* what) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(count());
    const double nb = b.norm();
    if (nb == 0) return x;
    if (max_iter < 0) max_iter = 10 * count();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag_.asDiagonal() * r;
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(count());
    double rz = r.dot(z);
    std::int64_t it = 0;
    while (r.norm() > tol * nb) {
      if (it++ >= max_iter)
        throw std::runtime_error(std::string(what) + ": CG did not converge within iteration cap");
      apply(p, ap);
      const double alpha = rz / p.dot(ap);
      x += alpha * p;
      r -= alpha * ap;
      z = inv_diag_.asDiagonal() * r;
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    return x;
  }

 private:
  int w_, h_;
  bool bi_;
  std::vector<std::int64_t> unknown_;
  Eigen::VectorXd inv_diag_;
  mutable Eigen::VectorXd full_, full2_;
};

}  // namespace detail

// Harmonic or biharmonic inpainting: Dirichlet values at the mask points,
// 5-point (or squared 13-point) stencil with mirrored boundaries elsewhere,
// solved to the given relative residual.
inline ImageD solve_diffusion(const InpaintingMask& mask, DiffusionOrder order,
                              double tol = 1e-8, std::int64_t max_iter = -1) {
  if (mask.size() == 0) throw std::invalid_argument("solve_diffusion: empty mask");
  const int w = mask.width();
  const int h = mask.height();
  const std::int64_t n = std::int64_t(w) * h;

  Eigen::VectorXd g_ext = Eigen::VectorXd::Zero(n);
  for (const auto& p : mask.points()) g_ext[std::int64_t(p.pos.y) * w + p.pos.x] = p.gray;

  const detail::ReducedStencil op(mask, order == DiffusionOrder::Biharmonic);
  if (op.count() > 0) {
    Eigen::VectorXd ag(n), b(op.count());
    op.apply_full(g_ext, ag);
    op.gather(ag, b);
    b = -b;
    const Eigen::VectorXd x = op.solve(b, tol, max_iter, "solve_diffusion");
    op.scatter(x, g_ext);
  }

  ImageD out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = g_ext[std::int64_t(y) * w + x];
  return out;
}

// The diffusion solution as a linear map S from mask gray values to the full
// image, applied implicitly via solves so the CGNR tonal pass also works for
// the diffusion baselines. With L the reduced stencil, E_k/E_u the known/
// unknown embeddings and B = -R_u A E_k: S = E_k + E_u L^-1 B and
// S^T y = R_k y - R_k A E_u L^-1 R_u y.
class DiffusionSolveOperator {
 public:
  DiffusionSolveOperator(const InpaintingMask& mask, DiffusionOrder order,
                         double inner_tol = 1e-10)
      : mask_(mask),
        stencil_(mask, order == DiffusionOrder::Biharmonic),
        inner_tol_(inner_tol) {}

  std::int64_t rows() const { return mask_.pixel_count(); }
  int cols() const { return static_cast<int>(mask_.size()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    const int w = mask_.width();
    const std::int64_t n = rows();
    Eigen::VectorXd g_ext = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < mask_.size(); ++j) {
      const auto& p = mask_.points()[j].pos;
      g_ext[std::int64_t(p.y) * w + p.x] = g[static_cast<Eigen::Index>(j)];
    }
    if (stencil_.count() > 0) {
      Eigen::VectorXd ag(n), b(stencil_.count());
      stencil_.apply_full(g_ext, ag);
      stencil_.gather(ag, b);
      b = -b;
      const Eigen::VectorXd x = stencil_.solve(b, inner_tol_, -1, "diffusion operator");
      stencil_.scatter(x, g_ext);
    }
    return g_ext;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const {
    const int w = mask_.width();
    const std::int64_t n = rows();
    Eigen::VectorXd out(cols());
    for (std::size_t j = 0; j < mask_.size(); ++j) {
      const auto& p = mask_.points()[j].pos;
      out[static_cast<Eigen::Index>(j)] = y[std::int64_t(p.y) * w + p.x];
    }
    if (stencil_.count() == 0) return out;

    Eigen::VectorXd yu(stencil_.count());
    stencil_.gather(y, yu);
    const Eigen::VectorXd z = stencil_.solve(yu, inner_tol_, -1, "diffusion adjoint");
    Eigen::VectorXd z_ext = Eigen::VectorXd::Zero(n);
    stencil_.scatter(z, z_ext);
    Eigen::VectorXd az(n);
    stencil_.apply_full(z_ext, az);
    for (std::size_t j = 0; j < mask_.size(); ++j) {
      const auto& p = mask_.points()[j].pos;
      out[static_cast<Eigen::Index>(j)] -= az[std::int64_t(p.y) * w + p.x];
    }
    return out;
  }

 private:
  const InpaintingMask& mask_;
  detail::ReducedStencil stencil_;
  double inner_tol_;
};

}  // namespace sphin
