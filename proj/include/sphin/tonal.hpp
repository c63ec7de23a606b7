#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sphin/inpaint.hpp"
#include "sphin/mask.hpp"

namespace sphin {

// The frozen linear reconstruction map u = A g: one sparse row per pixel,
// columns indexed by mask points. Known-pixel rows are unit rows selecting
// the pixel's own mask entry; inpainted rows carry the modified-kernel
// weights of the order recorded at that pixel.
class ReconstructionOperator {
 public:
  ReconstructionOperator(int width, int height, int n_cols)
      : width_(width), height_(height), n_cols_(n_cols) {
    row_ptr_.assign(static_cast<std::size_t>(rows()) + 1, 0);
  }

  std::int64_t rows() const { return std::int64_t(width_) * height_; }
  int cols() const { return n_cols_; }
  int width() const { return width_; }
  int height() const { return height_; }

  // Row entries for pixel (x, y); offsets into col()/weight().
  std::span<const int> row_cols(std::int64_t r) const {
    return {col_.data() + row_ptr_[static_cast<std::size_t>(r)],
            static_cast<std::size_t>(row_nnz(r))};
  }
  std::span<const double> row_weights(std::int64_t r) const {
    return {w_.data() + row_ptr_[static_cast<std::size_t>(r)],
            static_cast<std::size_t>(row_nnz(r))};
  }
  std::int64_t row_nnz(std::int64_t r) const {
    return row_ptr_[static_cast<std::size_t>(r) + 1] - row_ptr_[static_cast<std::size_t>(r)];
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    if (g.size() != n_cols_) throw std::invalid_argument("operator apply: size mismatch");
    Eigen::VectorXd u(rows());
    for (std::int64_t r = 0; r < rows(); ++r) {
      double sum = 0;
      const auto base = row_ptr_[static_cast<std::size_t>(r)];
      const auto end = row_ptr_[static_cast<std::size_t>(r) + 1];
      for (auto i = base; i < end; ++i) sum += w_[static_cast<std::size_t>(i)] * g[col_[static_cast<std::size_t>(i)]];
      u[r] = sum;
    }
    return u;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const {
    if (y.size() != rows()) throw std::invalid_argument("operator apply_transpose: size mismatch");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_cols_);
    for (std::int64_t r = 0; r < rows(); ++r) {
      const auto base = row_ptr_[static_cast<std::size_t>(r)];
      const auto end = row_ptr_[static_cast<std::size_t>(r) + 1];
      for (auto i = base; i < end; ++i) g[col_[static_cast<std::size_t>(i)]] += w_[static_cast<std::size_t>(i)] * y[r];
    }
    return g;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), n_cols_);
    for (std::int64_t r = 0; r < rows(); ++r) {
      const auto cols = row_cols(r);
      const auto ws = row_weights(r);
      for (std::size_t i = 0; i < cols.size(); ++i) m(r, cols[i]) = ws[i];
    }
    return m;
  }

  // Rows are appended in arbitrary order, once each; finalize() freezes CSR.
  void set_row(std::int64_t r, std::vector<std::pair<int, double>> entries) {
    pending_[static_cast<std::size_t>(r)] = std::move(entries);
  }
  void begin_assembly() { pending_.assign(static_cast<std::size_t>(rows()), {}); }
  void finalize() {
    std::int64_t nnz = 0;
    for (const auto& p : pending_) nnz += static_cast<std::int64_t>(p.size());
    col_.clear();
    w_.clear();
    col_.reserve(static_cast<std::size_t>(nnz));
    w_.reserve(static_cast<std::size_t>(nnz));
    for (std::int64_t r = 0; r < rows(); ++r) {
      row_ptr_[static_cast<std::size_t>(r)] = static_cast<std::int64_t>(col_.size());
      for (const auto& [c, v] : pending_[static_cast<std::size_t>(r)]) {
        col_.push_back(c);
        w_.push_back(v);
      }
    }
    row_ptr_[static_cast<std::size_t>(rows())] = static_cast<std::int64_t>(col_.size());
    pending_.clear();
    pending_.shrink_to_fit();
  }

 private:
  int width_, height_, n_cols_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<int> col_;
  std::vector<double> w_;
  std::vector<std::vector<std::pair<int, double>>> pending_;
};

// Re-evaluates the modified-kernel weights recorded in a replay log and
// freezes them into the operator. Applying the result to the original mask
// grays reproduces the inpainting output up to floating-point
// re-association.
inline ReconstructionOperator assemble_operator(const InpaintingMask& mask,
                                                const ReplayLog& replay,
                                                const KernelSpecD& spec) {
  if (replay.width != mask.width() || replay.height != mask.height())
    throw std::invalid_argument("assemble_operator: replay/mask dimension mismatch");
  if (replay.mask_hash != mask_signature(mask))
    throw std::invalid_argument("assemble_operator: replay does not match mask geometry");

  const VoronoiDiagram vd = distance_transform(mask);
  std::vector<double> areas(vd.area.begin(), vd.area.end());

  ReconstructionOperator op(mask.width(), mask.height(), static_cast<int>(mask.size()));
  op.begin_assembly();
  for (std::size_t j = 0; j < mask.size(); ++j) {
    const auto& p = mask.points()[j].pos;
    op.set_row(std::int64_t(p.y) * mask.width() + p.x, {{static_cast<int>(j), 1.0}});
  }

  replay_neighbors(mask, replay.settle_k, [&](PixelCoord q, std::span<const int> idx, int k) {
    const auto nb = resolve_neighbors(mask, areas, spec, q, idx, k);
    const std::uint8_t tag = replay.tag(q.y, q.x);
    std::vector<std::pair<int, double>> row;
    row.reserve(nb.size());
    if (tag == 1) {
      double den = 0;
      for (const auto& n : nb) den += n.wv;
      if (!(den > 0))
        throw std::runtime_error("assemble_operator: zero-order row lost its neighbors");
      for (const auto& n : nb) row.emplace_back(n.index, n.wv / den);
    } else if (tag == 2) {
      const auto b = first_order_coeffs(nb);
      if (!b) throw std::runtime_error("assemble_operator: first-order row became singular");
      for (const auto& n : nb)
        row.emplace_back(n.index, ((*b)[0] + (*b)[1] * n.dx + (*b)[2] * n.dy) * n.wv);
    } else {
      throw std::runtime_error("assemble_operator: settled pixel without an order tag");
    }
    op.set_row(std::int64_t(q.y) * replay.width + q.x, std::move(row));
  });
  op.finalize();
  return op;
}

struct CgnrResult {
  Eigen::VectorXd g;
  int iterations = 0;
  double relative_residual = 0;  // ||A^T f - A^T A g|| / ||A^T f||
  bool converged = false;
};

// Conjugate gradient on the normal equations A^T A g = A^T f, applying A and
// A^T only as matrix-vector products; starts from g = 0 and stops on the
// relative normal residual. Non-convergence returns the best iterate with
// converged = false.
template <class Op>
CgnrResult cgnr_solve(const Op& a, const Eigen::VectorXd& f, double tol = 1e-8,
                      std::int64_t max_iter = -1) {
  if (!(tol > 0)) throw std::invalid_argument("cgnr_solve: tol must be positive");
  const auto n = f.size();
  if (max_iter < 0) max_iter = 10 * static_cast<std::int64_t>(a.cols());

  CgnrResult res;
  res.g = Eigen::VectorXd::Zero(a.cols());
  Eigen::VectorXd r = f;                      // f - A g with g = 0
  Eigen::VectorXd s = a.apply_transpose(r);   // normal residual
  const double target = tol * s.norm();
  if (s.norm() == 0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd p = s;
  double gamma = s.squaredNorm();
  while (res.iterations < max_iter) {
    if (std::sqrt(gamma) <= target) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd q = a.apply(p);
    const double qn = q.squaredNorm();
    if (!(qn > 0)) break;  // p in the null space; stationary
    const double alpha = gamma / qn;
    res.g += alpha * p;
    r -= alpha * q;
    s = a.apply_transpose(r);
    const double gamma_new = s.squaredNorm();
    p = s + (gamma_new / gamma) * p;
    gamma = gamma_new;
    ++res.iterations;
  }
  if (std::sqrt(gamma) <= target) res.converged = true;
  const double denom = a.apply_transpose(f).norm();
  res.relative_residual = denom > 0 ? std::sqrt(gamma) / denom : 0.0;
  (void)n;
  return res;
}

struct TonalResult {
  InpaintingMask mask;  // with optimized gray values
  ImageD image;         // A g
  CgnrResult solver;
};

// Least-squares re-fit of the mask gray values under the frozen operator:
// min_g ||A g - f||^2.
inline TonalResult tonal_optimize(const ImageD& f, const InpaintingMask& mask,
                                  const ReplayLog& replay, const KernelSpecD& spec,
                                  double tol = 1e-8, std::int64_t max_iter = -1) {
  const ReconstructionOperator op = assemble_operator(mask, replay, spec);
  Eigen::VectorXd fv(op.rows());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) fv[std::int64_t(y) * mask.width() + x] = f(y, x);

  TonalResult out{mask, {}, cgnr_solve(op, fv, tol, max_iter)};
  for (std::size_t j = 0; j < out.mask.size(); ++j)
    out.mask.points()[j].gray = out.solver.g[static_cast<Eigen::Index>(j)];
  const Eigen::VectorXd u = op.apply(out.solver.g);
  out.image.resize(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.image(y, x) = u[std::int64_t(y) * mask.width() + x];
  return out;
}

}  // namespace sphin
