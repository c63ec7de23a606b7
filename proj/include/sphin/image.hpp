#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace sphin {

// Row-major grayscale raster; element (y, x) is the intensity at column x,
// row y. Intensities are stored as reals so that reconstructions may leave
// [0, 255]; clamping happens only at PGM export.
template <class Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageD = Image<double>;

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

// Mean squared error over all pixels, on the raw (unclamped) values.
template <class Scalar>
Scalar mse(const Image<Scalar>& a, const Image<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mse: image dimensions differ");
  return (a - b).square().sum() / static_cast<Scalar>(a.size());
}

// MSE after clamping both operands to [0, 255].
template <class Scalar>
Scalar mse_clamped(const Image<Scalar>& a, const Image<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mse: image dimensions differ");
  auto ca = a.max(Scalar(0)).min(Scalar(255));
  auto cb = b.max(Scalar(0)).min(Scalar(255));
  return (ca - cb).square().sum() / static_cast<Scalar>(a.size());
}

// Half-away-from-zero rounding followed by clamping to [0, 255]; the rule
// used when intensities are emitted as bytes.
template <class Scalar>
int quantize_byte(Scalar v) {
  const Scalar r = v < Scalar(0) ? -std::floor(-v + Scalar(0.5)) : std::floor(v + Scalar(0.5));
  if (r < Scalar(0)) return 0;
  if (r > Scalar(255)) return 255;
  return static_cast<int>(r);
}

}  // namespace sphin
