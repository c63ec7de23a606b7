#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace sphin {

enum class KernelFamily { Gaussian, MaternC0, MaternC2, Lucy, CubicSpline, WendlandC4 };

// A smoothing kernel family plus its shape constant. All families evaluate
// to zero outside the unit support ||eta|| > 1; the Gaussian and Matern
// kernels are hard-truncated there without renormalization.
template <class Scalar>
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  Scalar epsilon = Scalar(5.09);

  static KernelSpec gaussian() { return {KernelFamily::Gaussian, Scalar(5.09)}; }
  static KernelSpec matern_c0() { return {KernelFamily::MaternC0, Scalar(6.52)}; }
  static KernelSpec matern_c2() { return {KernelFamily::MaternC2, Scalar(8.04)}; }
  static KernelSpec lucy() { return {KernelFamily::Lucy, Scalar(0)}; }
  static KernelSpec cubic_spline() { return {KernelFamily::CubicSpline, Scalar(0)}; }
  static KernelSpec wendland_c4() { return {KernelFamily::WendlandC4, Scalar(0)}; }
};

using KernelSpecD = KernelSpec<double>;

// Normalization so that W = (prefactor / h^2) * profile(||eta||) integrates
// to one over the plane (up to the truncated tail for Gaussian and Matern).
template <class Scalar>
Scalar kernel_prefactor(const KernelSpec<Scalar>& spec) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar e = spec.epsilon;
  switch (spec.family) {
    case KernelFamily::Gaussian:   return e / pi;
    case KernelFamily::MaternC0:   return e * e / (2 * pi);
    case KernelFamily::MaternC2:   return e * e / (6 * pi);
    case KernelFamily::Lucy:       return Scalar(5) / pi;
    case KernelFamily::CubicSpline: return Scalar(120) / (14 * pi);
    case KernelFamily::WendlandC4: return Scalar(3) / pi;
  }
  throw std::logic_error("unknown kernel family");
}

// Radial profile at r = ||eta||, valid for r <= 1.
template <class Scalar>
Scalar kernel_profile(const KernelSpec<Scalar>& spec, Scalar r) {
  const Scalar e = spec.epsilon;
  switch (spec.family) {
    case KernelFamily::Gaussian:
      return std::exp(-e * r * r);
    case KernelFamily::MaternC0:
      return std::exp(-e * r);
    case KernelFamily::MaternC2:
      return (1 + e * r) * std::exp(-e * r);
    case KernelFamily::Lucy: {
      const Scalar t = 1 - r;
      return (1 + 3 * r) * t * t * t;
    }
    case KernelFamily::CubicSpline: {
      if (r <= Scalar(0.5)) return Scalar(2) / 3 - 4 * r * r + 4 * r * r * r;
      const Scalar t = 2 - 2 * r;
      return t * t * t / 6;
    }
    case KernelFamily::WendlandC4: {
      const Scalar t = 1 - r;
      const Scalar t2 = t * t;
      return (35 * r * r + 18 * r + 3) * t2 * t2 * t2;
    }
  }
  throw std::logic_error("unknown kernel family");
}

// W(q - p, h) with eta = (q - p) / h; zero outside ||eta|| <= 1.
template <class Scalar>
Scalar eval_iso(const KernelSpec<Scalar>& spec, const Eigen::Matrix<Scalar, 2, 1>& diff,
                Scalar h) {
  if (!(h > Scalar(0))) throw std::invalid_argument("eval_iso: h must be positive");
  const Scalar n2 = diff.squaredNorm() / (h * h);
  if (n2 > Scalar(1)) return Scalar(0);
  return kernel_prefactor(spec) / (h * h) * kernel_profile(spec, std::sqrt(n2));
}

// Anisotropic form: eta = G (q - p), prefactor * det(G) replaces
// prefactor / h^2. Support is the ellipse ||G (q - p)|| <= 1.
template <class Scalar>
Scalar eval_aniso(const KernelSpec<Scalar>& spec, const Eigen::Matrix<Scalar, 2, 1>& diff,
                  const Eigen::Matrix<Scalar, 2, 2>& g) {
  const Scalar det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  if (!(det > Scalar(0)) || !(g(0, 0) > Scalar(0)))
    throw std::invalid_argument("eval_aniso: tensor must be SPD");
  const Eigen::Matrix<Scalar, 2, 1> eta = g * diff;
  const Scalar n2 = eta.squaredNorm();
  if (n2 > Scalar(1)) return Scalar(0);
  return kernel_prefactor(spec) * det * kernel_profile(spec, std::sqrt(n2));
}

// Midpoint-rule integral of the kernel over its support square; resolution
// is cells per axis (>= 400 for the documented accuracy).
template <class Scalar>
Scalar unity_check(const KernelSpec<Scalar>& spec, Scalar h, int resolution = 512) {
  const Scalar cell = 2 * h / Scalar(resolution);
  Scalar sum = 0;
  for (int i = 0; i < resolution; ++i) {
    const Scalar x = -h + (Scalar(i) + Scalar(0.5)) * cell;
    for (int j = 0; j < resolution; ++j) {
      const Scalar y = -h + (Scalar(j) + Scalar(0.5)) * cell;
      sum += eval_iso(spec, Eigen::Matrix<Scalar, 2, 1>(x, y), h);
    }
  }
  return sum * cell * cell;
}

inline std::optional<KernelFamily> parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "matern0") return KernelFamily::MaternC0;
  if (name == "matern2") return KernelFamily::MaternC2;
  if (name == "lucy") return KernelFamily::Lucy;
  if (name == "cubic") return KernelFamily::CubicSpline;
  if (name == "wendland4") return KernelFamily::WendlandC4;
  return std::nullopt;
}

inline std::string kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::MaternC0: return "matern0";
    case KernelFamily::MaternC2: return "matern2";
    case KernelFamily::Lucy: return "lucy";
    case KernelFamily::CubicSpline: return "cubic";
    case KernelFamily::WendlandC4: return "wendland4";
  }
  return "?";
}

inline KernelSpecD make_kernel(KernelFamily f) {
  switch (f) {
    case KernelFamily::Gaussian: return KernelSpecD::gaussian();
    case KernelFamily::MaternC0: return KernelSpecD::matern_c0();
    case KernelFamily::MaternC2: return KernelSpecD::matern_c2();
    case KernelFamily::Lucy: return KernelSpecD::lucy();
    case KernelFamily::CubicSpline: return KernelSpecD::cubic_spline();
    case KernelFamily::WendlandC4: return KernelSpecD::wendland_c4();
  }
  throw std::logic_error("unknown kernel family");
}

}  // namespace sphin
