#pragma once

#include <utility>

#include "helmscat/common.hpp"

namespace helmscat {

/// Wave number k with Im k >= 0.
class WaveNumber {
 public:
  WaveNumber() = default;
  explicit WaveNumber(Complex k);
  WaveNumber(double re, double im) : WaveNumber(Complex(re, im)) {}

  Complex value() const { return k_; }
  double re() const { return k_.real(); }
  double im() const { return k_.imag(); }
  bool is_zero() const { return k_ == Complex(0.0, 0.0); }

  /// Combined-field coupling 1 - i Re k.
  Complex coupling() const { return {1.0, -k_.real()}; }

 private:
  Complex k_{0.0, 0.0};
};

/// S(k, xi) = -exp(ik|xi|) / (4 pi |xi|).
Complex fund_sol(const WaveNumber& k, const Vec3& xi);

/// Gradient of S(k, .) at xi: exp(ikr)(1 - ikr) / (4 pi r^2) * xi / r.
CVec3 grad_fund_sol(const WaveNumber& k, const Vec3& xi);

/// Hessian of S(k, .) at xi.
Eigen::Matrix3cd hessian_fund_sol(const WaveNumber& k, const Vec3& xi);

/// Radial factor F(r) with grad S = F(r) xi, i.e. exp(ikr)(1 - ikr) / (4 pi r^3).
Complex gradient_factor(const WaveNumber& k, double r);

/// Singular/smooth split of a kernel value: singular is the k = 0 kernel,
/// smooth = full - singular.
struct KernelSplit {
  Complex singular;
  Complex smooth;
};

struct LaplaceSplit {
  KernelSplit single;  // S(k, xi)
  KernelSplit dlayer;  // -nu . grad S(k, xi), the double-layer kernel for source normal nu
};

/// Splits S and the double-layer kernel (source normal `nu`) into their
/// Laplace parts and bounded remainders. The remainders are evaluated without
/// cancellation for small |k| r.
LaplaceSplit split_laplace(const WaveNumber& k, const Vec3& xi, const Vec3& nu);

/// (S(k, xi) - S(0, xi)) computed stably; limit -ik/(4 pi) as |xi| -> 0.
Complex single_layer_remainder(const WaveNumber& k, double r);

/// F(r) - F_0(r) computed stably, where F is gradient_factor.
/// Behaves like k^2 / (8 pi r) as r -> 0.
Complex gradient_factor_remainder(const WaveNumber& k, double r);

/// r -> 0 limits of the smooth parts.
Complex single_layer_remainder_limit(const WaveNumber& k);
/// Limit of the double-layer remainder as xi -> 0 along unit direction xi_hat:
/// -(k^2 / (8 pi)) (nu . xi_hat).
Complex double_layer_remainder_limit(const WaveNumber& k, double nu_dot_xi_hat);

/// Far-field kernels for direction x_hat, source point y, source normal nu:
/// single = -exp(-ik x_hat.y) / (4 pi), double = (ik / (4 pi)) (x_hat.nu) exp(-ik x_hat.y).
struct FarFieldKernels {
  Complex single;
  Complex dlayer;
};
FarFieldKernels farfield_kernels(const WaveNumber& k, const Vec3& x_hat, const Vec3& y, const Vec3& nu);

/// |x| (grad_u . x/|x| - i k u).
Complex radiation_residual(Complex u, const CVec3& grad_u, const Vec3& x, const WaveNumber& k);

}  // namespace helmscat
