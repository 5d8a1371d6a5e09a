#include "helmscat/kernels.hpp"

#include <cmath>

#include "helmscat/io.hpp"

namespace helmscat {

namespace {

constexpr Complex kI{0.0, 1.0};

double checked_norm(const Vec3& xi, const char* what) {
  const double r = xi.norm();
  if (!(r > 0.0)) throw DomainError(std::string(what) + ": argument must be nonzero");
  return r;
}

// exp(z) - 1 for complex z without cancellation.
Complex expm1_complex(Complex z) {
  const double a = z.real(), b = z.imag();
  const double ea = std::exp(a);
  const double sh = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * sh * sh, ea * std::sin(b)};
}

}  // namespace

WaveNumber::WaveNumber(Complex k) : k_(k) {
  if (!std::isfinite(k.real()) || !std::isfinite(k.imag())) throw DomainError("wave number must be finite");
  if (k.imag() < 0.0)
    throw DomainError("wave number must lie in C+ (Im k >= 0); got Im k = " + format_double(k.imag()));
}

Complex fund_sol(const WaveNumber& k, const Vec3& xi) {
  const double r = checked_norm(xi, "fund_sol");
  return -std::exp(kI * k.value() * r) / (kFourPi * r);
}

Complex gradient_factor(const WaveNumber& k, double r) {
  const Complex ikr = kI * k.value() * r;
  return std::exp(ikr) * (1.0 - ikr) / (kFourPi * r * r * r);
}

CVec3 grad_fund_sol(const WaveNumber& k, const Vec3& xi) {
  const double r = checked_norm(xi, "grad_fund_sol");
  const Complex f = gradient_factor(k, r);
  return CVec3(f * xi.x(), f * xi.y(), f * xi.z());
}

Eigen::Matrix3cd hessian_fund_sol(const WaveNumber& k, const Vec3& xi) {
  const double r = checked_norm(xi, "hessian_fund_sol");
  const Complex kk = k.value();
  const Complex e = std::exp(kI * kk * r);
  const Complex f = e * (1.0 - kI * kk * r) / (kFourPi * r * r * r);
  // F'(r) / r = k^2 e^{ikr} / (4 pi r^3) - 3 F / r^2
  const Complex g = kk * kk * e / (kFourPi * r * r * r) - 3.0 * f / (r * r);
  Eigen::Matrix3cd h = f * Eigen::Matrix3cd::Identity();
  h += g * (xi * xi.transpose()).cast<Complex>();
  return h;
}

Complex single_layer_remainder(const WaveNumber& k, double r) {
  if (k.is_zero()) return 0.0;
  // -(e^{ikr} - 1) / (4 pi r)
  return -expm1_complex(kI * k.value() * r) / (kFourPi * r);
}

Complex gradient_factor_remainder(const WaveNumber& k, double r) {
  if (k.is_zero()) return 0.0;
  const Complex z = kI * k.value() * r;
  Complex num;
  if (std::abs(z) < 0.5) {
    // e^z (1 - z) - 1 = sum_{n>=2} (1 - n) z^n / n!
    Complex term = z;  // z^n / n! at n = 1
    num = 0.0;
    for (int n = 2; n < 40; ++n) {
      term *= z / static_cast<double>(n);
      const Complex add = static_cast<double>(1 - n) * term;
      num += add;
      if (std::abs(add) < 1e-18 * std::abs(num)) break;
    }
  } else {
    num = std::exp(z) * (1.0 - z) - 1.0;
  }
  return num / (kFourPi * r * r * r);
}

Complex single_layer_remainder_limit(const WaveNumber& k) { return -kI * k.value() / kFourPi; }

Complex double_layer_remainder_limit(const WaveNumber& k, double nu_dot_xi_hat) {
  return -(k.value() * k.value() / (8.0 * kPi)) * nu_dot_xi_hat;
}

LaplaceSplit split_laplace(const WaveNumber& k, const Vec3& xi, const Vec3& nu) {
  const double r = checked_norm(xi, "split_laplace");
  LaplaceSplit out;
  out.single.singular = -1.0 / (kFourPi * r);
  out.single.smooth = single_layer_remainder(k, r);
  const double f0 = 1.0 / (kFourPi * r * r * r);
  const double nd = nu.dot(xi);
  out.dlayer.singular = -f0 * nd;
  out.dlayer.smooth = -gradient_factor_remainder(k, r) * nd;
  return out;
}

FarFieldKernels farfield_kernels(const WaveNumber& k, const Vec3& x_hat, const Vec3& y, const Vec3& nu) {
  const Complex phase = std::exp(-kI * k.value() * x_hat.dot(y));
  return {-phase / kFourPi, (kI * k.value() / kFourPi) * x_hat.dot(nu) * phase};
}

Complex radiation_residual(Complex u, const CVec3& grad_u, const Vec3& x, const WaveNumber& k) {
  const double r = x.norm();
  if (!(r > 0.0)) throw DomainError("radiation_residual: x must be nonzero");
  const Vec3 xh = x / r;
  const Complex radial = grad_u.x() * xh.x() + grad_u.y() * xh.y() + grad_u.z() * xh.z();
  return r * (radial - kI * k.value() * u);
}

}  // namespace helmscat
