#include <gtest/gtest.h>

#include <cmath>

#include "helmscat/kernels.hpp"

using namespace helmscat;

namespace {

const Complex kI(0.0, 1.0);
const WaveNumber kCases[] = {WaveNumber(0.0, 0.0), WaveNumber(1.0, 0.0), WaveNumber(1.0, 0.5), WaveNumber(2.0, 0.0)};

Complex reference_S(Complex k, double r) { return -std::exp(kI * k * r) / (4.0 * kPi * r); }

}  // namespace

TEST(Wavenumber, RejectsLowerHalfPlane) {
  EXPECT_THROW(WaveNumber(1.0, -1e-3), DomainError);
  EXPECT_NO_THROW(WaveNumber(-2.0, 0.0));
  EXPECT_EQ(WaveNumber(3.0, 0.5).coupling(), Complex(1.0, -3.0));
}

TEST(FundamentalSolution, ClosedForm) {
  const Vec3 xi(0.3, -0.4, 1.2);
  for (const auto& k : kCases) {
    const Complex ref = reference_S(k.value(), xi.norm());
    EXPECT_LT(std::abs(fund_sol(k, xi) - ref), 1e-15);
  }
  EXPECT_THROW(fund_sol(kCases[1], Vec3::Zero()), DomainError);
}

TEST(FundamentalSolution, GradientMatchesFiniteDifferences) {
  const Vec3 xi(0.7, 0.2, -0.5);
  const double h = 1e-5;
  for (const auto& k : kCases) {
    const CVec3 g = grad_fund_sol(k, xi);
    for (int d = 0; d < 3; ++d) {
      const Vec3 e = Vec3::Unit(d);
      const Complex fd = (fund_sol(k, xi + h * e) - fund_sol(k, xi - h * e)) / (2.0 * h);
      EXPECT_LT(std::abs(g(d) - fd), 1e-9);
    }
    EXPECT_LT(std::abs(gradient_factor(k, xi.norm()) * xi.x() - g.x()), 1e-15);
  }
}

TEST(FundamentalSolution, HessianMatchesFiniteDifferencesAndHelmholtz) {
  const Vec3 xi(0.4, -0.9, 0.3);
  const double h = 1e-5;
  for (const auto& k : kCases) {
    const Eigen::Matrix3cd H = hessian_fund_sol(k, xi);
    for (int d = 0; d < 3; ++d) {
      const Vec3 e = Vec3::Unit(d);
      const CVec3 fd = (grad_fund_sol(k, xi + h * e) - grad_fund_sol(k, xi - h * e)) / (2.0 * h);
      EXPECT_LT((H.col(d) - fd).norm(), 1e-8);
    }
    EXPECT_LT((H - H.transpose()).norm(), 1e-14);
    // Delta S + k^2 S = 0 away from the source.
    EXPECT_LT(std::abs(H.trace() + k.value() * k.value() * fund_sol(k, xi)), 1e-12);
  }
}

TEST(LaplaceSplit, PartsSumToKernel) {
  const Vec3 xi(0.01, -0.02, 0.015), nu = Vec3(0.2, 0.3, 0.9).normalized();
  for (const auto& k : kCases) {
    const LaplaceSplit sp = split_laplace(k, xi, nu);
    EXPECT_NEAR(std::abs(sp.single.singular + 1.0 / (4.0 * kPi * xi.norm())), 0.0, 1e-12);
    EXPECT_LT(std::abs(sp.single.singular + sp.single.smooth - fund_sol(k, xi)), 1e-12);
    const Complex d = -nu.cast<Complex>().dot(grad_fund_sol(k, xi));
    EXPECT_LT(std::abs(sp.dlayer.singular + sp.dlayer.smooth - d), 1e-10 * std::abs(d));
  }
}

TEST(LaplaceSplit, RemaindersApproachLimits) {
  const Vec3 dir = Vec3(1.0, 2.0, -2.0).normalized(), nu = Vec3(0.0, 0.6, 0.8);
  for (const auto& k : kCases) {
    const double r = 1e-7;
    EXPECT_LT(std::abs(single_layer_remainder(k, r) - (-kI * k.value() / (4.0 * kPi))), 1e-6);
    const LaplaceSplit sp = split_laplace(k, r * dir, nu);
    const Complex lim = -(k.value() * k.value() / (8.0 * kPi)) * nu.dot(dir);
    EXPECT_LT(std::abs(sp.dlayer.smooth - lim), 1e-6);
    EXPECT_LT(std::abs(double_layer_remainder_limit(k, nu.dot(dir)) - lim), 1e-16);
    // Small-argument evaluation stays accurate where direct subtraction loses digits.
    const double rr = 1e-9;
    const Complex series = -(kI * k.value() - k.value() * k.value() * rr / 2.0) / (4.0 * kPi);
    EXPECT_LT(std::abs(single_layer_remainder(k, rr) - series), 1e-15);
  }
}

TEST(FarFieldKernels, MatchAsymptotics) {
  const Vec3 xh = Vec3(0.3, 0.5, -0.8).normalized(), y(0.2, -0.1, 0.3), nu = Vec3(1.0, 1.0, 0.5).normalized();
  const double R = 1e6;
  for (const auto& k : {kCases[1], kCases[3]}) {
    const Vec3 x = R * xh;
    const Complex scale = R * std::exp(-kI * k.value() * R);
    const FarFieldKernels f = farfield_kernels(k, xh, y, nu);
    EXPECT_LT(std::abs(scale * fund_sol(k, x - y) - f.single), 1e-6);
    const Complex d = -nu.cast<Complex>().dot(grad_fund_sol(k, x - y));
    EXPECT_LT(std::abs(scale * d - f.dlayer), 1e-5);
  }
}

TEST(Radiation, OutgoingDecaysIncomingDoesNot) {
  const WaveNumber k(2.0, 0.0);
  const Vec3 dir = Vec3(1.0, -1.0, 0.5).normalized();
  double prev = 0.0;
  for (double r : {10.0, 20.0, 40.0}) {
    const Vec3 x = r * dir;
    const double res = std::abs(radiation_residual(fund_sol(k, x), grad_fund_sol(k, x), x, k));
    if (prev > 0.0) EXPECT_NEAR(res / prev, 0.5, 1e-3);
    prev = res;
    // Incoming wave conj(S) keeps |residual| near 2k/(4 pi).
    const Complex in = std::conj(fund_sol(k, x));
    const CVec3 gin = grad_fund_sol(k, x).conjugate();
    EXPECT_NEAR(std::abs(radiation_residual(in, gin, x, k)), 2.0 * 2.0 / (4.0 * kPi), 2e-2);
  }
}
