#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "helmscat/kernels.hpp"
#include "helmscat/kernels_batch.hpp"

using namespace helmscat;

namespace {

struct Sources {
  std::vector<double> x, y, z, nx, ny, nz, dr, di, sr, si;
  simd::SourceBlock block() const { return {x.data(), y.data(), z.data(), nx.data(), ny.data(), nz.data(), x.size()}; }
  simd::PotentialSources potential() const { return {block(), dr.data(), di.data(), sr.data(), si.data()}; }
};

// n is deliberately not a multiple of the vector width so the tail path runs.
Sources random_sources(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Sources s;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p(g(rng), g(rng), g(rng));
    Vec3 nu(g(rng), g(rng), g(rng));
    p = p.normalized() * (1.0 + 0.3 * std::abs(g(rng)));
    nu.normalize();
    s.x.push_back(p.x());
    s.y.push_back(p.y());
    s.z.push_back(p.z());
    s.nx.push_back(nu.x());
    s.ny.push_back(nu.y());
    s.nz.push_back(nu.z());
    s.dr.push_back(g(rng));
    s.di.push_back(g(rng));
    s.sr.push_back(g(rng));
    s.si.push_back(g(rng));
  }
  return s;
}

struct Row {
  std::vector<double> v[6];
  explicit Row(std::size_t n) {
    for (auto& a : v) a.assign(n, 0.0);
  }
  simd::KernelRowOut out() { return {v[0].data(), v[1].data(), v[2].data(), v[3].data(), v[4].data(), v[5].data()}; }
};

const Complex kWaves[] = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.5}, {2.0, 0.0}, {7.5, 0.25}};

}  // namespace

TEST(KernelRowScalar, MatchesPointKernels) {
  const Sources s = random_sources(13, 1);
  const Vec3 x(2.5, 0.1, -0.3), nx = Vec3(0.2, 0.9, 0.1).normalized();
  for (Complex kv : kWaves) {
    const WaveNumber k(kv);
    Row row(s.x.size());
    simd::kernel_row_scalar(x, nx, kv, s.block(), row.out());
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      const Vec3 y(s.x[j], s.y[j], s.z[j]), ny(s.nx[j], s.ny[j], s.nz[j]);
      const CVec3 g = grad_fund_sol(k, x - y);
      const Complex S = fund_sol(k, x - y);
      const Complex D = -ny.cast<Complex>().dot(g);
      const Complex A = nx.cast<Complex>().dot(g);
      EXPECT_LT(std::abs(Complex(row.v[0][j], row.v[1][j]) - S), 1e-14);
      EXPECT_LT(std::abs(Complex(row.v[2][j], row.v[3][j]) - D), 1e-14);
      EXPECT_LT(std::abs(Complex(row.v[4][j], row.v[5][j]) - A), 1e-14);
    }
  }
}

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd::avx2_available()) GTEST_SKIP() << "AVX2 not available on this CPU";
  }
};

#if defined(__x86_64__) || defined(_M_X64)

TEST_F(Avx2Equivalence, ExpSinCosAccuracy) {
  std::vector<double> x, y;
  for (int i = 0; i < 4001; ++i) {
    x.push_back(-40.0 + 0.02 * i);
    y.push_back(-300.0 + 0.15 * i);
  }
  std::vector<double> e(x.size()), sn(x.size()), cs(x.size());
  simd::exp_sincos_avx2(x, y, e, sn, cs);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(e[i] / std::exp(x[i]), 1.0, 4e-16 * 4);
    EXPECT_NEAR(sn[i], std::sin(y[i]), 4e-15);
    EXPECT_NEAR(cs[i], std::cos(y[i]), 4e-15);
  }
}

TEST_F(Avx2Equivalence, KernelRowMatchesScalar) {
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    const Sources s = random_sources(n, static_cast<unsigned>(n));
    const Vec3 x(0.9, -0.2, 0.4), nx = Vec3(0.1, -0.3, 0.95).normalized();
    for (Complex k : kWaves) {
      Row a(n), b(n);
      simd::kernel_row_scalar(x, nx, k, s.block(), a.out());
      simd::kernel_row_avx2(x, nx, k, s.block(), b.out());
      for (int c = 0; c < 6; ++c)
        for (std::size_t j = 0; j < n; ++j)
          EXPECT_NEAR(a.v[c][j], b.v[c][j], 1e-13 * (1.0 + std::abs(a.v[c][j]))) << "component " << c << " node " << j;
    }
  }
}

TEST_F(Avx2Equivalence, PotentialMatchesScalar) {
  const Sources s = random_sources(517, 9);
  for (Complex k : kWaves) {
    for (const Vec3& x : {Vec3(3.0, 0.0, 0.0), Vec3(0.2, 1.4, -0.9)}) {
      const auto a = simd::potential_scalar(x, k, s.potential(), true);
      const auto b = simd::potential_avx2(x, k, s.potential(), true);
      const double scale = 1.0 + std::abs(a.value) + a.gradient.norm();
      EXPECT_LT(std::abs(a.value - b.value), 1e-13 * scale);
      EXPECT_LT((a.gradient - b.gradient).norm(), 1e-13 * scale);
    }
  }
}

#endif

TEST(Dispatch, IsaSelection) {
  const simd::Isa original = simd::active_isa();
  simd::set_active_isa(simd::Isa::scalar);
  EXPECT_EQ(simd::active_isa(), simd::Isa::scalar);
  EXPECT_STREQ(simd::isa_name(simd::Isa::scalar), "scalar");
  if (!simd::avx2_available()) EXPECT_THROW(simd::set_active_isa(simd::Isa::avx2), DomainError);
  simd::set_active_isa(original);
}

TEST(Dispatch, DispatchedRowAgreesAcrossIsas) {
  const Sources s = random_sources(37, 4);
  const Vec3 x(1.5, 0.5, 0.5), nx = Vec3::UnitZ();
  const simd::Isa original = simd::active_isa();
  Row a(37), b(37);
  simd::set_active_isa(simd::Isa::scalar);
  simd::kernel_row(x, nx, {1.0, 0.5}, s.block(), a.out());
  simd::set_active_isa(original);
  simd::kernel_row(x, nx, {1.0, 0.5}, s.block(), b.out());
  for (int c = 0; c < 6; ++c)
    for (std::size_t j = 0; j < 37; ++j) EXPECT_NEAR(a.v[c][j], b.v[c][j], 1e-13 * (1.0 + std::abs(a.v[c][j])));
}
