#include <gtest/gtest.h>

#include <cmath>

#include "helmscat/quadrature.hpp"

using namespace helmscat;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Integral of u^a v^b over the unit triangle.
double monomial_exact(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

// Integral of 1/|x - p| over a flat triangle containing p in its plane:
// sum over edges of d * (asinh(s1/d) - asinh(s0/d)), d the distance from p to
// the edge line and s0, s1 the endpoint positions along it from the foot point.
double flat_inverse_distance(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
  const Vec3 v[3] = {a, b, c};
  double total = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec3& q0 = v[e];
    const Vec3& q1 = v[(e + 1) % 3];
    const Vec3 t = (q1 - q0).normalized();
    const Vec3 foot = q0 + (p - q0).dot(t) * t;
    const double d = (p - foot).norm();
    const double s0 = (q0 - foot).dot(t), s1 = (q1 - foot).dot(t);
    total += d * (std::asinh(s1 / d) - std::asinh(s0 / d));
  }
  return total;
}

double duffy_inverse_distance(const Vec3& a, const Vec3& b, const Vec3& c, UV sp, int order) {
  const PanelRule r = duffy_self_rule(order, sp);
  const double jac = (b - a).cross(c - a).norm();
  const Vec3 p = a + sp[0] * (b - a) + sp[1] * (c - a);
  double total = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    const Vec3 x = a + r.points[q][0] * (b - a) + r.points[q][1] * (c - a);
    total += r.weights[q] * jac / (x - p).norm();
  }
  return total;
}

}  // namespace

TEST(GaussLegendre, IntegratesPolynomials) {
  for (int n : {1, 4, 8, 13}) {
    const auto [x, w] = gauss_legendre01(n);
    ASSERT_EQ(x.size(), static_cast<std::size_t>(n));
    for (int m = 0; m < 2 * n; ++m) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], m);
      EXPECT_NEAR(s, 1.0 / (m + 1), 1e-14) << "n=" << n << " m=" << m;
    }
  }
}

TEST(RegularRule, ExactToStatedDegree) {
  for (int order : {1, 3, 6, 12}) {
    const PanelRule r = regular_rule(order);
    ASSERT_EQ(r.size(), static_cast<std::size_t>(order));
    for (int a = 0; a <= r.degree; ++a)
      for (int b = 0; a + b <= r.degree; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][0], a) * std::pow(r.points[q][1], b);
        EXPECT_NEAR(s, monomial_exact(a, b), 1e-14) << "order " << order << " u^" << a << " v^" << b;
      }
    for (const UV& p : r.points) {
      EXPECT_GT(p[0], 0.0);
      EXPECT_GT(p[1], 0.0);
      EXPECT_LT(p[0] + p[1], 1.0);
    }
  }
  EXPECT_THROW(regular_rule(5), DomainError);
}

TEST(DuffyRule, IntegratesSmoothFunctions) {
  const PanelRule r = duffy_self_rule(8);
  double area = 0.0, m = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    area += r.weights[q];
    m += r.weights[q] * r.points[q][0] * r.points[q][1] * r.points[q][1];
  }
  EXPECT_NEAR(area, 0.5, 1e-14);
  EXPECT_NEAR(m, monomial_exact(1, 2), 1e-14);
  EXPECT_THROW(duffy_self_rule(3), DomainError);
}

TEST(DuffyRule, InverseDistanceConvergesToAnalyticFlatTriangle) {
  const Vec3 a(0.0, 0.0, 0.0), b(1.0, 0.1, 0.0), c(0.3, 0.8, 0.0);
  for (UV sp : {UV{1.0 / 3.0, 1.0 / 3.0}, UV{0.1, 0.2}, UV{0.6, 0.3}}) {
    const Vec3 p = a + sp[0] * (b - a) + sp[1] * (c - a);
    const double exact = flat_inverse_distance(a, b, c, p);
    double prev = 1.0;
    for (int order : {8, 16, 32}) {
      const double err = std::abs(duffy_inverse_distance(a, b, c, sp, order) / exact - 1.0);
      EXPECT_LT(err, prev);
      prev = err;
    }
    EXPECT_LT(prev, 1e-6);
  }
  // Collocation sits at the centroid, where the default order is already accurate.
  const Vec3 a2(0.2, -0.1, 0.5), b2(0.9, 0.3, -0.2), c2(-0.1, 0.7, 0.1);
  const Vec3 p2 = a2 + (b2 - a2) / 3.0 + (c2 - a2) / 3.0;
  EXPECT_NEAR(duffy_inverse_distance(a2, b2, c2, {1.0 / 3.0, 1.0 / 3.0}, 8) / flat_inverse_distance(a2, b2, c2, p2), 1.0,
              1e-4);
}

TEST(NearSplit, TilesPanelAndRefinesTowardTarget) {
  const SubPanel root{{UV{0.0, 0.0}, UV{1.0, 0.0}, UV{0.0, 1.0}}, 0};
  const auto map = [](const UV& p) { return Vec3(p[0], p[1], 0.0); };
  const auto near = near_singular_split(root, map, Vec3(0.3, 0.3, 0.02), 2.0, 4);
  EXPECT_GT(near.size(), 1u);
  double area = 0.0;
  for (const auto& s : near) {
    area += s.area();
    EXPECT_LE(s.depth, 4);
  }
  EXPECT_NEAR(area, 0.5, 1e-15);
  EXPECT_EQ(near_singular_split(root, map, Vec3(10.0, 10.0, 10.0), 2.0, 4).size(), 1u);
}

TEST(NearSplit, MappedRuleIntegratesOverSubPanel) {
  const SubPanel sub{{UV{0.2, 0.1}, UV{0.6, 0.1}, UV{0.2, 0.5}}, 1};
  const PanelRule r = map_rule(regular_rule(6), sub);
  double area = 0.0, mu = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) {
    area += r.weights[q];
    mu += r.weights[q] * r.points[q][0];
  }
  EXPECT_NEAR(area, sub.area(), 1e-15);
  // centroid u = (0.2 + 0.6 + 0.2) / 3
  EXPECT_NEAR(mu / area, 1.0 / 3.0, 1e-14);
}
