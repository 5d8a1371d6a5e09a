#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "helmscat/geometry.hpp"
#include "helmscat/quadrature.hpp"

using namespace helmscat;

namespace {

double total_weight(const DeformedSurface& s) {
  double a = 0.0;
  for (double w : s.weights()) a += w;
  return a;
}

// Area of the ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 by tensor Gauss-Legendre
// in (cos theta, phi) of |r_theta x r_phi|; independent of the mesh.
double ellipsoid_area_reference(double a, double b, double c) {
  const auto [x, w] = gauss_legendre01(200);
  double area = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double th = kPi * x[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double ph = 2.0 * kPi * x[j];
      const Vec3 rt(a * std::cos(th) * std::cos(ph), b * std::cos(th) * std::sin(ph), -c * std::sin(th));
      const Vec3 rp(-a * std::sin(th) * std::sin(ph), b * std::sin(th) * std::cos(ph), 0.0);
      area += w[i] * w[j] * rt.cross(rp).norm();
    }
  }
  return area * kPi * 2.0 * kPi;
}

ShapeMap star() { return ShapeMap::radial_star({Bump{Vec3(0, 0, 1), 0.5, 0.15}}); }

}  // namespace

TEST(ReferenceMesh, CountsFollowSubdivision) {
  for (int level = 0; level <= 3; ++level) {
    const ReferenceMesh m = build_reference_mesh(level);
    const std::size_t f = 20u << (2 * level);
    EXPECT_EQ(m.panel_count(), f);
    EXPECT_EQ(m.nodes.size(), f / 2 + 2);  // Euler: V - E + F = 2 with E = 3F/2
    for (const Vec3& v : m.nodes) EXPECT_NEAR(v.norm(), 1.0, 1e-14);
  }
  EXPECT_THROW(build_reference_mesh(kMaxMeshLevel + 1), DomainError);
}

TEST(ReferenceMesh, PanelsPointOutward) {
  const ReferenceMesh m = build_reference_mesh(2);
  for (std::size_t j = 0; j < m.panel_count(); ++j) {
    const auto& p = m.panels[j];
    const Vec3 n = (m.nodes[p[1]] - m.nodes[p[0]]).cross(m.nodes[p[2]] - m.nodes[p[0]]);
    EXPECT_GT(n.dot(m.panel_centroids[j]), 0.0);
  }
}

TEST(ReferenceMesh, SphericalAreasTileTheSphere) {
  EXPECT_NEAR(spherical_triangle_area(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()), kPi / 2.0, 1e-15);
  const ReferenceMesh m = build_reference_mesh(3);
  double a = 0.0;
  for (const auto& p : m.panels) a += spherical_triangle_area(m.nodes[p[0]], m.nodes[p[1]], m.nodes[p[2]]);
  EXPECT_NEAR(a, 4.0 * kPi, 1e-11);
}

TEST(ReferenceMesh, SharedCacheReturnsSameInstance) {
  EXPECT_EQ(shared_reference_mesh(2).get(), shared_reference_mesh(2).get());
}

TEST(DeformedSurface, SphereArea) {
  const DeformedSurface s(shared_reference_mesh(3), ShapeMap::identity());
  EXPECT_NEAR(total_weight(s) / (4.0 * kPi), 1.0, 1e-8);
  for (std::size_t j = 0; j < s.size(); ++j) {
    EXPECT_NEAR(s.points()[j].norm(), 1.0, 1e-14);
    EXPECT_NEAR(s.normals()[j].dot(s.points()[j]), 1.0, 1e-12);
  }
}

TEST(DeformedSurface, ScaledSphereArea) {
  const DeformedSurface s(shared_reference_mesh(2), ShapeMap::uniform_scale(1.7));
  EXPECT_NEAR(total_weight(s) / (4.0 * kPi * 1.7 * 1.7), 1.0, 1e-6);
}

TEST(DeformedSurface, EllipsoidAreaMatchesIndependentQuadrature) {
  const double ref = ellipsoid_area_reference(1.0, 1.3, 0.7);
  const DeformedSurface s(shared_reference_mesh(3), ShapeMap::axes_scale(1.0, 1.3, 0.7));
  EXPECT_NEAR(total_weight(s) / ref, 1.0, 1e-7);
}

TEST(DeformedSurface, NodeWeightsSumToPanelWeights) {
  const DeformedSurface s(shared_reference_mesh(1), star());
  const auto& nd = s.nodes();
  for (std::size_t j = 0; j < s.size(); ++j) {
    double w = 0.0;
    for (int q = 0; q < nd.per_panel; ++q) w += nd.w[j * nd.per_panel + q];
    EXPECT_DOUBLE_EQ(w, s.weights()[j]);
  }
}

TEST(DeformedSurface, HashDependsOnShapeAndLevel) {
  const DeformedSurface a(shared_reference_mesh(1), ShapeMap::identity());
  const DeformedSurface b(shared_reference_mesh(2), ShapeMap::identity());
  const DeformedSurface c(shared_reference_mesh(1), ShapeMap::uniform_scale(1.1));
  EXPECT_NE(a.shape_hash(), b.shape_hash());
  EXPECT_NE(a.shape_hash(), c.shape_hash());
}

TEST(ShapeMap, DifferentialMatchesFiniteDifferences) {
  const ShapeMap shapes[] = {ShapeMap::axes_scale(1.0, 1.3, 0.7), star(),
                             ShapeMap::linear_family(star(), ShapeMap::axes_scale(0.1, 0.2, 0.3), -0.4)};
  const Vec3 s = Vec3(0.3, -0.5, 0.8).normalized();
  const auto [e1, e2] = tangent_frame(s);
  const double h = 1e-6;
  for (const ShapeMap& phi : shapes) {
    for (const Vec3& e : {e1, e2}) {
      const Vec3 fd = (phi((s + h * e).normalized()) - phi((s - h * e).normalized())) / (2.0 * h);
      EXPECT_LT((phi.differential(s) * e - fd).norm(), 1e-8);
    }
  }
}

TEST(ShapeMap, TangentFrameIsRightHanded) {
  const Vec3 s = Vec3(-0.2, 0.1, -0.97).normalized();
  const auto [e1, e2] = tangent_frame(s);
  EXPECT_NEAR(e1.dot(s), 0.0, 1e-15);
  EXPECT_NEAR(e1.norm(), 1.0, 1e-15);
  EXPECT_LT((e1.cross(e2) - s).norm(), 1e-14);
}

TEST(ShapeMap, NormalOfEllipsoidMatchesImplicitGradient) {
  const ShapeMap phi = ShapeMap::axes_scale(1.0, 1.3, 0.7);
  const Vec3 s = Vec3(0.6, 0.2, -0.4).normalized();
  const Vec3 x = phi(s);
  const Vec3 g = Vec3(x.x() / 1.0, x.y() / (1.3 * 1.3), x.z() / (0.7 * 0.7)).normalized();
  EXPECT_LT((phi.normal(s) - g).norm(), 1e-13);
}

TEST(ShapeMap, LinearFamilyAtZeroIsBitwiseBase) {
  const ShapeMap base = star();
  const ShapeMap fam = ShapeMap::linear_family(base, ShapeMap::axes_scale(1.0, 1.3, 0.7), 0.0);
  const ReferenceMesh m = build_reference_mesh(2);
  for (const Vec3& s : m.nodes) {
    const Vec3 a = base(s), b = fam(s);
    EXPECT_EQ(a.x(), b.x());
    EXPECT_EQ(a.y(), b.y());
    EXPECT_EQ(a.z(), b.z());
  }
}

TEST(ShapeMap, ParseDescribeRoundTrip) {
  for (const std::string text : {"identity", "uniform_scale:1.5", "axes_scale:1,1.3,0.7", "radial_star:0,0,1,0.5,0.15"}) {
    EXPECT_EQ(ShapeMap::parse(text).describe(), text);
  }
  EXPECT_EQ(ShapeMap::parse("ellipsoid:1,1.3,0.7").describe(), "axes_scale:1,1.3,0.7");
  EXPECT_THROW(ShapeMap::parse("blob"), ConfigError);
  EXPECT_THROW(ShapeMap::parse("axes_scale:1,2"), ConfigError);
}

TEST(ShapeMap, RejectsInvalidParameters) {
  EXPECT_THROW(ShapeMap::axes_scale(1.0, -1.0, 1.0), DomainError);
  EXPECT_THROW(ShapeMap::radial_star({Bump{Vec3(0, 0, 1), 0.5, -1.5}}), DomainError);
}

TEST(ShapeValidation, AcceptsCatalogRejectsInverted) {
  const ReferenceMesh m = build_reference_mesh(2);
  for (const ShapeMap& phi : {ShapeMap::identity(), ShapeMap::axes_scale(1.0, 1.3, 0.7), star()}) {
    EXPECT_TRUE(validate_shape(phi, m).passed) << phi.describe();
  }
  // s -> s - 2s = -s reverses orientation.
  const ShapeDiagnostics d = validate_shape(ShapeMap::linear_family(ShapeMap::identity(), ShapeMap::identity(), -2.0), m);
  EXPECT_FALSE(d.oriented);
  EXPECT_FALSE(d.passed);
  EXPECT_NEAR(validate_shape(ShapeMap::identity(), build_reference_mesh(4)).signed_volume, 4.0 * kPi / 3.0, 2e-2);
}

TEST(ObjExport, WritesVerticesAndFaces) {
  const ReferenceMesh m = build_reference_mesh(1);
  std::ostringstream os;
  write_obj(os, m, star());
  std::istringstream is(os.str());
  std::string line;
  std::size_t v = 0, f = 0;
  while (std::getline(is, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  EXPECT_EQ(v, m.nodes.size());
  EXPECT_EQ(f, m.panel_count());
}
