#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "helmscat/common.hpp"

namespace helmscat {

// ---------------------------------------------------------------------------
// Reference sphere triangulation
// ---------------------------------------------------------------------------

inline constexpr int kMaxMeshLevel = 6;

/// Icosphere triangulation of the unit sphere.
///
/// Panels are consistently oriented so that (b-a)x(c-a) points away from the
/// origin. `panel_reference_areas` are the flat triangle areas; the exact
/// spherical panel areas enter through DeformedSurface weights.
struct ReferenceMesh {
  int level = 0;
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 3>> panels;
  std::vector<Vec3> panel_centroids;  // flat centroid projected to the sphere
  std::vector<double> panel_reference_areas;

  std::size_t panel_count() const { return panels.size(); }
};

/// Subdivides the icosahedron `level` times. Throws DomainError above kMaxMeshLevel.
ReferenceMesh build_reference_mesh(int level);

/// Process-wide cache of build_reference_mesh results (thread-safe).
std::shared_ptr<const ReferenceMesh> shared_reference_mesh(int level);

/// Exact area of the spherical triangle spanned by three unit vectors.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

// ---------------------------------------------------------------------------
// Shape maps
// ---------------------------------------------------------------------------

/// Gaussian-type bump on the sphere: amplitude * exp((center.s - 1) / width^2).
struct Bump {
  Vec3 center{0.0, 0.0, 1.0};
  double width = 0.5;
  double amplitude = 0.0;
};

/// A diffeomorphism of the unit sphere onto the obstacle boundary.
///
/// Families: identity, uniform scale, axis scaling, radial star (radius
/// 1 + sum of bumps) and the linear family base + t * direction, where the
/// direction is itself a shape map read as a displacement field. Every family
/// provides its tangential differential analytically.
class ShapeMap {
 public:
  struct Identity {};
  struct UniformScale {
    double a;
  };
  struct AxesScale {
    double a, b, c;
  };
  struct RadialStar {
    std::vector<Bump> bumps;
  };
  struct LinearFamily {
    std::shared_ptr<const ShapeMap> base;
    std::shared_ptr<const ShapeMap> direction;
    double t;
  };
  using Family = std::variant<Identity, UniformScale, AxesScale, RadialStar, LinearFamily>;

  ShapeMap() : family_(Identity{}) {}

  static ShapeMap identity();
  static ShapeMap uniform_scale(double a);
  static ShapeMap axes_scale(double a, double b, double c);
  // Throws DomainError unless the radius profile is strictly positive.
  static ShapeMap radial_star(std::vector<Bump> bumps);
  static ShapeMap linear_family(const ShapeMap& base, const ShapeMap& direction, double t);

  const Family& family() const { return family_; }

  /// phi(s) for a unit vector s.
  Vec3 operator()(const Vec3& s) const;

  /// Differential of phi at s. Only its action on vectors tangent to the
  /// sphere at s is meaningful.
  Mat3 differential(const Vec3& s) const;

  /// Tangential Jacobian |D phi e1 x D phi e2| for an orthonormal tangent frame.
  double area_element(const Vec3& s) const;

  /// Outward unit normal of the image surface at phi(s).
  Vec3 normal(const Vec3& s) const;

  /// Canonical text form, e.g. "axes_scale:1,1.3,0.7". Round-trips through parse().
  std::string describe() const;
  std::string digest() const;

  /// Parses NAME[:params] as produced by describe() for the non-recursive families.
  static ShapeMap parse(const std::string& text);

 private:
  explicit ShapeMap(Family f) : family_(std::move(f)) {}
  Family family_;
};

// Radius profile of a radial star: 1 + sum of bumps.
double radial_profile(const std::vector<Bump>& bumps, const Vec3& s);

// ---------------------------------------------------------------------------
// Deformed surface
// ---------------------------------------------------------------------------

/// Point on a panel's parametrization (u, v) -> phi(normalize(a + u(b-a) + v(c-a))).
struct PanelPoint {
  Vec3 position;
  Vec3 normal;
  double jacobian;  // |y_u x y_v|, the (u,v)-area element
};

/// Quadrature nodes of all panels in structure-of-arrays layout.
/// Node `j * per_panel + q` belongs to panel j.
struct SurfaceNodes {
  int per_panel = 0;
  std::vector<double> x, y, z;
  std::vector<double> nx, ny, nz;
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
  Vec3 position(std::size_t n) const { return {x[n], y[n], z[n]}; }
  Vec3 normal(std::size_t n) const { return {nx[n], ny[n], nz[n]}; }
};

class DeformedSurface {
 public:
  DeformedSurface(std::shared_ptr<const ReferenceMesh> mesh, ShapeMap shape);

  std::size_t size() const { return points_.size(); }
  const ReferenceMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const ReferenceMesh> mesh_ptr() const { return mesh_; }
  const ShapeMap& shape() const { return shape_; }

  // Collocation data, one entry per panel.
  const std::vector<Vec3>& points() const { return points_; }
  const std::vector<Vec3>& normals() const { return normals_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& diameters() const { return diameters_; }
  const std::vector<double>& area_elements() const { return sigma_; }  // sigma~ at centroids
  double max_diameter() const { return max_diameter_; }

  const SurfaceNodes& nodes() const { return nodes_; }
  const std::string& shape_hash() const { return hash_; }

  PanelPoint map_panel(std::size_t panel, double u, double v) const;
  std::array<Vec3, 3> mapped_vertices(std::size_t panel) const;

  // Collocation point preimage in the panel parameter domain.
  static constexpr double kCentroidU = 1.0 / 3.0;
  static constexpr double kCentroidV = 1.0 / 3.0;

 private:
  std::shared_ptr<const ReferenceMesh> mesh_;
  ShapeMap shape_;
  std::vector<Vec3> points_, normals_;
  std::vector<double> weights_, diameters_, sigma_;
  double max_diameter_ = 0.0;
  SurfaceNodes nodes_;
  std::string hash_;
};

/// Number of regular quadrature nodes per panel used by DeformedSurface.
inline constexpr int kSurfaceRuleOrder = 6;

DeformedSurface apply_shape(const ShapeMap& shape, std::shared_ptr<const ReferenceMesh> mesh);

struct ShapeDiagnostics {
  double min_jacobian = 0.0;
  double max_jacobian = 0.0;
  double min_separation_ratio = 0.0;  // nearest non-adjacent centroid distance / local diameter
  double signed_volume = 0.0;
  bool immersive = false;    // min_jacobian > 1e-10
  bool injective = false;    // min_separation_ratio > 0.1
  bool oriented = false;     // enclosed volume positive (outward normals)
  bool passed = false;
};

ShapeDiagnostics validate_shape(const ShapeMap& shape, const ReferenceMesh& mesh);

/// Writes `v x y z` / `f i j k` lines (1-based) of the mapped triangulation.
void write_obj(std::ostream& os, const ReferenceMesh& mesh, const ShapeMap& shape);

/// Orthonormal tangent frame (e1, e2) at unit vector s with e1 x e2 = s.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& s);

}  // namespace helmscat
