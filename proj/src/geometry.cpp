#include "helmscat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "helmscat/io.hpp"
#include "helmscat/quadrature.hpp"

namespace helmscat {

// ---------------------------------------------------------------------------
// Reference mesh
// ---------------------------------------------------------------------------

namespace {

ReferenceMesh icosahedron() {
  const double g = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                         {0, -1, -g}, {0, 1, -g}, {g, 0, -1},  {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  ReferenceMesh mesh;
  for (auto& p : v) mesh.nodes.push_back(p.normalized());

  // Faces are the vertex triples at mutual (unnormalised) distance 2.
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j)
      for (int k = j + 1; k < 12; ++k) {
        auto close = [&](int a, int b) { return std::abs((v[a] - v[b]).norm() - 2.0) < 1e-9; };
        if (close(i, j) && close(j, k) && close(k, i)) mesh.panels.push_back({i, j, k});
      }
  return mesh;
}

void orient_outward(ReferenceMesh& mesh) {
  for (auto& p : mesh.panels) {
    const Vec3& a = mesh.nodes[p[0]];
    const Vec3& b = mesh.nodes[p[1]];
    const Vec3& c = mesh.nodes[p[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0) std::swap(p[1], p[2]);
  }
}

void finalize(ReferenceMesh& mesh) {
  mesh.panel_centroids.clear();
  mesh.panel_reference_areas.clear();
  for (const auto& p : mesh.panels) {
    const Vec3& a = mesh.nodes[p[0]];
    const Vec3& b = mesh.nodes[p[1]];
    const Vec3& c = mesh.nodes[p[2]];
    mesh.panel_centroids.push_back(((a + b + c) / 3.0).normalized());
    mesh.panel_reference_areas.push_back(0.5 * (b - a).cross(c - a).norm());
  }
}

}  // namespace

ReferenceMesh build_reference_mesh(int level) {
  if (level < 0 || level > kMaxMeshLevel)
    throw DomainError("mesh level " + std::to_string(level) + " outside [0, " + std::to_string(kMaxMeshLevel) +
                      "] (memory guard)");
  ReferenceMesh mesh = icosahedron();
  orient_outward(mesh);

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(mesh.nodes.size());
      mesh.nodes.push_back((mesh.nodes[a] + mesh.nodes[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * mesh.panels.size());
    for (const auto& [a, b, c] : mesh.panels) {
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.push_back({a, ab, ca});
      next.push_back({ab, b, bc});
      next.push_back({ca, bc, c});
      next.push_back({ab, bc, ca});
    }
    mesh.panels = std::move(next);
  }
  mesh.level = level;
  finalize(mesh);
  return mesh;
}

std::shared_ptr<const ReferenceMesh> shared_reference_mesh(int level) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const ReferenceMesh>> cache;
  const std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(level);
  if (it == cache.end()) it = cache.emplace(level, std::make_shared<const ReferenceMesh>(build_reference_mesh(level))).first;
  return it->second;
}

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom-Strackee solid angle.
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

// ---------------------------------------------------------------------------
// ShapeMap
// ---------------------------------------------------------------------------

std::pair<Vec3, Vec3> tangent_frame(const Vec3& s) {
  const Vec3 a = std::abs(s.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (a - a.dot(s) * s).normalized();
  return {e1, s.cross(e1)};
}

double radial_profile(const std::vector<Bump>& bumps, const Vec3& s) {
  double rho = 1.0;
  for (const auto& b : bumps) rho += b.amplitude * std::exp((b.center.dot(s) - 1.0) / (b.width * b.width));
  return rho;
}

ShapeMap ShapeMap::identity() { return ShapeMap(Identity{}); }

ShapeMap ShapeMap::uniform_scale(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("uniform_scale: factor must be positive and finite");
  return ShapeMap(UniformScale{a});
}

ShapeMap ShapeMap::axes_scale(double a, double b, double c) {
  for (double x : {a, b, c})
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("axes_scale: factors must be positive and finite");
  return ShapeMap(AxesScale{a, b, c});
}

ShapeMap ShapeMap::radial_star(std::vector<Bump> bumps) {
  double worst = 1.0;
  for (auto& b : bumps) {
    if (!(b.width > 0.0)) throw DomainError("radial_star: bump width must be positive");
    if (!(b.center.norm() > 0.0)) throw DomainError("radial_star: bump center must be nonzero");
    if (!std::isfinite(b.amplitude)) throw DomainError("radial_star: amplitude must be finite");
    b.center.normalize();
    if (b.amplitude < 0.0) worst += b.amplitude;
  }
  // Each bump lies in (0, 1], so 1 + sum of negative amplitudes bounds the profile from below.
  if (!(worst > 0.0))
    throw DomainError("radial_star: negative amplitudes sum to " + format_double(worst - 1.0) +
                      "; the radius profile would not be strictly positive");
  return ShapeMap(RadialStar{std::move(bumps)});
}

ShapeMap ShapeMap::linear_family(const ShapeMap& base, const ShapeMap& direction, double t) {
  if (!std::isfinite(t)) throw DomainError("linear_family: t must be finite");
  return ShapeMap(LinearFamily{std::make_shared<const ShapeMap>(base), std::make_shared<const ShapeMap>(direction), t});
}

Vec3 ShapeMap::operator()(const Vec3& s) const {
  return std::visit(
      [&](const auto& f) -> Vec3 {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return s;
        } else if constexpr (std::is_same_v<T, UniformScale>) {
          return f.a * s;
        } else if constexpr (std::is_same_v<T, AxesScale>) {
          return {f.a * s.x(), f.b * s.y(), f.c * s.z()};
        } else if constexpr (std::is_same_v<T, RadialStar>) {
          return radial_profile(f.bumps, s) * s;
        } else {
          if (f.t == 0.0) return (*f.base)(s);
          return (*f.base)(s) + f.t * (*f.direction)(s);
        }
      },
      family_);
}

Mat3 ShapeMap::differential(const Vec3& s) const {
  return std::visit(
      [&](const auto& f) -> Mat3 {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return Mat3::Identity();
        } else if constexpr (std::is_same_v<T, UniformScale>) {
          return f.a * Mat3::Identity();
        } else if constexpr (std::is_same_v<T, AxesScale>) {
          return Vec3(f.a, f.b, f.c).asDiagonal();
        } else if constexpr (std::is_same_v<T, RadialStar>) {
          double rho = 1.0;
          Vec3 grad = Vec3::Zero();
          for (const auto& b : f.bumps) {
            const double w2 = b.width * b.width;
            const double e = b.amplitude * std::exp((b.center.dot(s) - 1.0) / w2);
            rho += e;
            grad += (e / w2) * b.center;
          }
          return rho * Mat3::Identity() + s * grad.transpose();
        } else {
          if (f.t == 0.0) return f.base->differential(s);
          return f.base->differential(s) + f.t * f.direction->differential(s);
        }
      },
      family_);
}

double ShapeMap::area_element(const Vec3& s) const {
  const auto [e1, e2] = tangent_frame(s);
  const Mat3 d = differential(s);
  return (d * e1).cross(d * e2).norm();
}

Vec3 ShapeMap::normal(const Vec3& s) const {
  const auto [e1, e2] = tangent_frame(s);
  const Mat3 d = differential(s);
  return (d * e1).cross(d * e2).normalized();
}

std::string ShapeMap::describe() const {
  return std::visit(
      [&](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Identity>) {
          return "identity";
        } else if constexpr (std::is_same_v<T, UniformScale>) {
          return "uniform_scale:" + format_double(f.a);
        } else if constexpr (std::is_same_v<T, AxesScale>) {
          return "axes_scale:" + join_doubles({f.a, f.b, f.c});
        } else if constexpr (std::is_same_v<T, RadialStar>) {
          std::string out = "radial_star:";
          for (std::size_t i = 0; i < f.bumps.size(); ++i) {
            const auto& b = f.bumps[i];
            if (i) out += ';';
            out += join_doubles({b.center.x(), b.center.y(), b.center.z(), b.width, b.amplitude});
          }
          return out;
        } else {
          return "linear[" + f.base->describe() + "|" + f.direction->describe() + "|" + format_double(f.t) + "]";
        }
      },
      family_);
}

std::string ShapeMap::digest() const { return short_digest(describe()); }

ShapeMap ShapeMap::parse(const std::string& text) {
  if (text.rfind("linear[", 0) == 0 && text.back() == ']') {
    const std::string inner = text.substr(7, text.size() - 8);
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char ch : inner) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (ch == '|' && depth == 0) {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    parts.push_back(cur);
    if (parts.size() != 3) throw ConfigError("linear family needs 'linear[base|direction|t]': " + text);
    const auto t = parse_doubles(parts[2]);
    if (t.size() != 1) throw ConfigError("linear family t must be a single number: " + text);
    return linear_family(parse(parts[0]), parse(parts[1]), t[0]);
  }

  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string params = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto numbers = [&](std::size_t expected) {
    if (params.empty()) throw ConfigError("shape '" + name + "' needs parameters");
    auto v = parse_doubles(params);
    if (v.size() != expected)
      throw ConfigError("shape '" + name + "' expects " + std::to_string(expected) + " parameters");
    return v;
  };
  try {
    if (name == "identity" || name == "sphere") return identity();
    if (name == "uniform_scale") return uniform_scale(numbers(1)[0]);
    if (name == "axes_scale" || name == "ellipsoid") {
      const auto v = numbers(3);
      return axes_scale(v[0], v[1], v[2]);
    }
    if (name == "radial_star") {
      if (params.empty()) throw ConfigError("radial_star needs bump parameters cx,cy,cz,width,amplitude");
      std::vector<Bump> bumps;
      std::stringstream ss(params);
      std::string item;
      while (std::getline(ss, item, ';')) {
        const auto v = parse_doubles(item);
        if (v.size() != 5) throw ConfigError("radial_star bump needs cx,cy,cz,width,amplitude: " + item);
        bumps.push_back(Bump{Vec3(v[0], v[1], v[2]), v[3], v[4]});
      }
      return radial_star(std::move(bumps));
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid shape: ") + e.what());
  }
  throw ConfigError("unknown shape family '" + name + "'");
}

// ---------------------------------------------------------------------------
// DeformedSurface
// ---------------------------------------------------------------------------

namespace {
constexpr double kMinJacobian = 1e-10;
}

DeformedSurface::DeformedSurface(std::shared_ptr<const ReferenceMesh> mesh, ShapeMap shape)
    : mesh_(std::move(mesh)), shape_(std::move(shape)) {
  const std::size_t n = mesh_->panel_count();
  const PanelRule rule = regular_rule(kSurfaceRuleOrder);
  const std::size_t q = rule.size();

  points_.resize(n);
  normals_.resize(n);
  weights_.resize(n);
  diameters_.resize(n);
  sigma_.resize(n);
  nodes_.per_panel = static_cast<int>(q);
  for (auto* v : {&nodes_.x, &nodes_.y, &nodes_.z, &nodes_.nx, &nodes_.ny, &nodes_.nz, &nodes_.w}) v->resize(n * q);

  for (std::size_t j = 0; j < n; ++j) {
    const Vec3& c = mesh_->panel_centroids[j];
    sigma_[j] = shape_.area_element(c);
    if (!(sigma_[j] >= kMinJacobian))
      throw DomainError("shape rejected as non-immersive: tangential Jacobian " + format_double(sigma_[j]) +
                        " at panel " + std::to_string(j));
    const PanelPoint centre = map_panel(j, kCentroidU, kCentroidV);
    points_[j] = centre.position;
    normals_[j] = centre.normal;

    double total = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      const PanelPoint p = map_panel(j, rule.points[k][0], rule.points[k][1]);
      if (!(p.jacobian > 0.0) || !std::isfinite(p.jacobian))
        throw DomainError("shape rejected as non-immersive: degenerate panel " + std::to_string(j));
      const std::size_t idx = j * q + k;
      nodes_.x[idx] = p.position.x();
      nodes_.y[idx] = p.position.y();
      nodes_.z[idx] = p.position.z();
      nodes_.nx[idx] = p.normal.x();
      nodes_.ny[idx] = p.normal.y();
      nodes_.nz[idx] = p.normal.z();
      nodes_.w[idx] = rule.weights[k] * p.jacobian;
      total += nodes_.w[idx];
    }
    weights_[j] = total;

    const auto v = mapped_vertices(j);
    diameters_[j] = std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
    max_diameter_ = std::max(max_diameter_, diameters_[j]);
  }
  hash_ = short_digest(shape_.describe() + "|level=" + std::to_string(mesh_->level) +
                       "|rule=" + std::to_string(kSurfaceRuleOrder));
}

PanelPoint DeformedSurface::map_panel(std::size_t panel, double u, double v) const {
  const auto& idx = mesh_->panels[panel];
  const Vec3& a = mesh_->nodes[idx[0]];
  const Vec3& b = mesh_->nodes[idx[1]];
  const Vec3& c = mesh_->nodes[idx[2]];
  const Vec3 p = a + u * (b - a) + v * (c - a);
  const double np = p.norm();
  const Vec3 s = p / np;
  const Vec3 du = b - a, dv = c - a;
  const Vec3 su = (du - s.dot(du) * s) / np;
  const Vec3 sv = (dv - s.dot(dv) * s) / np;
  const Mat3 d = shape_.differential(s);
  const Vec3 n = (d * su).cross(d * sv);
  const double jac = n.norm();
  return PanelPoint{shape_(s), n / jac, jac};
}

std::array<Vec3, 3> DeformedSurface::mapped_vertices(std::size_t panel) const {
  const auto& idx = mesh_->panels[panel];
  return {shape_(mesh_->nodes[idx[0]]), shape_(mesh_->nodes[idx[1]]), shape_(mesh_->nodes[idx[2]])};
}

DeformedSurface apply_shape(const ShapeMap& shape, std::shared_ptr<const ReferenceMesh> mesh) {
  return DeformedSurface(std::move(mesh), shape);
}

// ---------------------------------------------------------------------------
// Validation and export
// ---------------------------------------------------------------------------

ShapeDiagnostics validate_shape(const ShapeMap& shape, const ReferenceMesh& mesh) {
  ShapeDiagnostics d;
  d.min_jacobian = std::numeric_limits<double>::infinity();
  d.max_jacobian = 0.0;
  auto sample = [&](const Vec3& s) {
    const double j = shape.area_element(s);
    d.min_jacobian = std::min(d.min_jacobian, std::isfinite(j) ? j : 0.0);
    d.max_jacobian = std::max(d.max_jacobian, j);
  };
  for (const auto& s : mesh.nodes) sample(s);
  for (const auto& s : mesh.panel_centroids) sample(s);

  // Radius profile of radial stars is checked directly as well.
  if (const auto* star = std::get_if<ShapeMap::RadialStar>(&shape.family())) {
    for (const auto& s : mesh.nodes)
      if (!(radial_profile(star->bumps, s) > 0.0)) d.min_jacobian = std::min(d.min_jacobian, 0.0);
  }

  const std::size_t n = mesh.panel_count();
  std::vector<Vec3> centres(n);
  std::vector<double> diam(n);
  double hmax = 0.0;
  d.signed_volume = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& p = mesh.panels[j];
    const Vec3 a = shape(mesh.nodes[p[0]]), b = shape(mesh.nodes[p[1]]), c = shape(mesh.nodes[p[2]]);
    centres[j] = shape(mesh.panel_centroids[j]);
    diam[j] = std::max({(a - b).norm(), (b - c).norm(), (c - a).norm()});
    hmax = std::max(hmax, diam[j]);
    const double area = spherical_triangle_area(mesh.nodes[p[0]], mesh.nodes[p[1]], mesh.nodes[p[2]]);
    const Vec3& s = mesh.panel_centroids[j];
    const auto [e1, e2] = tangent_frame(s);
    const Mat3 dm = shape.differential(s);
    d.signed_volume += centres[j].dot((dm * e1).cross(dm * e2)) * area / 3.0;
  }

  // Nearest non-adjacent centroid via a uniform bucket grid of cell size hmax.
  std::vector<std::vector<int>> vertex_panels(mesh.nodes.size());
  for (std::size_t j = 0; j < n; ++j)
    for (int v : mesh.panels[j]) vertex_panels[v].push_back(static_cast<int>(j));
  auto adjacent = [&](std::size_t i, std::size_t j) {
    for (int a : mesh.panels[i])
      for (int b : mesh.panels[j])
        if (a == b) return true;
    return false;
  };
  const double cell = hmax > 0.0 ? hmax : 1.0;
  auto key = [&](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor(p.x() / cell)),
                                    static_cast<long long>(std::floor(p.y() / cell)),
                                    static_cast<long long>(std::floor(p.z() / cell))};
  };
  struct KeyHash {
    std::size_t operator()(const std::array<long long, 3>& k) const {
      return std::hash<long long>()(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
    }
  };
  std::unordered_map<std::array<long long, 3>, std::vector<int>, KeyHash> grid;
  for (std::size_t j = 0; j < n; ++j) grid[key(centres[j])].push_back(static_cast<int>(j));

  d.min_separation_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = key(centres[i]);
    double best = std::numeric_limits<double>::infinity();
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (static_cast<std::size_t>(j) != i && !adjacent(i, j)) best = std::min(best, (centres[i] - centres[j]).norm());
        }
    // Nothing within one cell means the nearest non-neighbour is at least hmax away.
    if (!std::isfinite(best)) best = cell;
    d.min_separation_ratio = std::min(d.min_separation_ratio, best / diam[i]);
  }

  d.immersive = d.min_jacobian > kMinJacobian;
  d.injective = d.min_separation_ratio > 0.1;
  d.oriented = d.signed_volume > 0.0;
  d.passed = d.immersive && d.injective && d.oriented;
  return d;
}

void write_obj(std::ostream& os, const ReferenceMesh& mesh, const ShapeMap& shape) {
  os << "# shape " << shape.describe() << " level " << mesh.level << '\n';
  for (const auto& s : mesh.nodes) {
    const Vec3 p = shape(s);
    os << "v " << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
  for (const auto& f : mesh.panels) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

}  // namespace helmscat
