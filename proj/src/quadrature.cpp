#include "helmscat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace helmscat {

namespace {

// Adds the S3 orbit of barycentric point (a, b, c) with a common weight.
// `weight` is normalised to a unit-area triangle; it is halved on insertion.
void add_orbit(PanelRule& rule, double a, double b, double c, double weight) {
  std::array<std::array<double, 3>, 6> perms = {{{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
  std::vector<UV> seen;
  for (const auto& p : perms) {
    const UV uv{p[1], p[2]};
    const bool dup = std::any_of(seen.begin(), seen.end(), [&](const UV& q) {
      return std::abs(q[0] - uv[0]) < 1e-15 && std::abs(q[1] - uv[1]) < 1e-15;
    });
    if (dup) continue;
    seen.push_back(uv);
    rule.points.push_back(uv);
    rule.weights.push_back(0.5 * weight);
  }
}

}  // namespace

PanelRule regular_rule(int order) {
  PanelRule rule;
  switch (order) {
    case 1:
      rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
      rule.weights = {0.5};
      rule.degree = 1;
      break;
    case 3:
      add_orbit(rule, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0);
      rule.degree = 2;
      break;
    case 6: {
      const double a1 = 0.44594849091596488632, w1 = 0.22338158967801146570;
      const double a2 = 0.09157621350977074346, w2 = 0.10995174365532186764;
      add_orbit(rule, a1, a1, 1.0 - 2.0 * a1, w1);
      add_orbit(rule, a2, a2, 1.0 - 2.0 * a2, w2);
      rule.degree = 4;
      break;
    }
    case 12: {
      const double a1 = 0.24928674517091042129, w1 = 0.11678627572637936603;
      const double a2 = 0.06308901449150222834, w2 = 0.05084490637020681692;
      const double b1 = 0.05314504984481694735, b2 = 0.31035245103378440542, w3 = 0.08285107561837357519;
      add_orbit(rule, a1, a1, 1.0 - 2.0 * a1, w1);
      add_orbit(rule, a2, a2, 1.0 - 2.0 * a2, w2);
      add_orbit(rule, b1, b2, 1.0 - b1 - b2, w3);
      rule.degree = 6;
      break;
    }
    default:
      throw DomainError("regular_rule: unsupported order " + std::to_string(order) +
                        " (supported: 1, 3, 6, 12)");
  }
  return rule;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n) {
  if (n < 1) throw DomainError("gauss_legendre01: n must be positive");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = 0.5 * (1.0 - z);
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[i] = 0.5 * wi;
    w[n - 1 - i] = 0.5 * wi;
  }
  return {x, w};
}

PanelRule duffy_self_rule(int order, UV singular_point) {
  if (order < 4) throw DomainError("duffy_self_rule: order must be >= 4");
  const auto [gx, gw] = gauss_legendre01(order);
  const std::array<UV, 3> verts = {UV{0.0, 0.0}, UV{1.0, 0.0}, UV{0.0, 1.0}};
  const UV p = singular_point;

  PanelRule rule;
  rule.degree = 0;
  for (int e = 0; e < 3; ++e) {
    const UV& a = verts[e];
    const UV& b = verts[(e + 1) % 3];
    // Sub-triangle (p, a, b); 2*area = |det(a-p, b-p)|.
    const double twice_area = std::abs((a[0] - p[0]) * (b[1] - p[1]) - (a[1] - p[1]) * (b[0] - p[0]));
    if (twice_area <= 0.0) continue;  // singular point on this edge
    for (int i = 0; i < order; ++i) {
      const double s = gx[i];
      for (int j = 0; j < order; ++j) {
        const double t = gx[j];
        // x = p + s (a - p) + s t (b - a); Jacobian s * 2|T|
        rule.points.push_back({p[0] + s * (a[0] - p[0]) + s * t * (b[0] - a[0]),
                               p[1] + s * (a[1] - p[1]) + s * t * (b[1] - a[1])});
        rule.weights.push_back(gw[i] * gw[j] * s * twice_area);
      }
    }
  }
  return rule;
}

double SubPanel::area() const {
  const auto& [a, b, c] = corners;
  return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

UV SubPanel::point(double s, double t) const {
  const auto& [a, b, c] = corners;
  return {a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])};
}

PanelRule map_rule(const PanelRule& rule, const SubPanel& sub) {
  PanelRule out;
  out.degree = rule.degree;
  out.points.reserve(rule.size());
  out.weights.reserve(rule.size());
  const double scale = 2.0 * sub.area();
  for (std::size_t q = 0; q < rule.size(); ++q) {
    out.points.push_back(sub.point(rule.points[q][0], rule.points[q][1]));
    out.weights.push_back(rule.weights[q] * scale);
  }
  return out;
}

namespace {

void split_recursive(const SubPanel& panel, const std::function<Vec3(const UV&)>& map, const Vec3& target,
                     double eta, int max_depth, std::vector<SubPanel>& out) {
  const auto& [a, b, c] = panel.corners;
  const UV ab{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  const UV bc{0.5 * (b[0] + c[0]), 0.5 * (b[1] + c[1])};
  const UV ca{0.5 * (c[0] + a[0]), 0.5 * (c[1] + a[1])};

  if (panel.depth < max_depth) {
    const Vec3 pa = map(a), pb = map(b), pc = map(c);
    const double diameter = std::max({(pa - pb).norm(), (pb - pc).norm(), (pc - pa).norm()});
    const UV centroid{(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
    double dist = std::min({(target - pa).norm(), (target - pb).norm(), (target - pc).norm()});
    for (const UV& q : {ab, bc, ca, centroid}) dist = std::min(dist, (target - map(q)).norm());
    if (dist < eta * diameter) {
      const int d = panel.depth + 1;
      split_recursive(SubPanel{{a, ab, ca}, d}, map, target, eta, max_depth, out);
      split_recursive(SubPanel{{ab, b, bc}, d}, map, target, eta, max_depth, out);
      split_recursive(SubPanel{{ca, bc, c}, d}, map, target, eta, max_depth, out);
      split_recursive(SubPanel{{bc, ca, ab}, d}, map, target, eta, max_depth, out);
      return;
    }
  }
  out.push_back(panel);
}

}  // namespace

std::vector<SubPanel> near_singular_split(const SubPanel& panel, const std::function<Vec3(const UV&)>& map,
                                          const Vec3& target, double eta, int max_depth) {
  if (!(eta > 0.0)) throw DomainError("near_singular_split: eta must be positive");
  std::vector<SubPanel> out;
  split_recursive(panel, map, target, eta, max_depth, out);
  return out;
}

}  // namespace helmscat
