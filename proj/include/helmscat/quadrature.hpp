#pragma once

#include <array>
#include <functional>
#include <vector>

#include "helmscat/common.hpp"

namespace helmscat {

using UV = std::array<double, 2>;

/// Quadrature rule on the reference triangle {(0,0), (1,0), (0,1)}.
/// A point (u, v) has barycentric coordinates (1-u-v, u, v); weights sum to 1/2.
struct PanelRule {
  std::vector<UV> points;
  std::vector<double> weights;
  int degree = 0;  // polynomial exactness; 0 for non-polynomial (Duffy) rules

  std::size_t size() const { return weights.size(); }
};

/// Symmetric Gauss rules: order 1 (degree 1), 3 (2), 6 (4), 12 (6).
PanelRule regular_rule(int order);

/// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n);

/// Duffy rule for integrands with a 1/r singularity at `singular_point`.
/// The triangle is fanned into three sub-triangles from that point and each
/// is mapped from the unit square by the collapsing (Duffy) map, with an
/// order x order Gauss-Legendre product rule. Requires order >= 4.
PanelRule duffy_self_rule(int order, UV singular_point = {1.0 / 3.0, 1.0 / 3.0});

/// Triangle in the (u, v) parameter domain.
struct SubPanel {
  std::array<UV, 3> corners;
  int depth = 0;

  double area() const;
  UV point(double s, double t) const;  // corners[0] + s(c1-c0) + t(c2-c0)
};

/// Maps a rule onto a sub-triangle; weights are scaled to the sub-triangle area.
PanelRule map_rule(const PanelRule& rule, const SubPanel& sub);

inline constexpr double kNearSplitEta = 2.0;
inline constexpr int kNearSplitMaxDepth = 4;

/// Recursively quadrisects `panel` (in parameter space, mapped to physical
/// space by `map`) until distance(target, sub-panel) >= eta * diameter or
/// max_depth is reached. The returned sub-panels tile the input exactly.
std::vector<SubPanel> near_singular_split(const SubPanel& panel,
                                          const std::function<Vec3(const UV&)>& map,
                                          const Vec3& target, double eta = kNearSplitEta,
                                          int max_depth = kNearSplitMaxDepth);

}  // namespace helmscat
