#pragma once

#include <vector>

#include "helmscat/geometry.hpp"
#include "helmscat/kernels.hpp"
#include "helmscat/kernels_batch.hpp"
#include "helmscat/operators.hpp"
#include "helmscat/samples.hpp"

namespace helmscat {

struct EvalOptions {
  double eta = kNearSplitEta;
  int max_depth = kNearSplitMaxDepth;
  int threads = 0;
};

/// u(x) = w[dl](x) + v[sl](x) with panel-constant densities, evaluated off the
/// surface. Panels close to x are subdivided; the rest are summed with the
/// batched kernels over contiguous node ranges.
class LayerPotential {
 public:
  LayerPotential(const DeformedSurface& surface, const WaveNumber& k, const Eigen::VectorXcd& dl,
                 const Eigen::VectorXcd& sl, EvalOptions opts = {});

  simd::PotentialValue evaluate(const Vec3& x, bool with_gradient) const;

  const DeformedSurface& surface() const { return surface_; }

 private:
  const DeformedSurface& surface_;
  WaveNumber k_;
  Eigen::VectorXcd dl_, sl_;
  EvalOptions opts_;
  std::vector<double> dc_re_, dc_im_, sc_re_, sc_im_;
};

/// The field representation u = w[theta] + (1 - i Re k) v[theta].
LayerPotential solution_potential(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                  EvalOptions opts = {});

struct Clearance {
  double distance = 0.0;
  std::size_t nearest_panel = 0;
};

/// Distance from x to the nearest surface sample (quadrature nodes and collocation points).
Clearance surface_clearance(const DeformedSurface& surface, const Vec3& x);

/// Laplace double layer of the unit density: ~1 inside, ~0 outside.
double interior_indicator(const DeformedSurface& surface, const Vec3& x);

/// Exterior evaluation points with their minimum clearance.
struct EvaluationSet {
  std::vector<Vec3> points;
  double clearance = 0.0;
};

inline constexpr double kMinClearanceRatio = 0.5;

/// Checks every point: DomainError if inside or on the obstacle, or closer than
/// kMinClearanceRatio times the diameter of the nearest panel.
EvaluationSet make_evaluation_set(const DeformedSurface& surface, std::vector<Vec3> points);

std::vector<Complex> eval_solution(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                   const EvaluationSet& points, EvalOptions opts = {});
std::vector<CVec3> eval_gradient(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                 const EvaluationSet& points, EvalOptions opts = {});

// ---------------------------------------------------------------------------
// Boundary traces from offsets
// ---------------------------------------------------------------------------

enum class TraceSide { exterior, interior };
enum class TraceQuantity { value, normal_derivative };

struct OffsetTrace {
  BoundaryField trace;
  std::vector<bool> flagged;  // successive extrapolation differences grew
  std::size_t flagged_count() const;
};

/// Samples `quantity` of the potential at x_i +- eps_m nu_i, eps_m = h_i 2^-m
/// (m = 0, 1, 2; h_i the panel diameter) and extrapolates to eps -> 0.
OffsetTrace offset_trace(const LayerPotential& potential, TraceSide side, TraceQuantity quantity,
                         int threads = 0);

/// Exterior normal derivative of the double layer potential of mu.
OffsetTrace normal_derivative_double_layer(const DeformedSurface& surface, const WaveNumber& k,
                                           const BoundaryField& mu, EvalOptions opts = {});

enum class TraceMethod { paper_formula, direct };

const char* trace_method_name(TraceMethod m);
TraceMethod parse_trace_method(const std::string& text);

struct NeumannOptions {
  EvalOptions eval;
  DirectFluxOptions direct;
};

/// Neumann trace of the exterior solution.
///   paper_formula: d/dnu w[theta] + (1 - i Re k)(theta/2 + W* theta), theta the density
///   direct:        V psi = (1/2 I + W) g
/// `ops` may carry preassembled operators for the surface and k.
BoundaryField neumann_trace(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                            const BoundaryField& g, TraceMethod method, const LayerOperators* ops = nullptr,
                            const NeumannOptions& opts = {});

/// Dirichlet-to-Neumann map by the direct route.
BoundaryField dtn_apply(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& g,
                        const LayerOperators* ops = nullptr, const NeumannOptions& opts = {});

/// Dense DtN matrix, built column by column from the unit fields.
Eigen::MatrixXcd dtn_matrix(const DeformedSurface& surface, const WaveNumber& k, const LayerOperators* ops = nullptr,
                            const NeumannOptions& opts = {});

// ---------------------------------------------------------------------------
// Far field
// ---------------------------------------------------------------------------

/// Quasi-uniform unit directions on a Fibonacci spiral.
std::vector<Vec3> fibonacci_directions(std::size_t n);

FarFieldGrid far_field_direct(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                              const std::vector<Vec3>& directions, int threads = 0);

struct SphereFormulaOptions {
  int grid_level = -1;  // -1: max(3, surface level)
  EvalOptions eval;
};

/// u_inf(x) = 1/(4 pi) int_{|y|=R} (u d/dnu e^{-ik x.y} - e^{-ik x.y} du/dnu) dsigma_y,
/// with u and du/dnu evaluated from the representation. DomainError unless
/// R > max |y| over the surface + one panel diameter.
FarFieldGrid far_field_sphere_formula(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                      double R, const std::vector<Vec3>& directions,
                                      const SphereFormulaOptions& opts = {});

/// Smallest admissible R for far_field_sphere_formula.
double min_sphere_radius(const DeformedSurface& surface);

/// |x| |du/dr - ik u| at x = r * direction for each r.
std::vector<double> radiation_check(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& theta,
                                    const Vec3& direction, const std::vector<double>& radii, EvalOptions opts = {});

}  // namespace helmscat
