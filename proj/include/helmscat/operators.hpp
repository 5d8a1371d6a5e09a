#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "helmscat/geometry.hpp"
#include "helmscat/kernels.hpp"
#include "helmscat/quadrature.hpp"
#include "helmscat/samples.hpp"

namespace helmscat {

enum class OperatorKind : std::uint8_t { V = 0, W = 1, Wstar = 2, Lambda = 3, custom = 4 };

const char* operator_kind_name(OperatorKind kind);

struct DenseOperator {
  Eigen::MatrixXcd matrix;
  OperatorKind kind = OperatorKind::custom;
  WaveNumber k;
  std::string surface_hash;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Quadrature and scheduling knobs for assembly.
struct AssemblyOptions {
  int threads = 0;              // 0: default_thread_count()
  double eta = kNearSplitEta;   // near-field admissibility
  int max_depth = kNearSplitMaxDepth;
  int self_order = 8;           // Duffy order for the self panel
  int remainder_order = 6;      // regular rule for smooth self-panel remainders
  bool reverse_summation = false;  // sum panel contributions in reverse node order
};

struct LayerOperators {
  DenseOperator V, W, Wstar;
};

/// Assembles V, W and W* in one pass over the rows.
///   V_ij  ~ int_{panel j} S(k, x_i - y) dsigma_y
///   W_ij  ~ int_{panel j} -nu_y . grad S(k, x_i - y) dsigma_y
///   W*_ij ~ int_{panel j}  nu_x . grad S(k, x_i - y) dsigma_y
/// The self panel uses the Laplace split (Duffy for the singular part, a
/// regular rule for the remainder); nearby panels are subdivided.
LayerOperators assemble_layer_operators(const DeformedSurface& surface, const WaveNumber& k,
                                        const AssemblyOptions& opts = {});

DenseOperator assemble_V(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts = {});
DenseOperator assemble_W(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts = {});
DenseOperator assemble_Wstar(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts = {});

/// -1/2 I + W + (1 - i Re k) V.
DenseOperator combine_lambda(const DenseOperator& V, const DenseOperator& W);
DenseOperator assemble_lambda(const DeformedSurface& surface, const WaveNumber& k, const AssemblyOptions& opts = {});

struct SolveDiagnostics {
  double relative_residual = 0.0;
  double condition_estimate = 0.0;  // one-norm estimate from the LU factors
};

/// LU factorization with partial pivoting, reusable across right-hand sides.
class DenseSolver {
 public:
  explicit DenseSolver(const DenseOperator& op);

  /// Solves and checks the residual; throws SolverError above `max_residual`.
  BoundaryField solve(const BoundaryField& rhs, SolveDiagnostics* diag = nullptr,
                      double max_residual = kMaxRelativeResidual) const;

  double condition_estimate() const { return condition_; }
  const DenseOperator& op() const { return *op_; }

  static constexpr double kMaxRelativeResidual = 1e-8;

 private:
  const DenseOperator* op_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double condition_ = 0.0;
};

struct DensitySolution {
  BoundaryField theta;
  SolveDiagnostics diagnostics;
};

DensitySolution solve_density(const DenseOperator& lambda, const BoundaryField& g);

struct DirectFluxOptions {
  bool force = false;
  double max_condition = 1e10;
  AssemblyOptions assembly;
};

struct DirectFluxResult {
  BoundaryField psi;
  SolveDiagnostics diagnostics;
};

/// Neumann trace by the direct method: V psi = (1/2 I + W) g. Refuses with
/// SolverError when the condition estimate of V exceeds max_condition unless forced.
DirectFluxResult direct_flux_solve(const DeformedSurface& surface, const WaveNumber& k, const BoundaryField& g,
                                   const DirectFluxOptions& opts = {});
/// Same, reusing assembled V and W.
DirectFluxResult direct_flux_solve(const DenseOperator& V, const DenseOperator& W, const BoundaryField& g,
                                   const DirectFluxOptions& opts = {});

/// HSOP1 binary dump: magic "HSOP1", N (u64), kind (u8), Re k, Im k (f64),
/// then N*N row-major (re, im) f64 pairs; all little-endian.
void write_hsop(std::ostream& os, const DenseOperator& op);
DenseOperator read_hsop(std::istream& is);

}  // namespace helmscat
