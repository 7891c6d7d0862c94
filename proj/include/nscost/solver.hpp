#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nscost/conic.hpp"

namespace nscost {

enum class SolveStatus { optimal, near_optimal, infeasible, iteration_limit, numerical_failure };

std::string to_string(SolveStatus s);
// optimal or near_optimal
bool usable(SolveStatus s);

struct SolverConfig {
  int max_iters = 200;
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  double step_fraction = 0.98;
  bool verbose = false;

  // Defaults overridden by NSCOST_TOL_GAP / NSCOST_MAX_ITERS when set.
  static SolverConfig from_env();
  // Throws std::invalid_argument unless tolerances are positive and the step
  // fraction lies in (0, 1).
  void validate() const;
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;             // complementarity <s, z>
  double primal_residual = 0.0; // max-norm, equalities and PSD slack definitions
  double dual_residual = 0.0;
  int iterations = 0;
  double solve_ms = 0.0;
  std::string backend;

  // Primal values: Hermitian variables as matrices, scalars as 1x1.
  std::map<std::string, ComplexMatrix> primal_solution;
  // Dual multipliers: one Hermitian matrix per PSD constraint and per
  // equality constraint, keyed by constraint name (suffixed on collision).
  std::map<std::string, ComplexMatrix> dual_solution;

  const ComplexMatrix& value(const std::string& var) const;
  double scalar(const std::string& var) const { return value(var)(0, 0).real(); }
};

// Residual check of a primal assignment against the original problem.
struct FeasibilityCheck {
  double max_equality_residual = 0.0;
  double min_psd_eigenvalue = 0.0;
  double objective = 0.0;
};
FeasibilityCheck check_primal(const ConicProblem& problem,
                              const std::map<std::string, ComplexMatrix>& values);

// Backend seam.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual std::string name() const = 0;
  virtual SolveReport solve(const ConicProblem& problem, const SolverConfig& config) const = 0;
};

// Reference interior-point method on the real symmetric embedding.
class InteriorPointSolver final : public ConicSolver {
 public:
  std::string name() const override { return "ipm-real"; }
  SolveReport solve(const ConicProblem& problem, const SolverConfig& config) const override;
};

// Same algorithm run directly on the Hermitian blocks; used to cross-check the
// real embedding.
class ComplexInteriorPointSolver final : public ConicSolver {
 public:
  std::string name() const override { return "ipm-complex"; }
  SolveReport solve(const ConicProblem& problem, const SolverConfig& config) const override;
};

const ConicSolver& default_solver();
SolveReport solve(const ConicProblem& problem, const SolverConfig& config = SolverConfig::from_env());

// Raw result on a compiled form; x indexes the form's parameters.
template <class Scalar>
struct ConicSolution {
  using Matrix = typename ConicForm<Scalar>::Matrix;
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd x, y;
  std::vector<Matrix> s, z;
  double primal_value = 0.0, dual_value = 0.0, gap = 0.0;
  double primal_residual = 0.0, dual_residual = 0.0;
  int iterations = 0;
};

template <class Scalar>
ConicSolution<Scalar> solve_conic_form(const ConicForm<Scalar>& form, const SolverConfig& config);

}  // namespace nscost
