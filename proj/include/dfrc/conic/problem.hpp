#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace dfrc::conic {

enum class ConeKind { Zero, NonNeg, Soc, Psd };

struct ConeSpec {
  ConeKind kind;
  int dim;       // number of rows occupied in (A, b)
  int side = 0;  // matrix side for Psd cones (dim = side*(side+1)/2)
};

/// Standard-form cone program:  minimize c'x  s.t.  A x + s = b,  s in K,
/// where K is the product of the listed cones in row order. Zero cones encode
/// linear equalities, NonNeg linear inequalities, Soc the quadratic objective
/// epigraph, Psd the (real symmetric, svec-packed) semidefinite blocks.
struct ConicProblem {
  int num_vars = 0;
  Eigen::VectorXd cost;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeSpec> cones;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalLimit };

struct SolverSettings {
  double tol_feas = 1e-7;
  double tol_gap = 1e-7;
  double tol_infeas = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalLimit;
  Eigen::VectorXd x;  // primal variables (valid when Optimal)
  Eigen::VectorXd s;  // primal slacks
  Eigen::VectorXd z;  // dual variables
  double objective = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

std::string to_string(SolveStatus status);

/// Text dump of variables, cones and affine rows for offline cross-checking.
std::string dump_problem(const ConicProblem& problem);

}  // namespace dfrc::conic
