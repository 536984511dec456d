#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "dfrc/conic/problem.hpp"
#include "dfrc/types.hpp"

namespace dfrc::conic {

/// Handle to a complex Hermitian matrix variable, internally parametrized by
/// dim^2 real scalars: the dim real diagonal entries first, then (re, im)
/// pairs for the strictly-lower-triangular entries in column-major order.
struct HermVar {
  int offset = -1;
  int dim = 0;
};

/// Real-valued affine expression over the builder's scalar parametrization.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double scale);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { a += b; return a; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { a -= b; return a; }
  friend LinExpr operator*(double s, LinExpr a) { a *= s; return a; }
};

/// Complex-valued affine expression over real scalars.
struct CxExpr {
  std::vector<std::pair<int, cxd>> terms;
  cxd constant = 0.0;

  CxExpr& operator+=(const CxExpr& other);
  CxExpr& operator*=(cxd scale);
  CxExpr conj() const;
  LinExpr real() const;
  LinExpr imag() const;
};

/// Affine Hermitian-matrix-valued expression; stores the lower triangle.
class HermExpr {
 public:
  explicit HermExpr(int dim) : dim_(dim), lower_(dim * (dim + 1) / 2) {}

  int dim() const { return dim_; }
  CxExpr& at(int row, int col);              // requires row >= col
  const CxExpr& at(int row, int col) const;  // requires row >= col
  CxExpr entry(int row, int col) const;      // any (row, col), conjugates as needed

  /// this += scale * X  over the top-left block starting at (0, 0).
  void add_scaled_var(const HermVar& x, double scale);

 private:
  int dim_;
  std::vector<CxExpr> lower_;
};

class ProblemBuilder {
 public:
  int add_scalar();
  HermVar add_hermitian(int dim);

  LinExpr scalar(int var) const;
  static LinExpr constant(double value);

  /// a^H X a, real by Hermitian symmetry.
  LinExpr quad_form(const HermVar& x, const CVec& a) const;
  /// a^H X b.
  CxExpr sesq_form(const HermVar& x, const CVec& a, const CVec& b) const;
  LinExpr diag_entry(const HermVar& x, int m) const;
  /// Hermitian expression equal to the variable itself.
  HermExpr matrix_expr(const HermVar& x) const;

  void add_eq(const LinExpr& expr);          // expr == 0
  void add_nonneg(const LinExpr& expr);      // expr >= 0
  void add_soc(const LinExpr& bound, std::vector<LinExpr> residuals);  // ||residuals|| <= bound
  void add_psd(const HermExpr& expr);        // complex-to-real lift, then PSD cone

  void minimize(int scalar_var);

  ConicProblem build() const;

  int num_vars() const { return num_vars_; }

  /// Extract a Hermitian matrix variable from a solution vector.
  CMat value(const ConicSolution& sol, const HermVar& x) const;
  double value(const ConicSolution& sol, int scalar_var) const;

 private:
  int num_vars_ = 0;
  int objective_var_ = -1;
  std::vector<LinExpr> eq_rows_;
  std::vector<LinExpr> nonneg_rows_;
  std::vector<std::vector<LinExpr>> soc_blocks_;
  struct PsdBlock {
    int lifted_side;
    std::vector<LinExpr> rows;  // svec order, sqrt(2) scaling applied
  };
  std::vector<PsdBlock> psd_blocks_;
};

/// Bijection between Hermitian matrices and their real parametrization
/// (shared with HermVar layout). Documented contract of the backend.
Vec hermitian_to_param(const CMat& a);
CMat param_to_hermitian(const Vec& p, int dim);

/// Standard [[Re, -Im], [Im, Re]] symmetric embedding of a Hermitian matrix.
Mat hermitian_lift(const CMat& a);

}  // namespace dfrc::conic
