#include "dfrc/conic/builder.hpp"

#include <cmath>

namespace dfrc::conic {

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  for (const auto& [var, coeff] : other.terms) terms.emplace_back(var, -coeff);
  constant -= other.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double scale) {
  for (auto& [var, coeff] : terms) coeff *= scale;
  constant *= scale;
  return *this;
}

CxExpr& CxExpr::operator+=(const CxExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  return *this;
}

CxExpr& CxExpr::operator*=(cxd scale) {
  for (auto& [var, coeff] : terms) coeff *= scale;
  constant *= scale;
  return *this;
}

CxExpr CxExpr::conj() const {
  CxExpr out;
  out.terms.reserve(terms.size());
  for (const auto& [var, coeff] : terms) out.terms.emplace_back(var, std::conj(coeff));
  out.constant = std::conj(constant);
  return out;
}

LinExpr CxExpr::real() const {
  LinExpr out;
  out.terms.reserve(terms.size());
  for (const auto& [var, coeff] : terms) {
    if (coeff.real() != 0.0) out.terms.emplace_back(var, coeff.real());
  }
  out.constant = constant.real();
  return out;
}

LinExpr CxExpr::imag() const {
  LinExpr out;
  out.terms.reserve(terms.size());
  for (const auto& [var, coeff] : terms) {
    if (coeff.imag() != 0.0) out.terms.emplace_back(var, coeff.imag());
  }
  out.constant = constant.imag();
  return out;
}

namespace {

// column-major strictly-lower-triangular pair index
inline int lower_pair_index(int row, int col, int dim) {
  return col * dim - col * (col + 1) / 2 + (row - col - 1);
}

inline int lower_incl_index(int row, int col, int dim) {
  return col * dim - col * (col - 1) / 2 + (row - col);
}

}  // namespace

CxExpr& HermExpr::at(int row, int col) {
  return lower_[lower_incl_index(row, col, dim_)];
}

const CxExpr& HermExpr::at(int row, int col) const {
  return lower_[lower_incl_index(row, col, dim_)];
}

CxExpr HermExpr::entry(int row, int col) const {
  if (row >= col) return at(row, col);
  return at(col, row).conj();
}

void HermExpr::add_scaled_var(const HermVar& x, double scale) {
  for (int col = 0; col < x.dim; ++col) {
    for (int row = col; row < x.dim; ++row) {
      CxExpr& e = at(row, col);
      if (row == col) {
        e.terms.emplace_back(x.offset + row, cxd(scale, 0.0));
      } else {
        const int base = x.offset + x.dim + 2 * lower_pair_index(row, col, x.dim);
        e.terms.emplace_back(base, cxd(scale, 0.0));
        e.terms.emplace_back(base + 1, cxd(0.0, scale));
      }
    }
  }
}

int ProblemBuilder::add_scalar() { return num_vars_++; }

HermVar ProblemBuilder::add_hermitian(int dim) {
  HermVar v{num_vars_, dim};
  num_vars_ += dim * dim;
  return v;
}

LinExpr ProblemBuilder::scalar(int var) const {
  LinExpr e;
  e.terms.emplace_back(var, 1.0);
  return e;
}

LinExpr ProblemBuilder::constant(double value) {
  LinExpr e;
  e.constant = value;
  return e;
}

LinExpr ProblemBuilder::quad_form(const HermVar& x, const CVec& a) const {
  LinExpr e;
  e.terms.reserve(x.dim * x.dim);
  for (int m = 0; m < x.dim; ++m) {
    e.terms.emplace_back(x.offset + m, std::norm(a[m]));
  }
  for (int col = 0; col < x.dim; ++col) {
    for (int row = col + 1; row < x.dim; ++row) {
      // conj(a_i) X_ij a_j + c.c. = 2 Re(w X_ij), w = conj(a_i) a_j
      const cxd w = std::conj(a[row]) * a[col];
      const int base = x.offset + x.dim + 2 * lower_pair_index(row, col, x.dim);
      e.terms.emplace_back(base, 2.0 * w.real());
      e.terms.emplace_back(base + 1, -2.0 * w.imag());
    }
  }
  return e;
}

CxExpr ProblemBuilder::sesq_form(const HermVar& x, const CVec& a, const CVec& b) const {
  CxExpr e;
  e.terms.reserve(x.dim * x.dim);
  for (int m = 0; m < x.dim; ++m) {
    e.terms.emplace_back(x.offset + m, std::conj(a[m]) * b[m]);
  }
  for (int col = 0; col < x.dim; ++col) {
    for (int row = col + 1; row < x.dim; ++row) {
      const cxd p = std::conj(a[row]) * b[col];  // multiplies X_{row,col}
      const cxd q = std::conj(a[col]) * b[row];  // multiplies conj(X_{row,col})
      const int base = x.offset + x.dim + 2 * lower_pair_index(row, col, x.dim);
      e.terms.emplace_back(base, p + q);
      e.terms.emplace_back(base + 1, cxd(0.0, 1.0) * (p - q));
    }
  }
  return e;
}

LinExpr ProblemBuilder::diag_entry(const HermVar& x, int m) const {
  return scalar(x.offset + m);
}

HermExpr ProblemBuilder::matrix_expr(const HermVar& x) const {
  HermExpr e(x.dim);
  e.add_scaled_var(x, 1.0);
  return e;
}

void ProblemBuilder::add_eq(const LinExpr& expr) { eq_rows_.push_back(expr); }

void ProblemBuilder::add_nonneg(const LinExpr& expr) { nonneg_rows_.push_back(expr); }

void ProblemBuilder::add_soc(const LinExpr& bound, std::vector<LinExpr> residuals) {
  std::vector<LinExpr> block;
  block.reserve(residuals.size() + 1);
  block.push_back(bound);
  for (auto& r : residuals) block.push_back(std::move(r));
  soc_blocks_.push_back(std::move(block));
}

void ProblemBuilder::add_psd(const HermExpr& expr) {
  const int p = expr.dim();
  const int side = 2 * p;
  PsdBlock block;
  block.lifted_side = side;
  block.rows.reserve(side * (side + 1) / 2);
  const double rt2 = std::sqrt(2.0);
  // Lifted symmetric matrix Y: [[Re E, -Im E], [Im E, Re E]], svec column-major lower.
  auto lifted_entry = [&](int a, int b) -> LinExpr {
    const bool a_hi = a >= p, b_hi = b >= p;
    const int i = a_hi ? a - p : a;
    const int j = b_hi ? b - p : b;
    if (a_hi == b_hi) return expr.entry(i, j).real();
    // lower triangle only sees (a_hi, !b_hi): Y[p+i][j] = Im E_ij
    return expr.entry(i, j).imag();
  };
  for (int b = 0; b < side; ++b) {
    for (int a = b; a < side; ++a) {
      LinExpr row = lifted_entry(a, b);
      if (a != b) row *= rt2;
      block.rows.push_back(std::move(row));
    }
  }
  psd_blocks_.push_back(std::move(block));
}

void ProblemBuilder::minimize(int scalar_var) { objective_var_ = scalar_var; }

ConicProblem ProblemBuilder::build() const {
  ConicProblem prob;
  prob.num_vars = num_vars_;
  prob.cost = Vec::Zero(num_vars_);
  if (objective_var_ >= 0) prob.cost[objective_var_] = 1.0;

  int rows = static_cast<int>(eq_rows_.size() + nonneg_rows_.size());
  for (const auto& blk : soc_blocks_) rows += static_cast<int>(blk.size());
  for (const auto& blk : psd_blocks_) rows += static_cast<int>(blk.rows.size());

  prob.b = Vec::Zero(rows);
  std::vector<Eigen::Triplet<double>> trips;

  int r = 0;
  // Row encodes s_r = expr:  A_r = -coeffs, b_r = constant.
  auto emit = [&](const LinExpr& e) {
    for (const auto& [var, coeff] : e.terms) {
      if (coeff != 0.0) trips.emplace_back(r, var, -coeff);
    }
    prob.b[r] = e.constant;
    ++r;
  };

  if (!eq_rows_.empty()) {
    prob.cones.push_back({ConeKind::Zero, static_cast<int>(eq_rows_.size()), 0});
    for (const auto& e : eq_rows_) emit(e);
  }
  if (!nonneg_rows_.empty()) {
    prob.cones.push_back({ConeKind::NonNeg, static_cast<int>(nonneg_rows_.size()), 0});
    for (const auto& e : nonneg_rows_) emit(e);
  }
  for (const auto& blk : soc_blocks_) {
    prob.cones.push_back({ConeKind::Soc, static_cast<int>(blk.size()), 0});
    for (const auto& e : blk) emit(e);
  }
  for (const auto& blk : psd_blocks_) {
    prob.cones.push_back({ConeKind::Psd, static_cast<int>(blk.rows.size()), blk.lifted_side});
    for (const auto& e : blk.rows) emit(e);
  }

  prob.A.resize(rows, num_vars_);
  prob.A.setFromTriplets(trips.begin(), trips.end());
  return prob;
}

CMat ProblemBuilder::value(const ConicSolution& sol, const HermVar& x) const {
  return param_to_hermitian(sol.x.segment(x.offset, x.dim * x.dim), x.dim);
}

double ProblemBuilder::value(const ConicSolution& sol, int scalar_var) const {
  return sol.x[scalar_var];
}

Vec hermitian_to_param(const CMat& a) {
  const int dim = static_cast<int>(a.rows());
  Vec p(dim * dim);
  for (int m = 0; m < dim; ++m) p[m] = a(m, m).real();
  for (int col = 0; col < dim; ++col) {
    for (int row = col + 1; row < dim; ++row) {
      const int base = dim + 2 * lower_pair_index(row, col, dim);
      p[base] = a(row, col).real();
      p[base + 1] = a(row, col).imag();
    }
  }
  return p;
}

CMat param_to_hermitian(const Vec& p, int dim) {
  CMat a(dim, dim);
  for (int m = 0; m < dim; ++m) a(m, m) = p[m];
  for (int col = 0; col < dim; ++col) {
    for (int row = col + 1; row < dim; ++row) {
      const int base = dim + 2 * lower_pair_index(row, col, dim);
      a(row, col) = cxd(p[base], p[base + 1]);
      a(col, row) = std::conj(a(row, col));
    }
  }
  return a;
}

Mat hermitian_lift(const CMat& a) {
  const int p = static_cast<int>(a.rows());
  Mat y(2 * p, 2 * p);
  y.topLeftCorner(p, p) = a.real();
  y.bottomRightCorner(p, p) = a.real();
  y.topRightCorner(p, p) = -a.imag();
  y.bottomLeftCorner(p, p) = a.imag();
  return y;
}

}  // namespace dfrc::conic
