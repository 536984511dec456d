#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <sstream>

#include "dfrc/conic/problem.hpp"

// Primal-dual interior-point method with Nesterov-Todd scaling on the
// homogeneous self-dual embedding, after the conelp scheme of Vandenberghe's
// coneprog notes and the ECOS solver. Supports zero (equality), nonnegative,
// second-order and PSD (svec-packed) cones. Problem sizes here are small
// (matrix variables of side <= ~22, a few thousand rows), so all blocks are
// kept dense.

namespace dfrc::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

int svec_dim(int side) { return side * (side + 1) / 2; }

MatrixXd svec_to_mat(const Eigen::Ref<const VectorXd>& v, int p) {
  MatrixXd x(p, p);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int b = 0; b < p; ++b) {
    for (int a = b; a < p; ++a, ++k) {
      if (a == b) {
        x(a, b) = v[k];
      } else {
        x(a, b) = v[k] * inv_rt2;
        x(b, a) = x(a, b);
      }
    }
  }
  return x;
}

VectorXd mat_to_svec(const MatrixXd& x) {
  const int p = static_cast<int>(x.rows());
  VectorXd v(svec_dim(p));
  const double rt2 = std::sqrt(2.0);
  int k = 0;
  for (int b = 0; b < p; ++b) {
    for (int a = b; a < p; ++a, ++k) {
      v[k] = (a == b) ? x(a, b) : rt2 * 0.5 * (x(a, b) + x(b, a));
    }
  }
  return v;
}

struct SocBlock { int start = 0; int dim = 0; };
struct PsdBlock { int start = 0; int dim = 0; int side = 0; };

struct Layout {
  int m = 0;
  int zero_start = 0, zero_dim = 0;
  int nn_start = 0, nn_dim = 0;
  std::vector<SocBlock> socs;
  std::vector<PsdBlock> psds;
  double degree = 0;  // barrier degree (excludes zero cone)
};

Layout make_layout(const ConicProblem& prob) {
  Layout lay;
  int row = 0;
  for (const ConeSpec& cone : prob.cones) {
    switch (cone.kind) {
      case ConeKind::Zero:
        lay.zero_start = row;
        lay.zero_dim += cone.dim;
        break;
      case ConeKind::NonNeg:
        lay.nn_start = row;
        lay.nn_dim += cone.dim;
        lay.degree += cone.dim;
        break;
      case ConeKind::Soc:
        lay.socs.push_back({row, cone.dim});
        lay.degree += 1;
        break;
      case ConeKind::Psd:
        lay.psds.push_back({row, cone.dim, cone.side});
        lay.degree += cone.side;
        break;
    }
    row += cone.dim;
  }
  lay.m = row;
  return lay;
}

// Nesterov-Todd scaling state, refreshed every iteration.
struct SocScaling {
  double beta2 = 1.0;
  VectorXd u, v;  // v = J u
};

struct PsdScaling {
  MatrixXd t, tinv;
  MatrixXd h;     // dense svec-space scaling, column k = svec(T E_k T)
  MatrixXd hinv;  // dense svec-space inverse scaling
};

class HsdeSolver {
 public:
  HsdeSolver(const ConicProblem& prob, const SolverSettings& settings)
      : prob_(prob), set_(settings), lay_(make_layout(prob)), n_(prob.num_vars) {
    ad_ = MatrixXd(prob.A);
    a_eq_ = ad_.middleRows(lay_.zero_start, lay_.zero_dim);
    a_nn_ = ad_.middleRows(lay_.nn_start, lay_.nn_dim);
    for (const auto& blk : lay_.socs) {
      a_soc_.push_back(ad_.middleRows(blk.start, blk.dim));
      // A' J A with J = diag(1, -1, ..., -1), constant across iterations
      const MatrixXd& ab = a_soc_.back();
      soc_gram_.push_back(ab.row(0).transpose() * ab.row(0) -
                          ab.bottomRows(blk.dim - 1).transpose() * ab.bottomRows(blk.dim - 1));
    }
    for (const auto& blk : lay_.psds) a_psd_.push_back(ad_.middleRows(blk.start, blk.dim));
  }

  ConicSolution run();

 private:
  void set_identity(VectorXd& vec) const;
  void compute_scalings(const VectorXd& s, const VectorXd& z);
  VectorXd apply_h(const VectorXd& dz) const;
  VectorXd cone_inverse(const VectorXd& z) const;
  // kkt modes: 0 = Schur-eliminated (fast), 1 = bordered augmented,
  // 2 = bordered augmented factored in extended precision (endgame).
  void factor_kkt(int mode);
  void kkt_solve(const VectorXd& g1, const VectorXd& g2, VectorXd& dx, VectorXd& dz) const;
  void solve_reduced(const VectorXd& g1, const VectorXd& g2, VectorXd& dx, VectorXd& dz) const;
  VectorXd apply_hinv(const VectorXd& r) const;
  double max_step(const VectorXd& p, const VectorXd& dp) const;

  const ConicProblem& prob_;
  SolverSettings set_;
  Layout lay_;
  int n_;

  MatrixXd ad_, a_eq_, a_nn_;
  std::vector<MatrixXd> a_soc_, a_psd_;
  std::vector<MatrixXd> soc_gram_;

  VectorXd nn_hinv_, nn_h_;
  std::vector<SocScaling> soc_scale_;
  std::vector<PsdScaling> psd_scale_;
  Eigen::PartialPivLU<MatrixXd> kkt_lu_;
  MatrixXd kkt_;
  using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Eigen::PartialPivLU<MatrixXld> kkt_lu_ld_;
  int kkt_mode_ = 0;
  std::vector<int> psd_off_;        // PSD dual block offsets within the bordered KKT
};

void HsdeSolver::set_identity(VectorXd& vec) const {
  vec = VectorXd::Zero(lay_.m);
  vec.segment(lay_.nn_start, lay_.nn_dim).setOnes();
  for (const auto& blk : lay_.socs) vec[blk.start] = 1.0;
  for (const auto& blk : lay_.psds) {
    int k = blk.start;
    for (int b = 0; b < blk.side; ++b) {
      vec[k] = 1.0;
      k += blk.side - b;
    }
  }
}

void HsdeSolver::compute_scalings(const VectorXd& s, const VectorXd& z) {
  nn_h_ = s.segment(lay_.nn_start, lay_.nn_dim).array() /
          z.segment(lay_.nn_start, lay_.nn_dim).array();
  nn_hinv_ = nn_h_.cwiseInverse();

  soc_scale_.assign(lay_.socs.size(), {});
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    const auto& blk = lay_.socs[i];
    auto sb = s.segment(blk.start, blk.dim);
    auto zb = z.segment(blk.start, blk.dim);
    const double s_res = sb[0] * sb[0] - sb.tail(blk.dim - 1).squaredNorm();
    const double z_res = zb[0] * zb[0] - zb.tail(blk.dim - 1).squaredNorm();
    SocScaling sc;
    sc.beta2 = std::sqrt(s_res / z_res);
    VectorXd s_bar = sb / std::sqrt(s_res);
    VectorXd z_bar = zb / std::sqrt(z_res);
    VectorXd jz = z_bar;
    jz.tail(blk.dim - 1) *= -1.0;
    const double gamma = std::sqrt((1.0 + s_bar.dot(z_bar)) / 2.0);
    sc.u = (s_bar + jz) / (2.0 * gamma);
    sc.v = sc.u;
    sc.v.tail(blk.dim - 1) *= -1.0;
    soc_scale_[i] = std::move(sc);
  }

  psd_scale_.assign(lay_.psds.size(), {});
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const auto& blk = lay_.psds[i];
    MatrixXd smat = svec_to_mat(s.segment(blk.start, blk.dim), blk.side);
    MatrixXd zmat = svec_to_mat(z.segment(blk.start, blk.dim), blk.side);
    Eigen::LLT<MatrixXd> llt(smat);
    if (llt.info() != Eigen::Success) {
      smat += 1e-14 * smat.trace() * MatrixXd::Identity(blk.side, blk.side);
      llt.compute(smat);
    }
    MatrixXd ls = llt.matrixL();
    MatrixXd m1 = ls.transpose() * zmat * ls;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m1);
    VectorXd d = eig.eigenvalues().cwiseMax(1e-300);
    const MatrixXd& u = eig.eigenvectors();
    PsdScaling sc;
    sc.t = ls * u * d.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose() * ls.transpose();
    MatrixXd ls_inv = ls.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(blk.side, blk.side));
    sc.tinv = ls_inv.transpose() * u * d.cwiseSqrt().asDiagonal() * u.transpose() * ls_inv;
    // dense H / Hinv: column k = svec(T E_k T), svec(Tinv E_k Tinv)
    const int sd = blk.dim;
    sc.h.resize(sd, sd);
    sc.hinv.resize(sd, sd);
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    int k = 0;
    for (int b = 0; b < blk.side; ++b) {
      for (int a = b; a < blk.side; ++a, ++k) {
        MatrixXd col, icol;
        if (a == b) {
          col = sc.t.col(a) * sc.t.row(a);
          icol = sc.tinv.col(a) * sc.tinv.row(a);
        } else {
          col = inv_rt2 * (sc.t.col(a) * sc.t.row(b) + sc.t.col(b) * sc.t.row(a));
          icol = inv_rt2 * (sc.tinv.col(a) * sc.tinv.row(b) + sc.tinv.col(b) * sc.tinv.row(a));
        }
        sc.h.col(k) = mat_to_svec(col);
        sc.hinv.col(k) = mat_to_svec(icol);
      }
    }
    sc.h = 0.5 * (sc.h + sc.h.transpose()).eval();
    sc.hinv = 0.5 * (sc.hinv + sc.hinv.transpose()).eval();
    psd_scale_[i] = std::move(sc);
  }
}

// H = W'W applied blockwise; zero-cone block maps to zero.
VectorXd HsdeSolver::apply_h(const VectorXd& dz) const {
  VectorXd out = VectorXd::Zero(lay_.m);
  out.segment(lay_.nn_start, lay_.nn_dim) =
      nn_h_.cwiseProduct(dz.segment(lay_.nn_start, lay_.nn_dim));
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    const auto& blk = lay_.socs[i];
    const auto& sc = soc_scale_[i];
    auto d = dz.segment(blk.start, blk.dim);
    // H d = beta (2 (u'd) u - J d)
    VectorXd jd = d;
    jd.tail(blk.dim - 1) *= -1.0;
    out.segment(blk.start, blk.dim) = sc.beta2 * (2.0 * sc.u.dot(d) * sc.u - jd);
  }
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const auto& blk = lay_.psds[i];
    out.segment(blk.start, blk.dim) = psd_scale_[i].h * dz.segment(blk.start, blk.dim);
  }
  return out;
}

VectorXd HsdeSolver::cone_inverse(const VectorXd& z) const {
  VectorXd out = VectorXd::Zero(lay_.m);
  out.segment(lay_.nn_start, lay_.nn_dim) =
      z.segment(lay_.nn_start, lay_.nn_dim).cwiseInverse();
  for (const auto& blk : lay_.socs) {
    auto zb = z.segment(blk.start, blk.dim);
    const double res = zb[0] * zb[0] - zb.tail(blk.dim - 1).squaredNorm();
    VectorXd jz = zb;
    jz.tail(blk.dim - 1) *= -1.0;
    out.segment(blk.start, blk.dim) = jz / res;
  }
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const auto& blk = lay_.psds[i];
    MatrixXd zm = svec_to_mat(z.segment(blk.start, blk.dim), blk.side);
    out.segment(blk.start, blk.dim) = mat_to_svec(zm.inverse());
  }
  return out;
}

void HsdeSolver::factor_kkt(int mode) {
  const int me = lay_.zero_dim;
  kkt_mode_ = mode;

  if (mode == 0) {
    // Schur-eliminated form: all cone dual blocks folded into M11.
    MatrixXd m11 = MatrixXd::Zero(n_, n_);
    if (lay_.nn_dim > 0) m11 += a_nn_.transpose() * nn_hinv_.asDiagonal() * a_nn_;
    for (size_t i = 0; i < lay_.socs.size(); ++i) {
      const auto& sc = soc_scale_[i];
      // A' Hinv A = (1/beta) (2 (A'v)(A'v)' - A'JA)
      VectorXd av = a_soc_[i].transpose() * sc.v;
      m11 += (1.0 / sc.beta2) * (2.0 * av * av.transpose() - soc_gram_[i]);
    }
    for (size_t i = 0; i < lay_.psds.size(); ++i) {
      // A' Hinv A = (L'A)'(L'A) with Hinv = LL'; the triangular product plus
      // a symmetric rank update costs about half of the dense form. Hinv is
      // SPD by construction, but fall back to the dense product if rounding
      // near the cone boundary defeats the factorization.
      Eigen::LLT<MatrixXd> llt(psd_scale_[i].hinv);
      if (llt.info() == Eigen::Success) {
        const MatrixXd b = llt.matrixU() * a_psd_[i];
        m11.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose());
      } else {
        m11 += a_psd_[i].transpose() * (psd_scale_[i].hinv * a_psd_[i]);
      }
    }
    m11 = m11.selfadjointView<Eigen::Lower>();

    kkt_.resize(n_ + me, n_ + me);
    kkt_.topLeftCorner(n_, n_) = m11;
    if (me > 0) {
      kkt_.topRightCorner(n_, me) = a_eq_.transpose();
      kkt_.bottomLeftCorner(me, n_) = a_eq_;
      kkt_.bottomRightCorner(me, me).setZero();
    }
    const double reg = 1e-11 * (1.0 + m11.diagonal().cwiseAbs().maxCoeff());
    kkt_.topLeftCorner(n_, n_).diagonal().array() += reg;
    kkt_.bottomRightCorner(me, me).diagonal().array() -= reg;
    kkt_lu_.compute(kkt_);
    return;
  }

  // Bordered augmented form. Folding a near-boundary scaling block into M11
  // squares its condition number, which caps the attainable direction accuracy;
  // instead the PSD dual blocks stay explicit with -H on the diagonal, and
  // each nonnegative row / SOC rank-one Schur term q q' becomes a border
  // column q with a -1 diagonal, so pivoting absorbs the ill-conditioning.
  int total_psd = 0;
  psd_off_.assign(lay_.psds.size(), 0);
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    psd_off_[i] = n_ + me + total_psd;
    total_psd += lay_.psds[i].dim;
  }
  const int nsoc = static_cast<int>(lay_.socs.size());
  const int nb = lay_.nn_dim + nsoc;
  const int big = n_ + me + total_psd + nb;

  kkt_.setZero(big, big);
  // Constant SOC part of M11: -(1/beta) A'JA (formed exactly from the cached
  // Gram; the mu-dependent rank-one remainder lives in the border).
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    kkt_.topLeftCorner(n_, n_) -= (1.0 / soc_scale_[i].beta2) * soc_gram_[i];
  }
  if (me > 0) {
    kkt_.block(0, n_, n_, me) = a_eq_.transpose();
    kkt_.block(n_, 0, me, n_) = a_eq_;
  }
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const int off = psd_off_[i];
    const int sd = lay_.psds[i].dim;
    kkt_.block(off, 0, sd, n_) = a_psd_[i];
    kkt_.block(0, off, n_, sd) = a_psd_[i].transpose();
    kkt_.block(off, off, sd, sd) = -psd_scale_[i].h;
  }
  int bcol = n_ + me + total_psd;
  for (int i = 0; i < lay_.nn_dim; ++i, ++bcol) {
    VectorXd q = std::sqrt(nn_hinv_[i]) * a_nn_.row(i).transpose();
    kkt_.col(bcol).head(n_) = q;
    kkt_.row(bcol).head(n_) = q.transpose();
    kkt_(bcol, bcol) = -1.0;
  }
  for (size_t i = 0; i < lay_.socs.size(); ++i, ++bcol) {
    const auto& sc = soc_scale_[i];
    VectorXd q = std::sqrt(2.0 / sc.beta2) * (a_soc_[i].transpose() * sc.v);
    kkt_.col(bcol).head(n_) = q;
    kkt_.row(bcol).head(n_) = q.transpose();
    kkt_(bcol, bcol) = -1.0;
  }
  const double reg = 1e-13 * (1.0 + kkt_.diagonal().cwiseAbs().maxCoeff());
  kkt_.topLeftCorner(n_, n_).diagonal().array() += reg;
  if (me > 0) kkt_.block(n_, n_, me, me).diagonal().array() -= reg;
  if (mode == 2) {
    // The PSD scaling block spans ~1/mu^2 near convergence, past what a
    // double factorization resolves; factor in extended precision instead.
    kkt_lu_ld_.compute(kkt_.cast<long double>());
  } else {
    kkt_lu_.compute(kkt_);
  }
}

// Solves [0 A'; A -H] [dx; dz] = [g1; g2] via elimination of the non-equality
// dual blocks: dz_C = Hinv (A_C dx - g2_C).
void HsdeSolver::kkt_solve(const VectorXd& g1, const VectorXd& g2, VectorXd& dx,
                           VectorXd& dz) const {
  solve_reduced(g1, g2, dx, dz);
  // Refine against the unreduced equations A'dz = g1, A dx - H dz = g2; the
  // Schur elimination squares the scaling condition number and loses digits
  // near convergence. Cone-block residuals are measured through Hinv (their
  // effect on dz): near-singular scaling blocks carry huge absolute residuals
  // that are harmless after the Hinv projection.
  double prev = kInf;
  VectorXd best_dx = dx, best_dz = dz;
  for (int pass = 0; pass < 15; ++pass) {
    VectorXd r1 = g1 - ad_.transpose() * dz;
    VectorXd r2 = g2 - (ad_ * dx - apply_h(dz));
    // Residuals of eliminated blocks are weighted by Hinv (their effect on
    // dz); blocks solved directly carry their raw residual.
    VectorXd r2w = apply_hinv(r2);
    if (lay_.zero_dim > 0) {
      r2w.segment(lay_.zero_start, lay_.zero_dim) =
          r2.segment(lay_.zero_start, lay_.zero_dim);
    }
    if (kkt_mode_ > 0) {
      for (const auto& blk : lay_.psds) {
        r2w.segment(blk.start, blk.dim) = r2.segment(blk.start, blk.dim);
      }
    }
    double rnorm = std::max(r1.lpNorm<Eigen::Infinity>(), r2w.lpNorm<Eigen::Infinity>());
    if (set_.verbose) {
      std::ostringstream os;
      os << "      refine pass " << pass << " rnorm " << rnorm << "\n";
      std::fputs(os.str().c_str(), stderr);
    }
    if (rnorm > prev) {  // diverging: roll back the last correction
      dx = best_dx;
      dz = best_dz;
      break;
    }
    if (rnorm < 1e-13 || rnorm >= 0.9 * prev) break;  // converged or stagnating
    prev = rnorm;
    best_dx = dx;
    best_dz = dz;
    VectorXd ex, ez;
    solve_reduced(r1, r2, ex, ez);
    dx += ex;
    dz += ez;
  }
}

// Blockwise H^{-1} r over the non-zero cones (zero block passes through).
VectorXd HsdeSolver::apply_hinv(const VectorXd& r) const {
  VectorXd out = VectorXd::Zero(lay_.m);
  if (lay_.zero_dim > 0) {
    out.segment(lay_.zero_start, lay_.zero_dim) = r.segment(lay_.zero_start, lay_.zero_dim);
  }
  if (lay_.nn_dim > 0) {
    out.segment(lay_.nn_start, lay_.nn_dim) =
        nn_hinv_.cwiseProduct(r.segment(lay_.nn_start, lay_.nn_dim));
  }
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    const auto& blk = lay_.socs[i];
    const auto& sc = soc_scale_[i];
    auto g = r.segment(blk.start, blk.dim);
    VectorXd jg = g;
    jg.tail(blk.dim - 1) *= -1.0;
    out.segment(blk.start, blk.dim) = (2.0 * sc.v.dot(g) * sc.v - jg) / sc.beta2;
  }
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const auto& blk = lay_.psds[i];
    out.segment(blk.start, blk.dim) = psd_scale_[i].hinv * r.segment(blk.start, blk.dim);
  }
  return out;
}

void HsdeSolver::solve_reduced(const VectorXd& g1, const VectorXd& g2, VectorXd& dx,
                               VectorXd& dz) const {
  const int me = lay_.zero_dim;
  VectorXd rhs(kkt_.rows());
  rhs.setZero();
  VectorXd rx = g1;
  if (lay_.nn_dim > 0) {
    rx += a_nn_.transpose() * nn_hinv_.cwiseProduct(g2.segment(lay_.nn_start, lay_.nn_dim));
  }
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    const auto& blk = lay_.socs[i];
    const auto& sc = soc_scale_[i];
    auto g = g2.segment(blk.start, blk.dim);
    // Hinv g = (1/beta) (2 (v'g) v - J g)
    VectorXd jg = g;
    jg.tail(blk.dim - 1) *= -1.0;
    rx += a_soc_[i].transpose() * ((2.0 * sc.v.dot(g) * sc.v - jg) / sc.beta2);
  }
  if (kkt_mode_ == 0) {
    for (size_t i = 0; i < lay_.psds.size(); ++i) {
      const auto& blk = lay_.psds[i];
      rx += a_psd_[i].transpose() * (psd_scale_[i].hinv * g2.segment(blk.start, blk.dim));
    }
  }
  rhs.head(n_) = rx;
  if (me > 0) rhs.segment(n_, me) = g2.segment(lay_.zero_start, me);
  if (kkt_mode_ > 0) {
    for (size_t i = 0; i < lay_.psds.size(); ++i) {
      const auto& blk = lay_.psds[i];
      rhs.segment(psd_off_[i], blk.dim) = g2.segment(blk.start, blk.dim);
    }
  }

  VectorXd sol;
  if (kkt_mode_ == 2) {
    sol = kkt_lu_ld_.solve(rhs.cast<long double>()).cast<double>();
  } else {
    sol = kkt_lu_.solve(rhs);
    sol += kkt_lu_.solve(rhs - kkt_ * sol);  // one refinement pass
  }

  dx = sol.head(n_);
  dz = VectorXd::Zero(lay_.m);
  if (me > 0) dz.segment(lay_.zero_start, me) = sol.segment(n_, me);
  if (lay_.nn_dim > 0) {
    dz.segment(lay_.nn_start, lay_.nn_dim) = nn_hinv_.cwiseProduct(
        a_nn_ * dx - g2.segment(lay_.nn_start, lay_.nn_dim));
  }
  for (size_t i = 0; i < lay_.socs.size(); ++i) {
    const auto& blk = lay_.socs[i];
    const auto& sc = soc_scale_[i];
    VectorXd g = a_soc_[i] * dx - g2.segment(blk.start, blk.dim);
    VectorXd jg = g;
    jg.tail(blk.dim - 1) *= -1.0;
    dz.segment(blk.start, blk.dim) = (2.0 * sc.v.dot(g) * sc.v - jg) / sc.beta2;
  }
  for (size_t i = 0; i < lay_.psds.size(); ++i) {
    const auto& blk = lay_.psds[i];
    if (kkt_mode_ > 0) {
      dz.segment(blk.start, blk.dim) = sol.segment(psd_off_[i], blk.dim);
    } else {
      dz.segment(blk.start, blk.dim) =
          psd_scale_[i].hinv * (a_psd_[i] * dx - g2.segment(blk.start, blk.dim));
    }
  }
}

// Largest alpha with p + alpha dp staying in the cone (zero block ignored).
double HsdeSolver::max_step(const VectorXd& p, const VectorXd& dp) const {
  double alpha = kInf;
  for (int i = 0; i < lay_.nn_dim; ++i) {
    const double d = dp[lay_.nn_start + i];
    if (d < 0.0) alpha = std::min(alpha, -p[lay_.nn_start + i] / d);
  }
  for (const auto& blk : lay_.socs) {
    auto pb = p.segment(blk.start, blk.dim);
    auto db = dp.segment(blk.start, blk.dim);
    const double c2 = pb[0] * pb[0] - pb.tail(blk.dim - 1).squaredNorm();
    const double b2 = 2.0 * (pb[0] * db[0] - pb.tail(blk.dim - 1).dot(db.tail(blk.dim - 1)));
    const double a2 = db[0] * db[0] - db.tail(blk.dim - 1).squaredNorm();
    double step = kInf;
    if (std::abs(a2) < 1e-300) {
      if (b2 < 0.0) step = -c2 / b2;
    } else {
      const double disc = b2 * b2 - 4.0 * a2 * c2;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double r1 = (-b2 - sq) / (2.0 * a2);
        const double r2 = (-b2 + sq) / (2.0 * a2);
        const double lo = std::min(r1, r2), hi = std::max(r1, r2);
        if (lo > 0.0) step = lo;
        else if (hi > 0.0 && a2 < 0.0) step = hi;
        else if (hi <= 0.0 && a2 < 0.0) step = 0.0;
      } else if (a2 < 0.0) {
        step = 0.0;
      }
    }
    if (db[0] < 0.0) step = std::min(step, -pb[0] / db[0]);
    alpha = std::min(alpha, step);
  }
  for (const auto& blk : lay_.psds) {
    MatrixXd pm = svec_to_mat(p.segment(blk.start, blk.dim), blk.side);
    MatrixXd dm = svec_to_mat(dp.segment(blk.start, blk.dim), blk.side);
    Eigen::LLT<MatrixXd> llt(pm);
    if (llt.info() != Eigen::Success) {
      pm += 1e-14 * std::abs(pm.trace()) * MatrixXd::Identity(blk.side, blk.side);
      llt.compute(pm);
      if (llt.info() != Eigen::Success) return 0.0;
    }
    MatrixXd l = llt.matrixL();
    MatrixXd w = l.triangularView<Eigen::Lower>().solve(dm);
    w = l.triangularView<Eigen::Lower>().solve(w.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(w, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

ConicSolution HsdeSolver::run() {
  ConicSolution sol;
  const VectorXd& c = prob_.cost;
  const VectorXd& b = prob_.b;
  const double bnorm = b.norm(), cnorm = c.norm();

  VectorXd x = VectorXd::Zero(n_), s, z;
  set_identity(s);
  set_identity(z);
  double tau = 1.0, kappa = 1.0;

  const double degree = lay_.degree + 1.0;
  double best_mu = kInf;
  int stall = 0;
  int mode_floor = 0;

  for (int iter = 0; iter < set_.max_iter; ++iter) {
    VectorXd r_x = ad_.transpose() * z + c * tau;
    VectorXd r_z = s + ad_ * x - b * tau;
    const double r_tau = kappa + c.dot(x) + b.dot(z);
    const double mu = (s.dot(z) + tau * kappa) / degree;

    // convergence checks on the de-homogenized iterate
    const double pcost = c.dot(x) / tau;
    const double dcost = -b.dot(z) / tau;
    const double pres = (ad_ * (x / tau) + s / tau - b).norm() / (1.0 + bnorm);
    const double dres = (ad_.transpose() * (z / tau) + c).norm() / (1.0 + cnorm);
    const double absgap = s.dot(z) / (tau * tau);
    const double relgap = absgap / std::max(1.0, std::abs(pcost));

    if (set_.verbose) {
      std::ostringstream os;
      os << "iter " << iter << " mu " << mu << " pres " << pres << " dres " << dres
         << " gap " << relgap << " tau " << tau << " kappa " << kappa << " |x| " << x.norm()
         << " |s| " << s.norm() << " |z| " << z.norm() << "\n";
      std::fputs(os.str().c_str(), stderr);
    }

    sol.iterations = iter;
    sol.primal_res = pres;
    sol.dual_res = dres;
    sol.gap = relgap;

    if (pres <= set_.tol_feas && dres <= set_.tol_feas &&
        (relgap <= set_.tol_gap || std::abs(pcost - dcost) <= set_.tol_gap * std::max(1.0, std::abs(pcost)))) {
      sol.status = SolveStatus::Optimal;
      sol.x = x / tau;
      sol.s = s / tau;
      sol.z = z / tau;
      sol.objective = pcost;
      return sol;
    }

    // infeasibility certificates
    const double bz = b.dot(z);
    if (bz < -1e-12) {
      VectorXd zn = z / (-bz);
      if ((ad_.transpose() * zn).norm() <= set_.tol_infeas * (1.0 + zn.norm())) {
        sol.status = SolveStatus::Infeasible;
        sol.z = zn;
        return sol;
      }
    }
    const double cx = c.dot(x);
    if (cx < -1e-12) {
      VectorXd xn = x / (-cx);
      if ((ad_ * xn + s / (-cx)).norm() <= set_.tol_infeas * (1.0 + xn.norm())) {
        sol.status = SolveStatus::Unbounded;
        sol.x = xn;
        return sol;
      }
    }

    if (mu < best_mu * 0.9999) {
      best_mu = mu;
      stall = 0;
    } else if (++stall > 30) {
      break;
    }

    compute_scalings(s, z);
    // The cheap Schur form loses direction accuracy once the iterates approach
    // the boundary; switch to the bordered augmented form mid-course and to
    // its extended-precision factorization for the endgame (or on a stall).
    const double maxres = std::max(pres, dres);
    int mode = (mu < 1e-5 || maxres < 1e-4) ? 1 : 0;
    if (mode == 1 && stall >= 2) mode = 2;  // double path exhausted
    mode = std::max(mode, mode_floor);  // escalation is sticky
    mode_floor = mode;
    factor_kkt(mode);

    VectorXd x1, z1;
    kkt_solve(-c, b, x1, z1);

    auto direction = [&](const VectorXd& d_x, const VectorXd& d_z, const VectorXd& d_s,
                         double d_tau, double d_kappa, VectorXd& dx, VectorXd& dz,
                         VectorXd& ds, double& dtau, double& dkappa) {
      VectorXd x2, z2;
      kkt_solve(d_x, d_z - d_s, x2, z2);
      const double denom = c.dot(x1) + b.dot(z1) - kappa / tau;
      dtau = (d_tau - d_kappa / tau - c.dot(x2) - b.dot(z2)) / denom;
      dx = x2 + dtau * x1;
      dz = z2 + dtau * z1;
      // ds from the primal equation (exact in A); equivalent to d_s - H dz up
      // to KKT solve error, but keeps the primal residual contraction exact.
      ds = d_z - ad_ * dx + b * dtau;
      if (lay_.zero_dim > 0) ds.segment(lay_.zero_start, lay_.zero_dim).setZero();
      dkappa = (d_kappa - kappa * dtau) / tau;
    };

    // predictor (affine) direction
    VectorXd dx, dz, ds;
    double dtau, dkappa;
    direction(-r_x, -r_z, -s, -r_tau, -tau * kappa, dx, dz, ds, dtau, dkappa);

    if (set_.verbose) {
      const double e1 = (ad_.transpose() * dz + c * dtau + r_x).norm();
      const double e2 = (ds + ad_ * dx - b * dtau + r_z).norm();
      const double e3 = std::abs(dkappa + c.dot(dx) + b.dot(dz) + r_tau);
      std::ostringstream os;
      os << "   aff dir residuals e1 " << e1 << " e2 " << e2 << " e3 " << e3 << "\n";
      std::fputs(os.str().c_str(), stderr);
    }

    double alpha = max_step(s, ds);
    alpha = std::min(alpha, max_step(z, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(alpha, 1.0);

    const double mu_aff =
        ((s + alpha * ds).dot(z + alpha * dz) + (tau + alpha * dtau) * (kappa + alpha * dkappa)) /
        degree;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3);
    sigma = std::min(std::max(sigma, 1e-4), 0.999);

    // combined centering-plus-progress direction
    VectorXd d_s = -s + sigma * mu * cone_inverse(z);
    if (lay_.zero_dim > 0) d_s.segment(lay_.zero_start, lay_.zero_dim).setZero();
    direction((sigma - 1.0) * r_x, (sigma - 1.0) * r_z, d_s, (sigma - 1.0) * r_tau,
              -tau * kappa + sigma * mu, dx, dz, ds, dtau, dkappa);

    alpha = max_step(s, ds);
    alpha = std::min(alpha, max_step(z, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
    alpha = std::min(0.99 * alpha, 1.0);
    if (set_.verbose) {
      std::ostringstream os;
      os << "   sigma " << sigma << " alpha " << alpha << " a_s " << max_step(s, ds)
         << " a_z " << max_step(z, dz) << "\n";
      std::fputs(os.str().c_str(), stderr);
    }
    if (!std::isfinite(alpha) || alpha <= 1e-11) break;

    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }

  sol.status = SolveStatus::NumericalLimit;
  sol.x = x / tau;
  sol.s = s / tau;
  sol.z = z / tau;
  sol.objective = c.dot(x) / tau;
  return sol;
}

// Ruiz equilibration. Row scaling must be uniform inside each SOC/PSD block
// so the scaled slack stays in the same cone; column scaling is free.
struct Equilibration {
  VectorXd row;  // E
  VectorXd col;  // D
};

Equilibration equilibrate(MatrixXd& a, VectorXd& b, VectorXd& c,
                          const std::vector<ConeSpec>& cones) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Equilibration eq{VectorXd::Ones(m), VectorXd::Ones(n)};
  for (int pass = 0; pass < 10; ++pass) {
    VectorXd rs = VectorXd::Ones(m);
    int row = 0;
    for (const ConeSpec& cone : cones) {
      if (cone.kind == ConeKind::Zero || cone.kind == ConeKind::NonNeg) {
        for (int i = 0; i < cone.dim; ++i) {
          const double nrm = a.row(row + i).lpNorm<Eigen::Infinity>();
          if (nrm > 0) rs[row + i] = 1.0 / std::sqrt(nrm);
        }
      } else {
        const double nrm =
            a.middleRows(row, cone.dim).lpNorm<Eigen::Infinity>();
        if (nrm > 0) rs.segment(row, cone.dim).setConstant(1.0 / std::sqrt(nrm));
      }
      row += cone.dim;
    }
    a = rs.asDiagonal() * a;
    b = rs.cwiseProduct(b);
    eq.row = eq.row.cwiseProduct(rs);

    VectorXd cs = VectorXd::Ones(n);
    for (int j = 0; j < n; ++j) {
      const double nrm = a.col(j).lpNorm<Eigen::Infinity>();
      if (nrm > 0) cs[j] = 1.0 / std::sqrt(nrm);
    }
    a = a * cs.asDiagonal();
    c = cs.cwiseProduct(c);
    eq.col = eq.col.cwiseProduct(cs);
  }
  return eq;
}

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
  ConicProblem scaled = problem;
  MatrixXd ad = MatrixXd(problem.A);
  VectorXd b = problem.b, c = problem.cost;
  const Equilibration eq = equilibrate(ad, b, c, problem.cones);
  scaled.A = ad.sparseView();
  scaled.b = b;
  scaled.cost = c;

  HsdeSolver solver(scaled, settings);
  ConicSolution sol = solver.run();
  if (sol.x.size() == static_cast<int>(eq.col.size())) {
    sol.x = eq.col.cwiseProduct(sol.x);
  }
  if (sol.s.size() == static_cast<int>(eq.row.size())) {
    sol.s = sol.s.cwiseQuotient(eq.row);
    sol.z = eq.row.cwiseProduct(sol.z);
  }
  if (sol.x.size() == problem.num_vars) sol.objective = problem.cost.dot(sol.x);
  return sol;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalLimit: return "numerical_limit";
  }
  return "unknown";
}

std::string dump_problem(const ConicProblem& problem) {
  std::ostringstream os;
  os.precision(17);
  os << "vars " << problem.num_vars << "\nrows " << problem.A.rows() << "\ncones";
  for (const ConeSpec& cone : problem.cones) {
    switch (cone.kind) {
      case ConeKind::Zero: os << " zero:" << cone.dim; break;
      case ConeKind::NonNeg: os << " nonneg:" << cone.dim; break;
      case ConeKind::Soc: os << " soc:" << cone.dim; break;
      case ConeKind::Psd: os << " psd:" << cone.dim << "(side " << cone.side << ")"; break;
    }
  }
  os << "\ncost";
  for (int i = 0; i < problem.cost.size(); ++i) {
    if (problem.cost[i] != 0.0) os << " " << i << ":" << problem.cost[i];
  }
  os << "\n";
  for (int k = 0; k < problem.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(problem.A, k); it; ++it) {
      os << "A " << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
  for (int i = 0; i < problem.b.size(); ++i) {
    if (problem.b[i] != 0.0) os << "b " << i << " " << problem.b[i] << "\n";
  }
  return os.str();
}

}  // namespace dfrc::conic
