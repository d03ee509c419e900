#pragma once

// ADHM data, the Dirac-type operator Delta^*, its Gram operator Gamma, the
// projection Pi onto ker Delta^*, and the instanton frame U with Pi = U U^*.

#include "connections.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace ncinst {

struct AdhmData {
  int k = 0;
  int n = 1;
  Mat b1, b2;  // k x k
  Mat i;       // k x n
  Mat j;       // n x k
  Theta theta{1.0, 1.0};

  void validate() const {
    if (k < 0 || n < 1) throw InvalidArgument("ADHM data needs k >= 0 and n >= 1");
    auto shape = [](const Mat& m, int r, int c, const char* name) {
      if (m.rows() != r || m.cols() != c)
        throw ShapeMismatch(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                            ", expected " + std::to_string(r) + "x" + std::to_string(c));
      if (!m.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
    };
    shape(b1, k, k, "B1");
    shape(b2, k, k, "B2");
    shape(i, k, n, "I");
    shape(j, n, k, "J");
    theta.validate();
  }
};

inline AdhmData zero_adhm(int k, int n, Theta theta = {1.0, 1.0}) {
  return {k, n, Mat::Zero(k, k), Mat::Zero(k, k), Mat::Zero(k, n), Mat::Zero(n, k), theta};
}

inline std::vector<std::string> preset_names() { return {"u1-k1", "u1-k2", "u2-k1", "trivial"}; }

// Solutions at theta = (1,1), so the first constraint has right side 4.
inline AdhmData preset(const std::string& name) {
  const double r8 = std::sqrt(8.0);
  if (name == "u1-k1") {
    AdhmData d = zero_adhm(1, 1);
    d.i(0, 0) = 2.0;
    return d;
  }
  if (name == "u1-k2") {
    AdhmData d = zero_adhm(2, 1);
    d.b2(1, 0) = 2.0;
    d.i(0, 0) = r8;
    return d;
  }
  if (name == "u2-k1") {
    AdhmData d = zero_adhm(1, 2);
    d.i(0, 0) = r8;
    d.j(1, 0) = 2.0;
    return d;
  }
  if (name == "trivial") return zero_adhm(0, 1);
  throw InvalidArgument("unknown preset '" + name + "'");
}

struct AdhmResiduals {
  double moment = 0.0;   // |[B1,B1*] + [B2,B2*] + I I* - J* J - 2(t12 + t34) 1_k|_F
  double complex_ = 0.0; // |[B1,B2] + I J|_F
};

inline AdhmResiduals adhm_residuals(const AdhmData& d) {
  d.validate();
  Mat id = Mat::Identity(d.k, d.k);
  Mat r1 = d.b1 * d.b1.adjoint() - d.b1.adjoint() * d.b1 + d.b2 * d.b2.adjoint() - d.b2.adjoint() * d.b2 +
           d.i * d.i.adjoint() - d.j.adjoint() * d.j - 2.0 * (d.theta.theta12 + d.theta.theta34) * id;
  Mat r2 = d.b1 * d.b2 - d.b2 * d.b1 + d.i * d.j;
  return {r1.norm(), r2.norm()};
}

// ---------------------------------------------------------------------------
// Delta^* on (C^{n+2k} -> C^{2k}) (x) F, stored sparse.
//   [ I    B2 + z2       B1 + z1     ]
//   [ J^*  -B1^* - z1^*  B2^* + z2^* ]
// with z1 = x2 + i x1 and z2 = x4 + i x3.

struct DeltaOp {
  FockSpace space;
  int k = 0;
  int n = 0;
  SpMat star;  // 2k*dim x (n+2k)*dim

  BlockOp delta_star() const { return BlockOp(space, 2 * k, n + 2 * k, Mat(star)); }
  BlockOp delta() const { return BlockOp(space, n + 2 * k, 2 * k, Mat(star.adjoint())); }
};

namespace detail {

inline SpMat zhat(const FockSpace& s, int which) {
  SpMat re = sparse_coordinate(s, which == 1 ? 2 : 4);
  SpMat im = sparse_coordinate(s, which == 1 ? 1 : 3);
  return re + kI * im;
}

// Adds (coeff (x) 1 + [diagonal] z) into rows/cols starting at the given blocks.
inline void add_block(std::vector<Eigen::Triplet<cplx>>& t, int dim, int row0, int col0, const Mat& coeff, const SpMat* z) {
  for (int a = 0; a < coeff.rows(); ++a)
    for (int b = 0; b < coeff.cols(); ++b) {
      if (coeff(a, b) != cplx(0.0))
        for (int i = 0; i < dim; ++i) t.emplace_back((row0 + a) * dim + i, (col0 + b) * dim + i, coeff(a, b));
      if (z && a == b)
        for (int c = 0; c < z->outerSize(); ++c)
          for (SpMat::InnerIterator it(*z, c); it; ++it)
            t.emplace_back((row0 + a) * dim + int(it.row()), (col0 + b) * dim + int(it.col()), it.value());
    }
}

}  // namespace detail

inline DeltaOp build_delta(const AdhmData& d, const FockSpace& s, double tol = 1e-10) {
  d.validate();
  if (!(d.theta == s.theta())) throw InvalidArgument("ADHM data and Fock space use different theta");
  auto r = adhm_residuals(d);
  double worst = std::max(r.moment, r.complex_);
  if (worst > tol) throw ToleranceError("ADHM constraint residual", worst, tol);

  const int k = d.k, n = d.n, dim = s.dim();
  SpMat z1 = detail::zhat(s, 1), z2 = detail::zhat(s, 2);
  SpMat z1d = SpMat(z1.adjoint()), z2d = SpMat(z2.adjoint());
  SpMat mz1d = -z1d;
  std::vector<Eigen::Triplet<cplx>> t;
  detail::add_block(t, dim, 0, 0, d.i, nullptr);
  detail::add_block(t, dim, 0, n, d.b2, &z2);
  detail::add_block(t, dim, 0, n + k, d.b1, &z1);
  detail::add_block(t, dim, k, 0, d.j.adjoint(), nullptr);
  detail::add_block(t, dim, k, n, -d.b1.adjoint(), &mz1d);
  detail::add_block(t, dim, k, n + k, d.b2.adjoint(), &z2d);
  SpMat star(2 * k * dim, (n + 2 * k) * dim);
  star.setFromTriplets(t.begin(), t.end());
  return {s, k, n, star};
}

// ---------------------------------------------------------------------------
// Gamma: Delta^* Delta = diag(Gamma, Gamma) up to truncation.

struct GammaReport {
  BlockOp gamma;               // upper-left k x k block
  double offdiag_defect = 0;   // interior norm of the off-diagonal super-block
  double block_difference = 0; // interior norm of the difference of the two diagonal super-blocks
  double min_interior_eig = 0;
  double max_interior_eig = 0;
  RVec diagonal;               // number-basis diagonal of Gamma_11, for inspection
};

inline Mat gram(const DeltaOp& dop) { return Mat(dop.star * SpMat(dop.star.adjoint())); }

inline GammaReport gamma_extract(const DeltaOp& dop, double tol = 1e-8) {
  const auto& s = dop.space;
  const int k = dop.k, kd = k * s.dim();
  if (k == 0) return {BlockOp::zero(s, 0, 0), 0, 0, 0, 0, RVec()};
  Mat g = gram(dop);
  GammaReport r;
  r.gamma = BlockOp(s, k, k, g.topLeftCorner(kd, kd));
  r.offdiag_defect = interior_norm(BlockOp(s, k, k, g.topRightCorner(kd, kd)));
  r.block_difference = interior_norm(BlockOp(s, k, k, Mat(g.topLeftCorner(kd, kd) - g.bottomRightCorner(kd, kd))));
  Eigen::SelfAdjointEigenSolver<Mat> es(interior_part(r.gamma), Eigen::EigenvaluesOnly);
  r.min_interior_eig = es.eigenvalues().minCoeff();
  r.max_interior_eig = es.eigenvalues().maxCoeff();
  r.diagonal = r.gamma.mat().diagonal().real();
  if (r.offdiag_defect > tol) throw ToleranceError("Delta^* Delta off-diagonal super-block", r.offdiag_defect, tol);
  return r;
}

// ---------------------------------------------------------------------------
// Pi = 1 - Delta (Delta^* Delta)^+ Delta^*

struct Projection {
  BlockOp pi;
  RVec gram_spectrum;  // ascending
  int floored = 0;     // eigenvalues of Delta^* Delta set to zero in the pseudo-inverse
};

namespace detail {

// Eigendecomposition of the Gram operator, one diagonal super-block at a
// time when the off-diagonal ones vanish identically.
inline std::pair<RVec, Mat> gram_eigen(const Mat& g, int k, int dim) {
  const int kd = k * dim;
  if (max_abs(g.topRightCorner(kd, kd)) == 0.0) {
    RVec w(2 * kd);
    Mat v = Mat::Zero(2 * kd, 2 * kd);
    for (int b = 0; b < 2; ++b) {
      Eigen::SelfAdjointEigenSolver<Mat> es(g.block(b * kd, b * kd, kd, kd));
      w.segment(b * kd, kd) = es.eigenvalues();
      v.block(b * kd, b * kd, kd, kd) = es.eigenvectors();
    }
    return {w, v};
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace detail

// Eigenvalues of Delta^* Delta below `floor` are dropped from the inverse. A
// dropped eigenvector that lives mostly on the interior is a genuine
// near-singularity rather than a truncation artifact, and throws.
inline Projection projection_pi(const DeltaOp& dop, double floor = 1e-10) {
  const auto& s = dop.space;
  const int rows = dop.n + 2 * dop.k;
  Projection out;
  if (dop.k == 0) {
    out.pi = BlockOp::identity(s, rows);
    return out;
  }
  auto [w, v] = detail::gram_eigen(gram(dop), dop.k, s.dim());
  RVec mask = interior_mask(s, 2 * dop.k);
  Vec scale(w.size());
  std::vector<double> low;
  for (Eigen::Index c = 0; c < w.size(); ++c) {
    if (w(c) > floor) {
      scale(c) = 1.0 / std::sqrt(w(c));
      continue;
    }
    scale(c) = 0.0;
    ++out.floored;
    double interior_weight = (v.col(c).cwiseAbs2().transpose() * mask)(0);
    if (interior_weight > 0.5) low.push_back(w(c));
  }
  if (!low.empty()) {
    std::vector<double> spectrum(w.data(), w.data() + std::min<Eigen::Index>(w.size(), 16));
    std::sort(spectrum.begin(), spectrum.end());
    throw SingularGamma("Delta^* Delta has " + std::to_string(low.size()) + " interior eigenvalue(s) below the floor", spectrum);
  }
  // Delta V diag(w^{-1/2}), then Pi' = Y Y^*
  Mat y = SpMat(dop.star.adjoint()) * v;
  y = y * scale.asDiagonal();
  Mat pi = Mat::Identity(rows * s.dim(), rows * s.dim());
  pi.noalias() -= y * y.adjoint();
  out.pi = BlockOp(s, rows, rows, pi);
  out.gram_spectrum = w;
  std::sort(out.gram_spectrum.begin(), out.gram_spectrum.end());
  return out;
}

// ---------------------------------------------------------------------------
// The instanton frame. With iota the embedding of the C^n summand and
// M = iota^* Pi iota, U = Pi iota M^{-1/2} (pseudo-inverse). The kernel of M
// holds the k normalizable zero modes, so U^* U = 1_n - P_zero and U U^* = Pi.

struct FrameOptions {
  double gram_floor = 1e-10;    // pseudo-inverse floor for Delta^* Delta
  double kernel_rel = 1e-6;     // relative singular value threshold for ker Delta^*
  double mode_floor = 1e-8;     // eigenvalues of M counted as zero
  double localization = 0.5;    // interior weight separating zero modes from boundary artifacts
  Tolerances tol{};
};

struct InstantonFrame {
  AdhmData data;
  Isometry u;                       // right unit 1_n - zero_projector
  BlockOp pi;
  std::vector<Vec> zero_modes;      // orthonormal, ordered by mean number level
  std::vector<double> mode_values;  // eigenvalue of M for each zero mode
  BlockOp zero_projector;           // n x n
  int boundary_modes = 0;           // kernel vectors of M living at the cutoff
  int delta_kernel_dim = 0;         // measured dim ker Delta^*
  int expected_kernel_dim = 0;      // n * dim + k
  std::vector<double> low_singular; // smallest singular values of Delta^*
  std::vector<std::string> warnings;

  const FockSpace& space() const { return pi.space(); }
  int n() const { return data.n; }
  int k() const { return data.k; }
  const BlockOp& module_unit() const { return u.right_unit; }
};

namespace detail {

// Mean total number level of a vector on C^r (x) F.
inline double mean_level(const FockSpace& s, const Vec& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto [m, n] = s.label(int(i % s.dim()));
    acc += std::norm(v(i)) * (m + n);
  }
  return acc / std::max(v.squaredNorm(), 1e-300);
}

}  // namespace detail

inline InstantonFrame zero_modes(const AdhmData& d, const DeltaOp& dop, const Projection& proj, const FrameOptions& opt = {}) {
  const auto& s = dop.space;
  const int n = d.n, k = d.k, dim = s.dim(), nd = n * dim;
  InstantonFrame f;
  f.data = d;
  f.pi = proj.pi;
  f.expected_kernel_dim = nd + k;

  // ker Delta^* from the Gram spectrum: singular values are sqrt of its eigenvalues.
  int total_cols = (n + 2 * k) * dim;
  if (k == 0) {
    f.delta_kernel_dim = total_cols;
  } else {
    double smax = std::sqrt(std::max(0.0, proj.gram_spectrum(proj.gram_spectrum.size() - 1)));
    int rank = 0, borderline = 0;
    for (Eigen::Index c = 0; c < proj.gram_spectrum.size(); ++c) {
      double sv = std::sqrt(std::max(0.0, proj.gram_spectrum(c)));
      if (sv >= opt.kernel_rel * smax) ++rank;
      if (sv >= opt.kernel_rel * smax && sv < 1e3 * opt.kernel_rel * smax) ++borderline;
      if (c < 8) f.low_singular.push_back(sv);
    }
    f.delta_kernel_dim = total_cols - rank;
    if (borderline > 0) {
      std::string msg = std::to_string(borderline) + " borderline singular value(s) of Delta^*; smallest:";
      for (double v : f.low_singular) msg += " " + std::to_string(v);
      f.warnings.push_back(msg);
    }
  }
  if (f.delta_kernel_dim != f.expected_kernel_dim)
    f.warnings.push_back("dim ker Delta^* = " + std::to_string(f.delta_kernel_dim) + ", expected n*dim + k = " +
                         std::to_string(f.expected_kernel_dim) + " (truncation shifts boundary singular values)");

  Mat m = proj.pi.mat().topLeftCorner(nd, nd);
  m = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const RVec& mw = es.eigenvalues();
  const Mat& mv = es.eigenvectors();

  // Split the numerical kernel into interior-localized modes and boundary
  // artifacts by diagonalizing the interior weight inside it.
  std::vector<int> ker;
  for (int c = 0; c < nd; ++c)
    if (mw(c) < opt.mode_floor) ker.push_back(c);
  Mat kv = mv(Eigen::all, ker);
  RVec mask = interior_mask(s, n);
  Mat weight = kv.adjoint() * mask.cast<cplx>().asDiagonal() * kv;
  Mat modes(nd, 0);
  if (!ker.empty()) {
    Eigen::SelfAdjointEigenSolver<Mat> ws(weight);
    std::vector<int> local;
    for (int c = 0; c < int(ker.size()); ++c)
      if (ws.eigenvalues()(c) >= opt.localization) local.push_back(c);
    modes = kv * ws.eigenvectors()(Eigen::all, local);
  }
  f.boundary_modes = int(ker.size() - modes.cols());

  // Fix the basis inside the zero-mode space by the total number operator.
  if (modes.cols() > 0) {
    RVec levels(nd);
    for (int i = 0; i < nd; ++i) {
      auto [a, b] = s.label(i % dim);
      levels(i) = a + b;
    }
    Mat nm = modes.adjoint() * levels.cast<cplx>().asDiagonal() * modes;
    Eigen::SelfAdjointEigenSolver<Mat> ns((nm + nm.adjoint()) / 2.0);
    modes = modes * ns.eigenvectors();
  }
  Mat zp = Mat::Zero(nd, nd);
  for (int c = 0; c < modes.cols(); ++c) {
    Vec v = modes.col(c);
    // fix the phase: largest entry real positive
    Eigen::Index at;
    v.cwiseAbs().maxCoeff(&at);
    v *= std::conj(v(at)) / std::abs(v(at));
    f.zero_modes.push_back(v);
    f.mode_values.push_back(std::abs((v.adjoint() * m * v)(0)));
    zp += v * v.adjoint();
  }
  f.zero_projector = BlockOp(s, n, n, zp);
  if (int(f.zero_modes.size()) != k)
    f.warnings.push_back("found " + std::to_string(f.zero_modes.size()) + " normalizable zero mode(s), expected k = " + std::to_string(k));
  if (f.boundary_modes > 0)
    f.warnings.push_back(std::to_string(f.boundary_modes) + " kernel vector(s) of iota^* Pi iota live at the cutoff and are dropped");

  RVec inv_sqrt(nd);
  for (int c = 0; c < nd; ++c) inv_sqrt(c) = mw(c) >= opt.mode_floor ? 1.0 / std::sqrt(mw(c)) : 0.0;
  Mat msq = mv * inv_sqrt.cast<cplx>().asDiagonal() * mv.adjoint();
  Mat u = proj.pi.mat().leftCols(nd) * msq;
  BlockOp unit = BlockOp(s, n, n, Mat(Mat::Identity(nd, nd) - zp));
  f.u = Isometry{BlockOp(s, n + 2 * k, n, u), unit};
  check_isometry(f.u, opt.tol.norm);
  return f;
}

inline InstantonFrame instanton_frame(const AdhmData& d, const FockSpace& s, const FrameOptions& opt = {}) {
  DeltaOp dop = build_delta(d, s);
  Projection proj = projection_pi(dop, opt.gram_floor);
  return zero_modes(d, dop, proj, opt);
}

// ---------------------------------------------------------------------------
// Derivatives of the zero-mode projector. For the canonical projector
// P = |0><0| (x) P_{<k} on the first summand,
//   d1 P = -(1/sqrt(2 t12)) (|1><0| + |0><1|) (x) P_{<k}
//   d2 P = -(i/sqrt(2 t12)) (|1><0| - |0><1|) (x) P_{<k}
//   d3 P = -sqrt(k/(2 t34)) |0><0| (x) (|k><k-1| + |k-1><k|)
//   d4 P = -i sqrt(k/(2 t34)) |0><0| (x) (|k><k-1| - |k-1><k|)

inline BlockOp canonical_zero_projector(const FockSpace& s, int n, int k) {
  BlockOp p = BlockOp::zero(s, n, n);
  Mat blk = Mat::Zero(s.dim(), s.dim());
  for (int j = 0; j < k; ++j) blk(s.index(0, j), s.index(0, j)) = 1.0;
  p.set_block(0, 0, blk);
  return p;
}

inline BlockOp zero_projector_derivative_closed_form(const FockSpace& s, int n, int k, int j) {
  const auto& th = s.theta();
  if (th.theta12 <= 0 || th.theta34 <= 0) throw InvalidArgument("closed form assumes positive theta");
  if (k >= s.n_cut()) throw InvalidArgument("k must be below the cutoff");
  Mat blk = Mat::Zero(s.dim(), s.dim());
  auto add = [&](int m1, int n1, int m2, int n2, cplx v) { blk(s.index(m1, n1), s.index(m2, n2)) += v; };
  if (j == 1 || j == 2) {
    double c = 1.0 / std::sqrt(2.0 * th.theta12);
    cplx up = j == 1 ? cplx(-c) : -kI * c;  // coefficient of |1><0|
    for (int q = 0; q < k; ++q) {
      add(1, q, 0, q, up);
      add(0, q, 1, q, j == 1 ? up : -up);
    }
  } else if (j == 3 || j == 4) {
    if (k > 0) {
      double c = std::sqrt(k / (2.0 * th.theta34));
      cplx up = j == 3 ? cplx(-c) : -kI * c;  // coefficient of |k><k-1|
      add(0, k, 0, k - 1, up);
      add(0, k - 1, 0, k, j == 3 ? up : -up);
    }
  } else {
    throw InvalidArgument("derivative index must be in 1..4");
  }
  BlockOp out = BlockOp::zero(s, n, n);
  out.set_block(0, 0, blk);
  return out;
}

struct ZeroProjectorDerivative {
  BlockOp value;          // inner-derivation result
  bool canonical = false; // frame projector matched the canonical one
  double agreement = 0.0; // interior max |commutator - closed form| when canonical
};

inline ZeroProjectorDerivative ik_derivative(const InstantonFrame& f, int j, double tol = 1e-8) {
  const auto& s = f.space();
  ZeroProjectorDerivative out;
  out.value = derivation(j, f.zero_projector);
  BlockOp canon = canonical_zero_projector(s, f.n(), f.k());
  out.canonical = f.k() < s.n_cut() && interior_max_abs(f.zero_projector - canon) < tol && s.theta().theta12 > 0 &&
                  s.theta().theta34 > 0;
  if (out.canonical) {
    out.agreement = interior_max_abs(out.value - zero_projector_derivative_closed_form(s, f.n(), f.k(), j));
    if (out.agreement > tol) throw ToleranceError("zero-projector derivative closed form", out.agreement, tol);
  }
  return out;
}

}  // namespace ncinst
