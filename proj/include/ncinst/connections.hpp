#pragma once

// Connections and curvature on free and block modules, gauge transforms,
// ASD residuals, the spinor reformulation and the action / charge traces.

#include "fock.hpp"

#include <array>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace ncinst {

struct Tolerances {
  double entry = 1e-10;
  double norm = 1e-8;
};

// Partial isometry with its declared right unit u^* u.
struct Isometry {
  BlockOp u;
  BlockOp right_unit;

  static Isometry with_identity(const BlockOp& u) { return {u, BlockOp::identity(u.space(), u.cols())}; }

  // interior operator norm of u^* u - right_unit
  double defect() const { return interior_norm(u.adjoint() * u - right_unit); }
};

inline void check_isometry(const Isometry& iso, double tol) {
  if (iso.right_unit.rows() != iso.u.cols() || iso.right_unit.cols() != iso.u.cols())
    throw ShapeMismatch("right unit does not match the isometry columns");
  require_same_space(iso.u, iso.right_unit);
  double d = iso.defect();
  if (d > tol) throw ToleranceError("isometry defect", d, tol);
}

// Connection d + A on a module with unit `unit` (identity for free modules).
struct FreeConnection {
  std::array<BlockOp, 4> a;
  BlockOp unit;

  const FockSpace& space() const { return a[0].space(); }
  int rank() const { return a[0].rows(); }

  // largest interior entry of unit (A_j + A_j^*) unit over j
  double hermiticity_defect() const {
    double worst = 0.0;
    for (const auto& aj : a) worst = std::max(worst, interior_max_abs(unit * (aj + aj.adjoint()) * unit));
    return worst;
  }
};

inline FreeConnection make_connection(std::array<BlockOp, 4> a, double tol = Tolerances{}.entry) {
  for (const auto& aj : a) {
    require_same_space(aj, a[0]);
    if (aj.rows() != aj.cols() || aj.rows() != a[0].rows()) throw ShapeMismatch("connection components must be square and equal");
  }
  FreeConnection c{a, BlockOp::identity(a[0].space(), a[0].rows())};
  double d = c.hermiticity_defect();
  if (d > tol) throw ToleranceError("connection is not anti-Hermitian", d, tol);
  return c;
}

// Six components F_12, F_13, F_14, F_23, F_24, F_34; F(n,m) = -F(m,n).
class Curvature {
 public:
  Curvature() = default;
  explicit Curvature(std::array<BlockOp, 6> c) : c_(std::move(c)) {}

  static int slot(int m, int n) {
    static constexpr int table[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
    if (m < 1 || m > 4 || n < 1 || n > 4) throw InvalidArgument("curvature indices must be in 1..4");
    return table[m - 1][n - 1];
  }
  static std::pair<int, int> pair(int s) {
    static constexpr int p[6][2] = {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
    return {p[s][0], p[s][1]};
  }

  BlockOp operator()(int m, int n) const {
    if (m == n) return BlockOp::zero(c_[0].space(), c_[0].rows(), c_[0].cols());
    const BlockOp& f = c_[slot(m, n)];
    return m < n ? f : -f;
  }
  const BlockOp& component(int s) const { return c_.at(s); }
  const std::array<BlockOp, 6>& components() const { return c_; }
  const FockSpace& space() const { return c_[0].space(); }

 private:
  std::array<BlockOp, 6> c_;
};

inline Curvature operator-(const Curvature& a, const Curvature& b) {
  std::array<BlockOp, 6> c;
  for (int s = 0; s < 6; ++s) c[s] = a.component(s) - b.component(s);
  return Curvature(c);
}

inline double interior_norm(const Curvature& f) {
  double worst = 0.0;
  for (const auto& c : f.components()) worst = std::max(worst, interior_norm(c));
  return worst;
}

// ---------------------------------------------------------------------------
// Connections from isometries

inline FreeConnection connection_from_isometry(const Isometry& iso, const Tolerances& tol = {}) {
  check_isometry(iso, tol.norm);
  const BlockOp& u = iso.u;
  BlockOp ud = u.adjoint();
  std::array<BlockOp, 4> a;
  for (int j = 1; j <= 4; ++j) {
    BlockOp du = derivation(j, u);
    a[j - 1] = ud * du;
    // A = U^* dU = -(dU^*) U + d(U^* U)
    BlockOp other = -(derivation(j, ud) * u) + derivation(j, iso.right_unit);
    double r = interior_max_abs(a[j - 1] - other);
    if (r > tol.norm) throw ToleranceError("U^* dU + (dU^*) U differs from d(U^* U)", r, tol.norm);
  }
  FreeConnection c{a, iso.right_unit};
  double h = c.hermiticity_defect();
  if (h > tol.norm) throw ToleranceError("connection is not anti-Hermitian on the module", h, tol.norm);
  return c;
}

inline Curvature curvature_general(const FreeConnection& conn) {
  std::array<BlockOp, 6> c;
  std::array<std::array<BlockOp, 4>, 4> da;
  for (int m = 1; m <= 4; ++m)
    for (int n = 1; n <= 4; ++n)
      if (m != n) da[m - 1][n - 1] = derivation(m, conn.a[n - 1]);
  for (int s = 0; s < 6; ++s) {
    auto [m, n] = Curvature::pair(s);
    const BlockOp& am = conn.a[m - 1];
    const BlockOp& an = conn.a[n - 1];
    c[s] = da[m - 1][n - 1] - da[n - 1][m - 1] + commutator(am, an);
  }
  return Curvature(c);
}

namespace detail {

// x_l U for each axis and (1 - U U^*) x_l U.
struct ProjectedCoordinates {
  std::array<Mat, 4> xu;
  std::array<Mat, 4> qxu;
};

inline ProjectedCoordinates projected_coordinates(const BlockOp& u) {
  const auto& s = u.space();
  ProjectedCoordinates pc;
  for (int l = 1; l <= 4; ++l) {
    SpMat x = sparse_coordinate(s, l);
    pc.xu[l - 1] = left_apply(x, u.mat(), s.dim());
    Mat overlap = u.mat().adjoint() * pc.xu[l - 1];
    pc.qxu[l - 1] = pc.xu[l - 1];
    pc.qxu[l - 1].noalias() -= u.mat() * overlap;
  }
  return pc;
}

}  // namespace detail

// F_mn = kappa_mn U^*(x_a Q x_b - x_b Q x_a) U with Q = 1 - U U^*, where
// d_m = c_m [x_a, .], d_n = c_n [x_b, .] and kappa_mn = -c_m c_n. For theta = (1,1)
// this is F_12 = U^*(x1 Q x2 - x2 Q x1)U, F_13 = U^*(x2 Q x4 - x4 Q x2)U, etc.
inline Curvature curvature_projected(const Isometry& iso, const Tolerances& tol = {}) {
  check_isometry(iso, tol.norm);
  const BlockOp& u = iso.u;
  // Q^2 = Q iff U (U^* U) = U
  double q_defect = max_abs(u.mat() * (u.mat().adjoint() * u.mat()) - u.mat());
  if (q_defect > tol.norm) throw ToleranceError("1 - U U^* is not idempotent", q_defect, tol.norm);

  auto pc = detail::projected_coordinates(u);
  const auto& th = u.space().theta();
  std::array<BlockOp, 6> c;
  for (int s = 0; s < 6; ++s) {
    auto [m, n] = Curvature::pair(s);
    auto [cm, a] = detail::derivation_rule(th, m);
    auto [cn, b] = detail::derivation_rule(th, n);
    Mat f = pc.xu[a - 1].adjoint() * pc.qxu[b - 1];
    f.noalias() -= pc.xu[b - 1].adjoint() * pc.qxu[a - 1];
    c[s] = BlockOp(u.space(), u.cols(), u.cols(), (-cm * cn) * f);
  }
  return Curvature(c);
}

// ---------------------------------------------------------------------------
// Block modules: P = diag(P0 (x) 1_k, 1_n) with P0 = |0,0><0,0|, and
// connection P d + i A with Hermitian A built from (C_j, B_j, D_j).

struct BlockConnection {
  FockSpace space;
  int k = 0;
  int n = 0;
  std::array<Mat, 4> c;                  // k x k Hermitian
  std::array<std::vector<Vec>, 4> b;     // k*n Fock vectors, entry (a, j) at a*n + j
  std::array<BlockOp, 4> d;              // n x n Hermitian

  void validate(double tol = Tolerances{}.entry) const {
    for (int j = 0; j < 4; ++j) {
      if (c[j].rows() != k || c[j].cols() != k) throw ShapeMismatch("C_j must be k x k");
      if (max_abs(c[j] - c[j].adjoint()) > tol) throw InvalidArgument("C_j must be Hermitian");
      if (int(b[j].size()) != k * n) throw ShapeMismatch("B_j must hold k*n vectors");
      for (const auto& v : b[j])
        if (v.size() != space.dim()) throw ShapeMismatch("B_j vectors must live on the Fock space");
      if (d[j].rows() != n || d[j].cols() != n || !(d[j].space() == space)) throw ShapeMismatch("D_j must be n x n");
      if (max_abs(d[j].mat() - d[j].mat().adjoint()) > tol) throw InvalidArgument("D_j must be Hermitian");
    }
  }
};

inline BlockOp block_module_projector(const FockSpace& s, int k, int n) {
  BlockOp p = BlockOp::identity(s, k + n);
  Mat p0 = (basis_ket(s, 0, 0) * basis_ket(s, 0, 0).adjoint());
  for (int a = 0; a < k; ++a) p.set_block(a, a, p0);
  return p;
}

// The Hermitian potential A_j on C^{k+n} (x) F.
inline BlockOp block_potential(const BlockConnection& bc, int j) {
  const auto& s = bc.space;
  Vec e0 = basis_ket(s, 0, 0);
  BlockOp a = BlockOp::zero(s, bc.k + bc.n, bc.k + bc.n);
  for (int p = 0; p < bc.k; ++p)
    for (int q = 0; q < bc.k; ++q) a.set_block(p, q, bc.c[j - 1](p, q) * (e0 * e0.adjoint()));
  for (int p = 0; p < bc.k; ++p)
    for (int q = 0; q < bc.n; ++q) {
      const Vec& beta = bc.b[j - 1][p * bc.n + q];
      a.set_block(p, bc.k + q, e0 * beta.adjoint());
      a.set_block(bc.k + q, p, beta * e0.adjoint());
    }
  for (int p = 0; p < bc.n; ++p)
    for (int q = 0; q < bc.n; ++q) a.set_block(bc.k + p, bc.k + q, bc.d[j - 1].block(p, q).mat());
  return a;
}

// Curvature of the block connection, assembled block by block:
//   (11) = P0[d_m P0, d_n P0]P0 (x) 1_k + (C_n C_m - C_m C_n + G_nm - G_mn) P0,
//          G_mn(a,c) = sum_j <B_m(a,j)|B_n(c,j)>
//   (12) = i P0 d_m(|0><B_n|) - i P0 d_n(|0><B_m|) - (C_m B_n - C_n B_m) - (B_m D_n - B_n D_m)
//   (21) = i d_m(|B_n><0|) P0 - i d_n(|B_m><0|) P0 - (B_m^* C_n - B_n^* C_m) - (D_m B_n^* - D_n B_m^*)
//   (22) = i(d_m D_n - d_n D_m) - [D_m, D_n] - sum_a(|B_m(a,.)><B_n(a,.)| - |B_n(a,.)><B_m(a,.)|)
inline Curvature curvature_block(const BlockConnection& bc) {
  bc.validate();
  const auto& s = bc.space;
  const int k = bc.k, n = bc.n, dim = s.dim();
  Vec e0 = basis_ket(s, 0, 0);
  Mat p0 = e0 * e0.adjoint();
  std::array<Mat, 4> dp0;
  for (int j = 1; j <= 4; ++j) dp0[j - 1] = detail::derive(s, j, p0);
  std::array<SpMat, 4> x;
  for (int l = 1; l <= 4; ++l) x[l - 1] = detail::sparse_coordinate(s, l);

  auto beta = [&](int j, int a, int q) -> const Vec& { return bc.b[j - 1][a * n + q]; };

  std::array<BlockOp, 6> out;
  for (int slot = 0; slot < 6; ++slot) {
    auto [m, nn] = Curvature::pair(slot);
    auto [cm, am] = detail::derivation_rule(s.theta(), m);
    auto [cn, an] = detail::derivation_rule(s.theta(), nn);
    BlockOp f = BlockOp::zero(s, k + n, k + n);
    const Mat& Cm = bc.c[m - 1];
    const Mat& Cn = bc.c[nn - 1];

    // (11)
    Mat fp = p0 * (dp0[m - 1] * dp0[nn - 1] - dp0[nn - 1] * dp0[m - 1]) * p0;
    Mat coeff = Cn * Cm - Cm * Cn;
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c)
        for (int q = 0; q < n; ++q)
          coeff(a, c) += beta(nn, a, q).dot(beta(m, c, q)) - beta(m, a, q).dot(beta(nn, c, q));
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c) f.set_block(a, c, coeff(a, c) * p0 + (a == c ? fp : Mat::Zero(dim, dim)));

    // (12) and (21). P0 d_j(|0><B|) = -c_j |0><x B| and d_j(|B><0|) P0 = c_j |x B><0|.
    for (int a = 0; a < k; ++a)
      for (int q = 0; q < n; ++q) {
        // block (a, k+q) is |0><row|, block (k+q, a) is |col><0|
        Vec row = std::conj(-kI * cm) * (x[am - 1] * beta(nn, a, q)) - std::conj(-kI * cn) * (x[an - 1] * beta(m, a, q));
        Vec col = (kI * cm) * (x[am - 1] * beta(nn, a, q)) - (kI * cn) * (x[an - 1] * beta(m, a, q));
        for (int c = 0; c < k; ++c) {
          row -= std::conj(Cm(a, c)) * beta(nn, c, q) - std::conj(Cn(a, c)) * beta(m, c, q);
          col -= Cn(c, a) * beta(m, c, q) - Cm(c, a) * beta(nn, c, q);
        }
        for (int r = 0; r < n; ++r) {
          // |0><B_m(a,r)| D_n(r,q): v = D_n(r,q)^* B_m(a,r)
          row -= bc.d[nn - 1].block(r, q).mat().adjoint() * beta(m, a, r) -
                 bc.d[m - 1].block(r, q).mat().adjoint() * beta(nn, a, r);
          col -= bc.d[m - 1].block(q, r).mat() * beta(nn, a, r) - bc.d[nn - 1].block(q, r).mat() * beta(m, a, r);
        }
        f.set_block(a, k + q, e0 * row.adjoint());
        f.set_block(k + q, a, col * e0.adjoint());
      }

    // (22)
    if (n > 0) {
      const Mat& Dm = bc.d[m - 1].mat();
      const Mat& Dn = bc.d[nn - 1].mat();
      Mat g = kI * (detail::derive(s, m, Dn) - detail::derive(s, nn, Dm)) - (Dm * Dn - Dn * Dm);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          for (int a = 0; a < k; ++a)
            g.block(p * dim, q * dim, dim, dim) -=
                beta(m, a, p) * beta(nn, a, q).adjoint() - beta(nn, a, p) * beta(m, a, q).adjoint();
      f = BlockOp(s, k + n, k + n, [&] {
        Mat all = f.mat();
        all.bottomRightCorner(n * dim, n * dim) = g;
        return all;
      }());
    }
    out[slot] = f;
  }
  return Curvature(out);
}

// ---------------------------------------------------------------------------
// Gauge transformations

inline void check_unitary(const BlockOp& g, double tol) {
  if (g.rows() != g.cols()) throw ShapeMismatch("gauge element must be square");
  Mat id = Mat::Identity(g.mat().rows(), g.mat().cols());
  double d = std::max(op_norm(g.mat().adjoint() * g.mat() - id), op_norm(g.mat() * g.mat().adjoint() - id));
  if (d > tol) throw ToleranceError("gauge element is not unitary", d, tol);
}

// exp(i H_1) ... exp(i H_p)
inline BlockOp gauge_element(const std::vector<BlockOp>& hermitians) {
  if (hermitians.empty()) throw InvalidArgument("gauge element needs at least one generator");
  const auto& h0 = hermitians.front();
  Mat g = Mat::Identity(h0.mat().rows(), h0.mat().cols());
  for (const auto& h : hermitians) {
    require_same_space(h, h0);
    if (!is_hermitian(h.mat(), 1e-12)) throw InvalidArgument("gauge generator must be Hermitian");
    g = g * expi_hermitian(h.mat());
  }
  return BlockOp(h0.space(), h0.rows(), h0.cols(), g);
}

// A -> g^* A g + g^* d g
inline FreeConnection gauge_transform(const BlockOp& g, const FreeConnection& conn, double tol = Tolerances{}.norm) {
  check_unitary(g, tol);
  require_same_space(g, conn.a[0]);
  if (g.rows() != conn.rank()) throw ShapeMismatch("gauge element rank differs from the connection");
  BlockOp gd = g.adjoint();
  FreeConnection out{conn.a, gd * conn.unit * g};
  for (int j = 1; j <= 4; ++j) out.a[j - 1] = gd * conn.a[j - 1] * g + gd * derivation(j, g);
  return out;
}

inline Curvature gauge_transform_curvature(const BlockOp& g, const Curvature& f, double tol = Tolerances{}.norm) {
  check_unitary(g, tol);
  BlockOp gd = g.adjoint();
  std::array<BlockOp, 6> c;
  for (int s = 0; s < 6; ++s) c[s] = gd * f.component(s) * g;
  return Curvature(c);
}

// Random Hermitian rank x rank block operator supported on levels < n_cut - inner_margin.
template <class Rng>
BlockOp random_interior_hermitian(const FockSpace& s, int rank, int inner_margin, double scale, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  int d = s.dim();
  Mat h = Mat::Zero(rank * d, rank * d);
  std::vector<int> idx;
  for (int b = 0; b < rank; ++b)
    for (int i = 0; i < d; ++i) {
      auto [m, n] = s.label(i);
      if (m < s.n_cut() - inner_margin && n < s.n_cut() - inner_margin) idx.push_back(b * d + i);
    }
  for (size_t p = 0; p < idx.size(); ++p)
    for (size_t q = p; q < idx.size(); ++q) {
      cplx v(g(rng), p == q ? 0.0 : g(rng));
      h(idx[p], idx[q]) = v;
      h(idx[q], idx[p]) = std::conj(v);
    }
  double nrm = op_norm(h);
  if (nrm > 0) h *= scale / nrm;
  return BlockOp(s, rank, rank, h);
}

// U = exp(iH) U0 with U0 the embedding of the first `cols` summands.
template <class Rng>
Isometry random_isometry(const FockSpace& s, int rows, int cols, int inner_margin, double scale, Rng& rng) {
  if (cols > rows) throw ShapeMismatch("isometry needs cols <= rows");
  BlockOp h = random_interior_hermitian(s, rows, inner_margin, scale, rng);
  Mat u0 = Mat::Zero(rows * s.dim(), cols * s.dim());
  u0.topLeftCorner(cols * s.dim(), cols * s.dim()).setIdentity();
  return Isometry::with_identity(BlockOp(s, rows, cols, expi_hermitian(h.mat()) * u0));
}

// ---------------------------------------------------------------------------
// ASD residuals: F12 + F34, F13 - F24, F14 + F23 on the interior

inline std::array<double, 3> asd_residual(const Curvature& f) {
  return {interior_norm(f(1, 2) + f(3, 4)), interior_norm(f(1, 3) - f(2, 4)), interior_norm(f(1, 4) + f(2, 3))};
}

// ---------------------------------------------------------------------------
// Spinor reformulation (theta = (1,1))

namespace spin {

inline Eigen::Matrix2cd pauli(int a) {
  Eigen::Matrix2cd s;
  switch (a) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw InvalidArgument("Pauli index must be in 0..3");
  }
  return s;
}

inline Eigen::Matrix4cd xi() {
  Eigen::Matrix4cd m;
  m << 0, 1, 1, -kI,
       1, 0, -1, kI,
       1, -1, 0, kI,
       kI, -kI, -kI, 0;
  return m;
}

inline Eigen::Matrix4cd omega() {
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0), r6 = std::sqrt(6.0);
  Eigen::Matrix4cd m;
  m << 0.5, -0.5, -0.5, 0.5 * kI,
       1.0 / r2, 0, 0, -kI / r2,
       1.0 / r6, std::sqrt(2.0 / 3.0), 0, kI / r6,
       1.0 / (2 * r3), -1.0 / (2 * r3), r3 / 2, kI / (2 * r3);
  return m;
}

inline Eigen::Vector4d xi_eigenvalues() { return Eigen::Vector4d(-3, 1, 1, 1); }

// The three 4x4 matrices whose sandwiches give F12 + F34, F13 - F24, F14 + F23.
inline std::array<Eigen::Matrix4cd, 3> asd_forms() {
  Eigen::Matrix4cd a, b, c;
  a << 0, 1, 0, 0,
       1, 0, 0, 0,
       0, 0, 0, kI,
       0, 0, -kI, 0;
  b << 0, 0, 1, 0,
       0, 0, 0, kI,
       1, 0, 0, 0,
       0, -kI, 0, 0;
  c << 0, 0, 0, -kI,
       0, 0, -1, 0,
       0, -1, 0, 0,
       kI, 0, 0, 0;
  return {a, b, c};
}

// Components v = (s1 x1, s2 x2, s3 x3, x4) as 2x2 spin blocks over `rank`
// copies of the Fock space; spin index outermost.
inline std::array<Mat, 4> coordinate_spinors(const FockSpace& s, int rank) {
  std::array<Mat, 4> v;
  for (int b = 1; b <= 4; ++b) {
    Mat x = kron(Mat::Identity(rank, rank), coordinate(s, b).mat());
    v[b - 1] = kron(b < 4 ? Mat(pauli(b)) : Mat(pauli(0)), x);
  }
  return v;
}

}  // namespace spin

inline void require_unit_theta(const FockSpace& s) {
  if (s.theta().theta12 != 1.0 || s.theta().theta34 != 1.0)
    throw InvalidArgument("spinor reformulation assumes theta12 = theta34 = 1");
}

// p_c = sum_b Omega_cb v_b on C^2 (x) F, as 2x2 block operators.
inline std::array<BlockOp, 4> p_operators(const FockSpace& s) {
  require_unit_theta(s);
  auto v = spin::coordinate_spinors(s, 1);
  Eigen::Matrix4cd om = spin::omega();
  std::array<BlockOp, 4> p;
  for (int c = 0; c < 4; ++c) {
    Mat acc = Mat::Zero(2 * s.dim(), 2 * s.dim());
    for (int b = 0; b < 4; ++b) acc += om(c, b) * v[b];
    p[c] = BlockOp(s, 2, 2, acc);
  }
  return p;
}

namespace detail {

// U^* v_a Q v_b U with U = 1_2 (x) U and Q = 1_2 (x) (1 - U U^*), for all a, b.
inline std::array<std::array<Mat, 4>, 4> spinor_sandwiches(const BlockOp& u) {
  const auto& s = u.space();
  auto pc = projected_coordinates(u);
  std::array<std::array<Mat, 4>, 4> out;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      Eigen::Matrix2cd sa = spin::pauli(a < 3 ? a + 1 : 0), sb = spin::pauli(b < 3 ? b + 1 : 0);
      out[a][b] = kron(Mat(sa * sb), Mat(pc.xu[a].adjoint() * pc.qxu[b]));
    }
  (void)s;
  return out;
}

inline double spinor_form_norm(const BlockOp& u, const std::array<std::array<Mat, 4>, 4>& sw, const Eigen::Matrix4cd& m) {
  Mat acc = Mat::Zero(sw[0][0].rows(), sw[0][0].cols());
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (m(a, b) != cplx(0.0)) acc += m(a, b) * sw[a][b];
  return interior_norm(BlockOp(u.space(), 2 * u.cols(), 2 * u.cols(), acc));
}

}  // namespace detail

// Interior norm of U^*[-3 p0^* Q p0 + p1^* Q p1 + p2^* Q p2 + p3^* Q p3]U.
inline double asd_combined_residual(const Isometry& iso, const Tolerances& tol = {}) {
  require_unit_theta(iso.u.space());
  check_isometry(iso, tol.norm);
  const BlockOp& u = iso.u;
  const auto& s = u.space();
  const int rows = u.rows();
  auto v = spin::coordinate_spinors(s, rows);
  Mat u2 = kron(Mat::Identity(2, 2), u.mat());
  Eigen::Matrix4cd om = spin::omega();
  Eigen::Vector4d lam = spin::xi_eigenvalues();
  Mat acc = Mat::Zero(u2.cols(), u2.cols());
  for (int c = 0; c < 4; ++c) {
    Mat pu = Mat::Zero(u2.rows(), u2.cols());
    for (int b = 0; b < 4; ++b) pu += om(c, b) * (v[b] * u2);
    Mat qpu = pu - u2 * (u2.adjoint() * pu);
    acc += lam(c) * (pu.adjoint() * qpu);
  }
  return interior_norm(BlockOp(s, 2 * u.cols(), 2 * u.cols(), acc));
}

// Interior norms of the three separate spinor forms, in the order of asd_residual.
inline std::array<double, 3> asd_spinor_residuals(const Isometry& iso, const Tolerances& tol = {}) {
  require_unit_theta(iso.u.space());
  check_isometry(iso, tol.norm);
  auto sw = detail::spinor_sandwiches(iso.u);
  auto forms = spin::asd_forms();
  return {detail::spinor_form_norm(iso.u, sw, forms[0]), detail::spinor_form_norm(iso.u, sw, forms[1]),
          detail::spinor_form_norm(iso.u, sw, forms[2])};
}

// ---------------------------------------------------------------------------
// Action and topological number

struct TraceOptions {
  TraceMeasure measure = TraceMeasure::Weyl;
  bool interior = true;
  std::optional<BlockOp> module_unit;  // trace of E X E instead of X
};

struct TraceValue {
  double value = 0.0;
  double imag = 0.0;
};

// weight * Tr(a b) under the options, without forming the product
inline cplx trace_product(const BlockOp& a, const BlockOp& b, const TraceOptions& opt = {}) {
  const auto& s = a.space();
  RVec mask = opt.interior ? interior_mask(s, a.rows()) : RVec::Ones(a.rows() * s.dim());
  cplx t;
  if (opt.module_unit) {
    const Mat& e = opt.module_unit->mat();
    t = masked_trace_product(e * a.mat(), b.mat() * e, mask);
  } else {
    t = masked_trace_product(a.mat(), b.mat(), mask);
  }
  return measure_weight(s.theta(), opt.measure) * t;
}

// sum over ordered pairs m != n of Tr(F_mn F_mn)
inline TraceValue curvature_square_trace(const Curvature& f, const TraceOptions& opt = {}) {
  cplx total = 0.0;
  for (const auto& c : f.components()) total += 2.0 * trace_product(c, c, opt);
  return {total.real(), total.imag()};
}

// S = (1/g^2) Tr (1/4) F_ij F_ij
inline TraceValue ym_action(const Curvature& f, double g_coupling, const TraceOptions& opt = {}) {
  if (!(g_coupling > 0)) throw InvalidArgument("coupling must be positive");
  TraceValue t = curvature_square_trace(f, opt);
  double k = 0.25 / (g_coupling * g_coupling);
  return {k * t.value, k * t.imag};
}

// Q = (1/16 pi^2) Tr F_mn F_mn
inline TraceValue topological_number(const Curvature& f, const TraceOptions& opt = {}) {
  TraceValue t = curvature_square_trace(f, opt);
  double k = 1.0 / (16.0 * kPi * kPi);
  return {k * t.value, k * t.imag};
}

}  // namespace ncinst
