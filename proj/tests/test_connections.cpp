#include <gtest/gtest.h>

#include <ncinst/connections.hpp>

#include <random>

using namespace ncinst;

namespace {

const Theta kUnit{1.0, 1.0};

Mat random_hermitian(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Mat h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = cplx(g(rng), g(rng));
  return (h + h.adjoint()) / 2.0;
}

// Random Fock vector supported on levels < l.
Vec low_vector(const FockSpace& s, int l, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Vec v = Vec::Zero(s.dim());
  for (int m = 0; m < l; ++m)
    for (int n = 0; n < l; ++n) v(s.index(m, n)) = cplx(g(rng), g(rng));
  return v / v.norm();
}

// Random r x c block operator supported on levels < l in both indices.
Mat low_block(const FockSpace& s, int r, int c, int l, std::mt19937& rng) {
  Mat m = Mat::Zero(r * s.dim(), c * s.dim());
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < c; ++q) {
      Mat blk = Mat::Zero(s.dim(), s.dim());
      for (int i = 0; i < 3; ++i) blk += low_vector(s, l, rng) * low_vector(s, l, rng).adjoint();
      m.block(p * s.dim(), q * s.dim(), s.dim(), s.dim()) = blk;
    }
  return m;
}

// theta^{-1} for the block-diagonal theta matrix.
double theta_inverse(const Theta& th, int m, int n) {
  if (m == 1 && n == 2) return -1.0 / th.theta12;
  if (m == 2 && n == 1) return 1.0 / th.theta12;
  if (m == 3 && n == 4) return -1.0 / th.theta34;
  if (m == 4 && n == 3) return 1.0 / th.theta34;
  return 0.0;
}

}  // namespace

TEST(ConnectionFromIsometry, TrivialCases) {
  auto s = make_space(6, kUnit, 1);
  auto c = connection_from_isometry(Isometry::with_identity(BlockOp::identity(s, 2)));
  for (const auto& a : c.a) EXPECT_EQ(max_abs(a.mat()), 0.0);

  Mat v(2, 2);
  v << 1, 1, kI, -kI;
  v /= std::sqrt(2.0);
  BlockOp u(s, 2, 2, kron(v, Mat::Identity(s.dim(), s.dim())));
  auto c2 = connection_from_isometry(Isometry::with_identity(u));
  for (const auto& a : c2.a) EXPECT_LT(max_abs(a.mat()), 1e-14);
}

TEST(ConnectionFromIsometry, RejectsNonIsometry) {
  auto s = make_space(5, kUnit, 1);
  BlockOp u = 2.0 * BlockOp::identity(s, 1);
  EXPECT_THROW(connection_from_isometry(Isometry::with_identity(u)), ToleranceError);
}

TEST(ConnectionFromIsometry, AdjointIdentity) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(5);
  auto iso = random_isometry(s, 2, 1, 6, 1.5, rng);
  for (int j = 1; j <= 4; ++j) {
    BlockOp lhs = iso.u.adjoint() * derivation(j, iso.u) + derivation(j, iso.u.adjoint()) * iso.u;
    EXPECT_LT(interior_norm(lhs), 1e-9);
  }
  EXPECT_NO_THROW(connection_from_isometry(iso));
}

TEST(CurvatureGeneral, TrivialCases) {
  auto s = make_space(5, kUnit, 1);
  std::array<BlockOp, 4> zero{BlockOp::zero(s, 1, 1), BlockOp::zero(s, 1, 1), BlockOp::zero(s, 1, 1), BlockOp::zero(s, 1, 1)};
  auto f = curvature_general(make_connection(zero));
  for (const auto& c : f.components()) EXPECT_EQ(max_abs(c.mat()), 0.0);

  std::array<BlockOp, 4> consts;
  for (int j = 0; j < 4; ++j) consts[j] = cplx(0.0, 0.3 * (j + 1)) * BlockOp::identity(s, 1);
  auto g = curvature_general(make_connection(consts));
  for (const auto& c : g.components()) EXPECT_LT(max_abs(c.mat()), 1e-14);
}

TEST(CurvatureGeneral, Antisymmetry) {
  auto s = make_space(6, kUnit, 1);
  std::mt19937 rng(2);
  auto f = curvature_general(connection_from_isometry(random_isometry(s, 2, 1, 2, 1.0, rng)));
  for (int m = 1; m <= 4; ++m) {
    EXPECT_EQ(max_abs(f(m, m).mat()), 0.0);
    for (int n = 1; n <= 4; ++n) EXPECT_EQ(max_abs((f(m, n) + f(n, m)).mat()), 0.0);
  }
}

TEST(CurvatureGeneral, MatchesCovariantDerivativeComposition) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(17);
  const int r = 2;
  // A_j = i * (Hermitian polynomial of degree <= 2 in x with matrix coefficients)
  std::array<BlockOp, 4> a;
  for (int j = 0; j < 4; ++j) {
    Mat h = kron(random_hermitian(r, rng), Mat::Identity(s.dim(), s.dim()));
    for (int l = 1; l <= 4; ++l) {
      h += kron(random_hermitian(r, rng), coordinate(s, l).mat());
      Mat xx = coordinate(s, l).mat() * coordinate(s, l % 4 + 1).mat();
      h += 0.3 * kron(random_hermitian(r, rng), Mat(xx + xx.adjoint()));
    }
    a[j] = BlockOp(s, r, r, kI * h);
  }
  auto conn = make_connection(a);
  auto f = curvature_general(conn);
  auto nabla = [&](int j, const BlockOp& xi) { return derivation(j, xi) + conn.a[j - 1] * xi; };
  for (int trial = 0; trial < 3; ++trial) {
    BlockOp xi(s, r, 1, low_block(s, r, 1, 3, rng));
    for (int m = 1; m <= 4; ++m)
      for (int n = m + 1; n <= 4; ++n) {
        BlockOp oracle = nabla(m, nabla(n, xi)) - nabla(n, nabla(m, xi));
        EXPECT_LT(interior_norm(oracle - f(m, n) * xi), 1e-8) << m << n;
      }
  }
}

TEST(CurvatureProjected, ZeroForUnitary) {
  auto s = make_space(6, kUnit, 1);
  std::mt19937 rng(3);
  auto iso = random_isometry(s, 2, 2, 2, 1.0, rng);
  auto f = curvature_projected(iso);
  for (const auto& c : f.components()) EXPECT_LT(max_abs(c.mat()), 1e-12);
}

TEST(CurvatureProjected, ProjectorIsIdempotent) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(4);
  for (int t = 0; t < 5; ++t) {
    auto iso = random_isometry(s, 3, 1, 6, 2.0, rng);
    Mat q = Mat::Identity(3 * s.dim(), 3 * s.dim()) - iso.u.mat() * iso.u.mat().adjoint();
    EXPECT_LT(op_norm(q * q - q), 1e-10);
  }
}

TEST(CurvatureProjected, AgreesWithGeneralOnTwentyIsometries) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(20240);
  for (int t = 0; t < 20; ++t) {
    int rows = 2 + t % 2;
    auto iso = random_isometry(s, rows, 1 + t % 2 * (rows - 2), 6, 0.5 + 0.1 * t, rng);
    auto fg = curvature_general(connection_from_isometry(iso));
    auto fp = curvature_projected(iso);
    EXPECT_LT(interior_norm(fg - fp), 1e-7) << "isometry " << t;
  }
}

TEST(CurvatureProjected, ExplicitFormulasAtUnitTheta) {
  auto s = make_space(10, kUnit, 2);
  std::mt19937 rng(8);
  auto iso = random_isometry(s, 2, 1, 5, 1.0, rng);
  const Mat& u = iso.u.mat();
  Mat q = Mat::Identity(u.rows(), u.rows()) - u * u.adjoint();
  auto x = [&](int l) { return kron(Mat::Identity(2, 2), coordinate(s, l).mat()); };
  auto form = [&](int a, int b) { return Mat(u.adjoint() * (x(a) * q * x(b) - x(b) * q * x(a)) * u); };
  auto f = curvature_projected(iso);
  EXPECT_LT(max_abs(f(1, 2).mat() - form(1, 2)), 1e-10);
  EXPECT_LT(max_abs(f(1, 3).mat() - form(2, 4)), 1e-10);
  EXPECT_LT(max_abs(f(1, 4).mat() - form(3, 2)), 1e-10);
  EXPECT_LT(max_abs(f(2, 3).mat() - form(4, 1)), 1e-10);
  EXPECT_LT(max_abs(f(2, 4).mat() - form(1, 3)), 1e-10);
  EXPECT_LT(max_abs(f(3, 4).mat() - form(3, 4)), 1e-10);
}

TEST(CurvatureProjected, GeneralThetaAgreesWithGeneral) {
  auto s = make_space(12, Theta{0.6, 1.7}, 3);
  std::mt19937 rng(99);
  auto iso = random_isometry(s, 2, 1, 6, 1.0, rng);
  EXPECT_LT(interior_norm(curvature_general(connection_from_isometry(iso)) - curvature_projected(iso)), 1e-7);
}

namespace {

BlockConnection random_block_connection(const FockSpace& s, int k, int n, std::mt19937& rng, bool with_b = true, bool with_d = true) {
  BlockConnection bc{s, k, n, {}, {}, {}};
  for (int j = 0; j < 4; ++j) {
    bc.c[j] = random_hermitian(k, rng);
    for (int i = 0; i < k * n; ++i) bc.b[j].push_back(with_b ? Vec(0.5 * low_vector(s, 3, rng)) : Vec(Vec::Zero(s.dim())));
    Mat d = with_d ? low_block(s, n, n, 3, rng) : Mat::Zero(n * s.dim(), n * s.dim());
    bc.d[j] = BlockOp(s, n, n, (d + d.adjoint()) / 2.0);
  }
  return bc;
}

}  // namespace

TEST(CurvatureBlock, ConstantCurvatureOfProjectedDerivative) {
  Theta th{0.7, 1.3};
  auto s = make_space(8, th, 2);
  BlockConnection bc{s, 1, 1, {}, {}, {}};
  for (int j = 0; j < 4; ++j) {
    bc.c[j] = Mat::Zero(1, 1);
    bc.b[j] = {Vec::Zero(s.dim())};
    bc.d[j] = BlockOp::zero(s, 1, 1);
  }
  auto f = curvature_block(bc);
  Mat p0 = basis_ket(s, 0, 0) * basis_ket(s, 0, 0).adjoint();
  for (int m = 1; m <= 4; ++m)
    for (int n = 1; n <= 4; ++n) {
      if (m == n) continue;
      Mat expect = (-kI * theta_inverse(th, m, n)) * p0;
      EXPECT_LT(max_abs(f(m, n).block(0, 0).mat() - expect), 1e-12) << m << n;
      EXPECT_EQ(max_abs(f(m, n).block(1, 1).mat()), 0.0);
    }
}

TEST(CurvatureBlock, OffDiagonalVanishesWithoutB) {
  auto s = make_space(8, kUnit, 2);
  std::mt19937 rng(1);
  auto bc = random_block_connection(s, 2, 1, rng, false, false);
  auto f = curvature_block(bc);
  for (const auto& c : f.components())
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(max_abs(c.block(a, 2).mat()), 0.0);
      EXPECT_EQ(max_abs(c.block(2, a).mat()), 0.0);
    }
}

TEST(CurvatureBlock, MatchesCovariantDerivativeComposition) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(42);
  for (auto [k, n] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
    auto bc = random_block_connection(s, k, n, rng);
    auto f = curvature_block(bc);
    BlockOp p = block_module_projector(s, k, n);
    std::array<BlockOp, 4> a;
    for (int j = 1; j <= 4; ++j) a[j - 1] = block_potential(bc, j);
    auto nabla = [&](int j, const BlockOp& xi) { return p * derivation(j, xi) + kI * (a[j - 1] * xi); };
    for (int trial = 0; trial < 2; ++trial) {
      BlockOp xi = p * BlockOp(s, k + n, 1, low_block(s, k + n, 1, 3, rng));
      for (int m = 1; m <= 4; ++m)
        for (int nn = m + 1; nn <= 4; ++nn) {
          BlockOp oracle = nabla(m, nabla(nn, xi)) - nabla(nn, nabla(m, xi));
          EXPECT_LT(interior_norm(oracle - f(m, nn) * xi), 1e-8) << k << n << " " << m << nn;
        }
    }
  }
}

TEST(Gauge, IdentityIsNoOp) {
  auto s = make_space(6, kUnit, 1);
  std::mt19937 rng(6);
  auto conn = connection_from_isometry(random_isometry(s, 2, 1, 3, 1.0, rng));
  auto g = BlockOp::identity(s, 1);
  auto c2 = gauge_transform(g, conn);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(max_abs(c2.a[j].mat() - conn.a[j].mat()), 0.0);
}

TEST(Gauge, RejectsNonUnitary) {
  auto s = make_space(5, kUnit, 1);
  std::mt19937 rng(6);
  auto conn = connection_from_isometry(random_isometry(s, 2, 1, 2, 1.0, rng));
  EXPECT_THROW(gauge_transform(2.0 * BlockOp::identity(s, 1), conn), ToleranceError);
}

TEST(Gauge, CurvatureCovariance) {
  auto s = make_space(12, kUnit, 3);
  std::mt19937 rng(31);
  auto conn = connection_from_isometry(random_isometry(s, 2, 1, 6, 1.0, rng));
  auto f = curvature_general(conn);
  auto g = gauge_element({random_interior_hermitian(s, 1, 7, 1.0, rng), random_interior_hermitian(s, 1, 7, 0.7, rng)});
  auto f_recomputed = curvature_general(gauge_transform(g, conn));
  auto f_conj = gauge_transform_curvature(g, f);
  EXPECT_LT(interior_norm(f_recomputed - f_conj), 1e-8);

  double s0 = ym_action(f, 1.0).value, s1 = ym_action(f_recomputed, 1.0).value;
  EXPECT_LT(std::abs(s1 - s0), 1e-6 * std::abs(s0));
  auto r0 = asd_residual(f), r1 = asd_residual(f_recomputed);
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(r1[i] - r0[i]), 1e-6 * std::max(1.0, r0[i]));
}

TEST(Asd, ZeroCurvature) {
  auto s = make_space(5, kUnit, 1);
  std::array<BlockOp, 6> z;
  for (auto& c : z) c = BlockOp::zero(s, 1, 1);
  auto r = asd_residual(Curvature(z));
  for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(Asd, ConstantCurvatureBackgroundIsSelfDual) {
  for (double theta : {1.0, 2.0}) {
    auto s = make_space(8, Theta{theta, theta}, 2);
    BlockConnection bc{s, 1, 0, {}, {}, {}};
    for (int j = 0; j < 4; ++j) {
      bc.c[j] = Mat::Zero(1, 1);
      bc.d[j] = BlockOp(s, 0, 0, Mat(0, 0));
    }
    auto r = asd_residual(curvature_block(bc));
    // F_jl = -i theta^{-1}_jl gives |F12 + F34| = 2/theta
    EXPECT_NEAR(r[0], 2.0 / theta, 1e-12);
    EXPECT_NEAR(r[1], 0.0, 1e-12);
    EXPECT_NEAR(r[2], 0.0, 1e-12);
  }
}

TEST(Spinor, PauliAlgebra) {
  using spin::pauli;
  auto i2 = Eigen::Matrix2cd::Identity();
  EXPECT_EQ((pauli(1) * pauli(2) - kI * pauli(3)).norm(), 0.0);
  EXPECT_EQ((pauli(2) * pauli(3) - kI * pauli(1)).norm(), 0.0);
  EXPECT_EQ((pauli(3) * pauli(1) - kI * pauli(2)).norm(), 0.0);
  for (int a = 1; a <= 3; ++a)
    for (int b = 1; b <= 3; ++b) {
      Eigen::Matrix2cd anti = pauli(a) * pauli(b) + pauli(b) * pauli(a);
      EXPECT_EQ((anti - (a == b ? 2.0 : 0.0) * i2).norm(), 0.0);
    }
}

TEST(Spinor, OmegaDiagonalizesXi) {
  Eigen::Matrix4cd om = spin::omega();
  EXPECT_LT((om.adjoint() * om - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::Matrix4cd lam = spin::xi_eigenvalues().cast<cplx>().asDiagonal();
  EXPECT_LT((spin::xi() - om.adjoint() * lam * om).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Spinor, AsdFormsAreHermitianInvolutionsSummingToXi) {
  Eigen::Matrix4cd sum = Eigen::Matrix4cd::Zero();
  for (const auto& m : spin::asd_forms()) {
    EXPECT_EQ((m - m.adjoint()).norm(), 0.0);
    EXPECT_EQ((m * m - Eigen::Matrix4cd::Identity()).norm(), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(es.eigenvalues()(i)), 1.0, 1e-14);
    sum += m;
  }
  EXPECT_EQ((sum - spin::xi()).norm(), 0.0);
}

TEST(Spinor, POperatorsMatchExplicitFormulas) {
  auto s = make_space(4, kUnit, 0);
  auto p = p_operators(s);
  auto v = spin::coordinate_spinors(s, 1);
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0), r6 = std::sqrt(6.0);
  Mat p0 = v[0] / 2.0 - v[1] / 2.0 - v[2] / 2.0 + (kI / 2.0) * v[3];
  Mat p1 = v[0] / r2 - (kI / r2) * v[3];
  Mat p2 = v[0] / r6 + std::sqrt(2.0 / 3.0) * v[1] + (kI / r6) * v[3];
  Mat p3 = v[0] / (2 * r3) - v[1] / (2 * r3) + (r3 / 2) * v[2] + (kI / (2 * r3)) * v[3];
  EXPECT_LT(max_abs(p[0].mat() - p0), 1e-14);
  EXPECT_LT(max_abs(p[1].mat() - p1), 1e-14);
  EXPECT_LT(max_abs(p[2].mat() - p2), 1e-14);
  EXPECT_LT(max_abs(p[3].mat() - p3), 1e-14);
  EXPECT_THROW(p_operators(make_space(4, Theta{1.0, 2.0}, 0)), InvalidArgument);
}

TEST(Spinor, CombinedResidualVanishesForUnitary) {
  auto s = make_space(6, kUnit, 1);
  std::mt19937 rng(12);
  EXPECT_LT(asd_combined_residual(random_isometry(s, 2, 2, 2, 1.0, rng)), 1e-12);
}

TEST(Spinor, SeparateFormsReproduceAsdResiduals) {
  auto s = make_space(10, kUnit, 2);
  std::mt19937 rng(13);
  auto iso = random_isometry(s, 2, 1, 5, 1.0, rng);
  auto direct = asd_residual(curvature_projected(iso));
  auto forms = asd_spinor_residuals(iso);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(forms[i], direct[i], 1e-9 * std::max(1.0, direct[i]));
  double combined = asd_combined_residual(iso);
  EXPECT_GT(combined, 1e-3);
  // combined = |i(s3 (x) R1 + s2 (x) R2 + s1 (x) R3)|, which dominates each |R_i|
  auto f = curvature_projected(iso);
  Mat r1 = (f(1, 2) + f(3, 4)).mat(), r2 = (f(1, 3) - f(2, 4)).mat(), r3 = (f(1, 4) + f(2, 3)).mat();
  Mat expect = kI * (kron(Mat(spin::pauli(3)), r1) + kron(Mat(spin::pauli(2)), r2) + kron(Mat(spin::pauli(1)), r3));
  EXPECT_NEAR(combined, interior_norm(BlockOp(s, 2, 2, expect)), 1e-9 * combined);
  for (double d : direct) EXPECT_GE(combined * (1 + 1e-9), d);
}

TEST(Traces, ZeroAndDefinitionalIdentity) {
  auto s = make_space(8, kUnit, 2);
  std::array<BlockOp, 6> z;
  for (auto& c : z) c = BlockOp::zero(s, 1, 1);
  EXPECT_EQ(ym_action(Curvature(z), 1.0).value, 0.0);
  EXPECT_EQ(topological_number(Curvature(z)).value, 0.0);

  std::mt19937 rng(14);
  auto f = curvature_projected(random_isometry(s, 2, 1, 4, 1.0, rng));
  for (double g : {0.5, 1.0, 3.0}) {
    double q = topological_number(f).value;
    double act = ym_action(f, g).value;
    EXPECT_NEAR(q, g * g / (4 * kPi * kPi) * act, 1e-10 * std::max(1.0, std::abs(q)));
  }
  TraceOptions theta_measure{TraceMeasure::Theta, true, std::nullopt};
  EXPECT_NEAR(topological_number(f).value, 4.0 * topological_number(f, theta_measure).value, 1e-10);
  EXPECT_LT(std::abs(topological_number(f).imag), 1e-6 * std::max(1.0, std::abs(topological_number(f).value)));
}
