#include <gtest/gtest.h>

#include <ncinst/fock.hpp>

#include <random>

using namespace ncinst;

namespace {

const Theta kUnit{1.0, 1.0};

Mat interior(const FockSpace& s, const Mat& m) {
  return interior_part(FockOp(s, m));
}

}  // namespace

TEST(FockSpace, Dimensions) {
  EXPECT_EQ(make_space(2, kUnit, 0).dim(), 4);
  EXPECT_EQ(make_space(8, kUnit, 2).dim(), 64);
}

TEST(FockSpace, RejectsBadInput) {
  EXPECT_THROW(make_space(8, Theta{1.0, -2.0}, 0), InvalidArgument);
  EXPECT_THROW(make_space(1, kUnit, 0), InvalidArgument);
  EXPECT_THROW(make_space(8, kUnit, 7), InvalidArgument);
  EXPECT_THROW(make_space(8, Theta{0.0, 1.0}, 0), InvalidArgument);
  EXPECT_NO_THROW(make_space(8, Theta{2.0, -1.0}, 0));
}

TEST(FockSpace, BasisEnumerationIsBijective) {
  auto s = make_space(5, kUnit, 1);
  std::vector<int> seen(s.dim(), 0);
  for (int m = 0; m < 5; ++m)
    for (int n = 0; n < 5; ++n) {
      int i = s.index(m, n);
      ++seen[i];
      EXPECT_EQ(s.label(i), std::make_pair(m, n));
    }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Ladder, CreationActionAndTruncation) {
  auto s = make_space(2, kUnit, 0);
  Mat c1 = creation(s, 1).mat();
  EXPECT_EQ(c1 * basis_ket(s, 0, 0), basis_ket(s, 1, 0));
  EXPECT_EQ((c1 * basis_ket(s, 1, 0)).norm(), 0.0);
  Mat c1s = creation(s, 1).adjoint().mat();
  EXPECT_EQ(c1s * basis_ket(s, 1, 1), basis_ket(s, 0, 1));
  EXPECT_EQ((c1s * basis_ket(s, 0, 1)).norm(), 0.0);

  auto big = make_space(6, kUnit, 0);
  Mat c = creation(big, 2).mat();
  EXPECT_NEAR(std::abs(c(big.index(2, 4), big.index(2, 3))), 2.0, 1e-15);
}

TEST(Ladder, ModesCommuteExactly) {
  auto s = make_space(7, kUnit, 0);
  auto a1 = annihilation(s, 1), a2 = annihilation(s, 2);
  EXPECT_EQ(max_abs(commutator(a1, a2).mat()), 0.0);
  EXPECT_EQ(max_abs(commutator(a1, a2.adjoint()).mat()), 0.0);
}

TEST(Ladder, CanonicalCommutatorDefectOnlyOnTopLevel) {
  auto s = make_space(6, kUnit, 1);
  for (int mode : {1, 2}) {
    auto a = annihilation(s, mode);
    Mat c = commutator(a, a.adjoint()).mat();
    for (int i = 0; i < s.dim(); ++i) {
      auto [m, n] = s.label(i);
      int level = mode == 1 ? m : n;
      // sqrt(k)^2 is k only up to rounding
      if (level < s.n_cut() - 1) EXPECT_NEAR(std::abs(c(i, i) - 1.0), 0.0, 1e-14);
      else EXPECT_NEAR(c(i, i).real(), 1.0 - s.n_cut(), 1e-13);
    }
    EXPECT_LT(max_abs(interior(s, c - Mat::Identity(s.dim(), s.dim()))), 1e-14);
  }
}

TEST(Coordinates, MatrixElementAndSelfAdjoint) {
  Theta th{0.7, 1.3};
  auto s = make_space(2, th, 0);
  Mat x1 = coordinate(s, 1).mat();
  EXPECT_NEAR(std::abs(x1(s.index(1, 0), s.index(0, 0)) - std::sqrt(0.7 / 2)), 0.0, 1e-15);
  for (int ax = 1; ax <= 4; ++ax) {
    Mat x = coordinate(s, ax).mat();
    EXPECT_EQ(max_abs(x - x.adjoint()), 0.0);
  }
}

TEST(Coordinates, InteriorCommutators) {
  for (Theta th : {Theta{1.0, 1.0}, Theta{0.5, 2.0}, Theta{2.0, -1.5}}) {
    auto s = make_space(9, th, 1);
    Mat id = Mat::Identity(s.dim(), s.dim());
    for (int i = 1; i <= 4; ++i)
      for (int j = 1; j <= 4; ++j) {
        cplx expect = 0.0;
        if (i == 1 && j == 2) expect = kI * th.theta12;
        if (i == 2 && j == 1) expect = -kI * th.theta12;
        if (i == 3 && j == 4) expect = kI * th.theta34;
        if (i == 4 && j == 3) expect = -kI * th.theta34;
        Mat c = commutator(coordinate(s, i), coordinate(s, j)).mat();
        EXPECT_LT(max_abs(interior(s, c - expect * id)), 1e-12) << i << "," << j;
      }
  }
}

TEST(Derivation, KillsIdentityAndDifferentiatesCoordinates) {
  auto s = make_space(10, Theta{0.8, 1.7}, 3);
  auto id = FockOp::identity(s);
  for (int j = 1; j <= 4; ++j) {
    EXPECT_EQ(max_abs(derivation(j, id).mat()), 0.0);
    for (int l = 1; l <= 4; ++l) {
      Mat d = derivation(j, coordinate(s, l)).mat();
      double expect = j == l ? 1.0 : 0.0;
      EXPECT_LT(max_abs(interior(s, d - expect * id.mat())), 1e-12);
    }
  }
}

TEST(Derivation, PowersOfX1) {
  auto s = make_space(12, kUnit, 3);
  Mat x = coordinate(s, 1).mat();
  Mat xn = Mat::Identity(s.dim(), s.dim());
  for (int n = 1; n <= 3; ++n) {
    Mat prev = xn;
    xn = xn * x;
    Mat d = derivation(1, FockOp(s, xn)).mat();
    EXPECT_LT(max_abs(interior(s, d - double(n) * prev)), 1e-10) << n;
  }
}

TEST(Derivation, LeibnizAndCommutingDerivations) {
  auto s = make_space(12, Theta{1.0, 0.6}, 3);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> ax(1, 4);
  for (int trial = 0; trial < 10; ++trial) {
    FockOp a = coordinate(s, ax(rng)) * coordinate(s, ax(rng));
    FockOp b = coordinate(s, ax(rng));
    for (int j = 1; j <= 4; ++j) {
      Mat lhs = derivation(j, a * b).mat() - (derivation(j, a) * b).mat() - (a * derivation(j, b)).mat();
      EXPECT_LT(max_abs(interior(s, lhs)), 1e-10);
      for (int l = 1; l <= 4; ++l) {
        Mat c = derivation(j, derivation(l, a * b)).mat() - derivation(l, derivation(j, a * b)).mat();
        EXPECT_LT(max_abs(interior(s, c)), 1e-10);
      }
    }
  }
}

TEST(Derivation, SpaceMismatchThrows) {
  auto s = make_space(4, kUnit, 0);
  auto t = make_space(5, kUnit, 0);
  EXPECT_THROW(derivation(t, 1, FockOp::identity(s)), SpaceMismatch);
  EXPECT_THROW(commutator(FockOp::identity(s), FockOp::identity(t)), SpaceMismatch);
}

TEST(Interior, Projector) {
  auto s0 = make_space(4, kUnit, 0);
  EXPECT_EQ(max_abs(interior_projector(s0).mat() - Mat::Identity(16, 16)), 0.0);
  auto s = make_space(4, kUnit, 1);
  Mat p = interior_projector(s).mat();
  EXPECT_NEAR(p.trace().real(), 9.0, 0.0);
  EXPECT_EQ(max_abs(p * p - p), 0.0);
  EXPECT_EQ(max_abs(p - p.adjoint()), 0.0);
}

TEST(Trace, TraceThetaExamples) {
  auto s = make_space(3, kUnit, 0);
  EXPECT_NEAR(std::abs(trace_theta(ket_bra(s, 0, 0, 0, 0)) - kPi * kPi), 0.0, 1e-12);
  EXPECT_EQ(trace_theta(FockOp::zero(s)), cplx(0.0));
  EXPECT_NEAR(std::abs(trace_theta(FockOp::identity(s)) - 9.0 * kPi * kPi), 0.0, 1e-12);
  // the Weyl-consistent measure is four times larger
  auto t = make_space(5, Theta{0.5, 2.0}, 0);
  FockOp x = coordinate(t, 1) * coordinate(t, 1);
  EXPECT_NEAR(std::abs(trace_weyl(x) - 4.0 * trace_theta(x)), 0.0, 1e-10);
}

TEST(Trace, BlockTraceSumsDiagonalBlocks) {
  auto s = make_space(3, kUnit, 0);
  BlockOp b = BlockOp::zero(s, 2, 2);
  b.set_block(0, 0, ket_bra(s, 0, 0, 0, 0).mat());
  b.set_block(1, 1, 2.0 * FockOp::identity(s).mat());
  b.set_block(0, 1, FockOp::identity(s).mat());
  EXPECT_NEAR(std::abs(fock_trace(b) - 19.0), 0.0, 1e-14);
}

TEST(Trace, CyclicWhenOneFactorIsInterior) {
  auto s = make_space(8, kUnit, 2);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  Mat a(s.dim(), s.dim()), b(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) {
      a(i, j) = cplx(g(rng), g(rng));
      b(i, j) = cplx(g(rng), g(rng));
    }
  Mat p = interior_projector(s).mat();
  FockOp ai(s, p * a * p), bb(s, b);
  EXPECT_LT(std::abs(trace_theta(ai * bb) - trace_theta(bb * ai)), 1e-9);
}

TEST(Norm, Basics) {
  auto s = make_space(4, kUnit, 0);
  EXPECT_NEAR(op_norm(FockOp::identity(s)), 1.0, 1e-14);
  FockOp x = coordinate(s, 1);
  EXPECT_EQ(max_abs(commutator(x, x).mat()), 0.0);
  Mat a = annihilation(s, 1).mat();
  EXPECT_NEAR(op_norm(a), std::sqrt(3.0), 1e-12);
}
