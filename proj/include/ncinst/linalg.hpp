#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>

namespace ncinst {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline bool is_hermitian(const Mat& m, double rel = 1e-13) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(max_abs(m), 1e-300);
  return max_abs(m - m.adjoint()) <= rel * scale;
}

// exp(iH) for Hermitian H, through the eigendecomposition.
inline Mat expi_hermitian(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Mat& v = es.eigenvectors();
  Vec ph = (kI * es.eigenvalues().cast<cplx>()).array().exp();
  return v * ph.asDiagonal() * v.adjoint();
}

// Largest singular value.
inline double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (is_hermitian(a)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Mat g = a.rows() <= a.cols() ? Mat(a * a.adjoint()) : Mat(a.adjoint() * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Sum of (a*b)_ii over the rows selected by mask (mask entries 0 or 1),
// without forming the product.
inline cplx masked_trace_product(const Mat& a, const Mat& b, const RVec& mask) {
  Eigen::RowVectorXcd diag = a.transpose().cwiseProduct(b).colwise().sum();
  return diag * mask.cast<cplx>();
}

}  // namespace ncinst
