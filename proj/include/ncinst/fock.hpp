#pragma once

// Truncated two-mode Fock space and operators on it.
//
// Basis states |m,n> with 0 <= m,n < n_cut are stored at index m*n_cut + n.
// Mode 1 (index m) carries the (x1,x2) plane, mode 2 (index n) the (x3,x4)
// plane. Block operators act on C^rows (x) F with the block index outermost.

#include "errors.hpp"
#include "linalg.hpp"

#include <array>
#include <string>
#include <utility>

namespace ncinst {

struct Theta {
  double theta12 = 1.0;
  double theta34 = 1.0;

  void validate() const {
    if (!std::isfinite(theta12) || !std::isfinite(theta34))
      throw InvalidArgument("theta must be finite");
    if (!(theta12 > 0.0)) throw InvalidArgument("theta12 must be positive");
    if (theta34 == 0.0) throw InvalidArgument("theta34 must be nonzero");
    if (theta12 + theta34 < 0.0) throw InvalidArgument("theta12 + theta34 must be nonnegative");
  }
  // theta_{pl} for the plane containing axis j (1-based)
  double for_axis(int j) const { return j <= 2 ? theta12 : theta34; }
  bool operator==(const Theta&) const = default;
};

class FockSpace {
 public:
  FockSpace() = default;
  FockSpace(int n_cut, Theta theta, int margin) : n_cut_(n_cut), margin_(margin), theta_(theta) {
    if (n_cut < 2) throw InvalidArgument("n_cut must be at least 2");
    if (margin < 0 || margin > n_cut - 2)
      throw InvalidArgument("margin must lie in [0, n_cut - 2]");
    theta.validate();
  }

  int n_cut() const { return n_cut_; }
  int dim() const { return n_cut_ * n_cut_; }
  int margin() const { return margin_; }
  const Theta& theta() const { return theta_; }

  int index(int m, int n) const { return m * n_cut_ + n; }
  std::pair<int, int> label(int idx) const { return {idx / n_cut_, idx % n_cut_}; }
  int interior_cut() const { return n_cut_ - margin_; }
  bool in_interior(int idx) const {
    auto [m, n] = label(idx);
    return m < interior_cut() && n < interior_cut();
  }
  FockSpace with_margin(int margin) const { return FockSpace(n_cut_, theta_, margin); }

  bool operator==(const FockSpace&) const = default;

 private:
  int n_cut_ = 2;
  int margin_ = 0;
  Theta theta_{};
};

inline FockSpace make_space(int n_cut, Theta theta, int margin) {
  return FockSpace(n_cut, theta, margin);
}

class FockOp;

// rows x cols array of Fock operators, stored as one dense matrix.
class BlockOp {
 public:
  BlockOp() = default;
  BlockOp(FockSpace space, int rows, int cols, Mat m)
      : space_(space), rows_(rows), cols_(cols), m_(std::move(m)) {
    if (rows < 0 || cols < 0) throw ShapeMismatch("negative block shape");
    if (m_.rows() != rows * space_.dim() || m_.cols() != cols * space_.dim())
      throw ShapeMismatch("matrix size does not match block shape");
    if (!m_.allFinite()) throw InvalidArgument("operator has non-finite entries");
  }

  static BlockOp zero(const FockSpace& s, int rows, int cols) {
    return BlockOp(s, rows, cols, Mat::Zero(rows * s.dim(), cols * s.dim()));
  }
  static BlockOp identity(const FockSpace& s, int n) {
    return BlockOp(s, n, n, Mat::Identity(n * s.dim(), n * s.dim()));
  }
  // Block-diagonal copies of one Fock operator.
  static BlockOp diagonal(const FockSpace& s, int n, const Mat& f) {
    return BlockOp(s, n, n, kron(Mat::Identity(n, n), f));
  }

  const FockSpace& space() const { return space_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Mat& mat() const { return m_; }

  FockOp block(int i, int j) const;
  void set_block(int i, int j, const Mat& f) {
    check_index(i, j);
    int d = space_.dim();
    if (f.rows() != d || f.cols() != d) throw ShapeMismatch("block has wrong size");
    m_.block(i * d, j * d, d, d) = f;
  }

  BlockOp adjoint() const { return BlockOp(space_, cols_, rows_, m_.adjoint()); }

 private:
  void check_index(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw ShapeMismatch("block index out of range");
  }

  FockSpace space_{};
  int rows_ = 0;
  int cols_ = 0;
  Mat m_;
};

class FockOp : public BlockOp {
 public:
  FockOp() = default;
  FockOp(FockSpace space, Mat m) : BlockOp(space, 1, 1, std::move(m)) {}

  static FockOp zero(const FockSpace& s) { return FockOp(s, Mat::Zero(s.dim(), s.dim())); }
  static FockOp identity(const FockSpace& s) { return FockOp(s, Mat::Identity(s.dim(), s.dim())); }

  FockOp adjoint() const { return FockOp(space(), mat().adjoint()); }
};

inline FockOp BlockOp::block(int i, int j) const {
  check_index(i, j);
  int d = space_.dim();
  return FockOp(space_, m_.block(i * d, j * d, d, d));
}

inline void require_same_space(const BlockOp& a, const BlockOp& b) {
  if (!(a.space() == b.space())) throw SpaceMismatch();
}

// Arithmetic. FockOp overloads keep the narrower type.
inline BlockOp operator+(const BlockOp& a, const BlockOp& b) {
  require_same_space(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("sum of different shapes");
  return BlockOp(a.space(), a.rows(), a.cols(), a.mat() + b.mat());
}
inline BlockOp operator-(const BlockOp& a, const BlockOp& b) {
  require_same_space(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeMismatch("difference of different shapes");
  return BlockOp(a.space(), a.rows(), a.cols(), a.mat() - b.mat());
}
inline BlockOp operator*(const BlockOp& a, const BlockOp& b) {
  require_same_space(a, b);
  if (a.cols() != b.rows()) throw ShapeMismatch("product of incompatible shapes");
  return BlockOp(a.space(), a.rows(), b.cols(), a.mat() * b.mat());
}
inline BlockOp operator*(cplx s, const BlockOp& a) { return BlockOp(a.space(), a.rows(), a.cols(), s * a.mat()); }
inline BlockOp operator-(const BlockOp& a) { return BlockOp(a.space(), a.rows(), a.cols(), -a.mat()); }

inline FockOp operator+(const FockOp& a, const FockOp& b) {
  require_same_space(a, b);
  return FockOp(a.space(), a.mat() + b.mat());
}
inline FockOp operator-(const FockOp& a, const FockOp& b) {
  require_same_space(a, b);
  return FockOp(a.space(), a.mat() - b.mat());
}
inline FockOp operator*(const FockOp& a, const FockOp& b) {
  require_same_space(a, b);
  return FockOp(a.space(), a.mat() * b.mat());
}
inline FockOp operator*(cplx s, const FockOp& a) { return FockOp(a.space(), s * a.mat()); }
inline FockOp operator-(const FockOp& a) { return FockOp(a.space(), -a.mat()); }

inline BlockOp adjoint(const BlockOp& a) { return a.adjoint(); }
inline FockOp adjoint(const FockOp& a) { return a.adjoint(); }

inline BlockOp commutator(const BlockOp& a, const BlockOp& b) { return a * b - b * a; }
inline FockOp commutator(const FockOp& a, const FockOp& b) { return a * b - b * a; }

inline double op_norm(const BlockOp& a) { return op_norm(a.mat()); }

// ---------------------------------------------------------------------------
// Ladder and coordinate operators

namespace detail {

// Single-mode annihilation operator a on n levels.
inline Mat ladder_1d(int n) {
  Mat a = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) a(i - 1, i) = std::sqrt(double(i));
  return a;
}

inline void check_mode(int mode) {
  if (mode != 1 && mode != 2) throw InvalidArgument("mode must be 1 or 2");
}
inline void check_axis(int axis) {
  if (axis < 1 || axis > 4) throw InvalidArgument("axis must be in 1..4");
}

// Single-plane coordinate pair (first, second) on n levels with [first, second] = i*theta.
inline std::pair<Mat, Mat> plane_coordinates(int n, double theta) {
  Mat a = ladder_1d(n);
  double s = std::sqrt(std::abs(theta) / 2.0);
  Mat first = s * (a + a.adjoint());
  Mat second = (-kI * s) * (a - a.adjoint());
  if (theta < 0) second = -second;
  return {first, second};
}

inline Mat embed_mode(const Mat& op, int mode, int n) {
  Mat id = Mat::Identity(n, n);
  return mode == 1 ? kron(op, id) : kron(id, op);
}

inline SpMat sparse_coordinate(const FockSpace& s, int axis) {
  int n = s.n_cut();
  int mode = axis <= 2 ? 1 : 2;
  auto [first, second] = plane_coordinates(n, s.theta().for_axis(axis));
  const Mat& x = (axis % 2 == 1) ? first : second;
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(2 * s.dim());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (x(p, q) == cplx(0.0)) continue;
      for (int r = 0; r < n; ++r) {
        if (mode == 1) t.emplace_back(p * n + r, q * n + r, x(p, q));
        else t.emplace_back(r * n + p, r * n + q, x(p, q));
      }
    }
  SpMat out(s.dim(), s.dim());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// Apply a Fock-level sparse operator on the left of every block row.
inline Mat left_apply(const SpMat& x, const Mat& m, int d) {
  Mat out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); r += d) out.middleRows(r, d).noalias() = x * m.middleRows(r, d);
  return out;
}
// Apply it on the right of every block column.
inline Mat right_apply(const Mat& m, const SpMat& x, int d) {
  Mat out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); c += d) out.middleCols(c, d).noalias() = m.middleCols(c, d) * x;
  return out;
}

// Coefficient and partner axis of the inner derivation d_j = c [x_partner, .]
inline std::pair<cplx, int> derivation_rule(const Theta& th, int j) {
  switch (j) {
    case 1: return {kI / th.theta12, 2};
    case 2: return {-kI / th.theta12, 1};
    case 3: return {kI / th.theta34, 4};
    case 4: return {-kI / th.theta34, 3};
  }
  throw InvalidArgument("derivation index must be in 1..4");
}

inline Mat derive(const FockSpace& s, int j, const Mat& m) {
  auto [c, partner] = derivation_rule(s.theta(), j);
  SpMat x = sparse_coordinate(s, partner);
  return c * (left_apply(x, m, s.dim()) - right_apply(m, x, s.dim()));
}

}  // namespace detail

inline FockOp annihilation(const FockSpace& s, int mode) {
  detail::check_mode(mode);
  return FockOp(s, detail::embed_mode(detail::ladder_1d(s.n_cut()), mode, s.n_cut()));
}

inline FockOp creation(const FockSpace& s, int mode) { return annihilation(s, mode).adjoint(); }

inline FockOp number(const FockSpace& s, int mode) {
  detail::check_mode(mode);
  Mat a = detail::ladder_1d(s.n_cut());
  return FockOp(s, detail::embed_mode(a.adjoint() * a, mode, s.n_cut()));
}

// x1 = sqrt(t12/2)(a1 + a1^+), x2 = -i sqrt(t12/2)(a1 - a1^+), same for x3, x4 on
// mode 2. For theta34 < 0 the sign of x4 flips so that [x3, x4] = i theta34.
inline FockOp coordinate(const FockSpace& s, int axis) {
  detail::check_axis(axis);
  int mode = axis <= 2 ? 1 : 2;
  auto [first, second] = detail::plane_coordinates(s.n_cut(), s.theta().for_axis(axis));
  return FockOp(s, detail::embed_mode(axis % 2 == 1 ? first : second, mode, s.n_cut()));
}

inline FockOp parity(const FockSpace& s) {
  Mat p = Mat::Zero(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    auto [m, n] = s.label(i);
    p(i, i) = ((m + n) % 2 == 0) ? 1.0 : -1.0;
  }
  return FockOp(s, p);
}

inline Vec basis_ket(const FockSpace& s, int m, int n) {
  if (m < 0 || n < 0 || m >= s.n_cut() || n >= s.n_cut()) throw InvalidArgument("basis label out of range");
  Vec v = Vec::Zero(s.dim());
  v(s.index(m, n)) = 1.0;
  return v;
}

// |m,n><m2,n2|
inline FockOp ket_bra(const FockSpace& s, int m, int n, int m2, int n2) {
  return FockOp(s, basis_ket(s, m, n) * basis_ket(s, m2, n2).adjoint());
}

// ---------------------------------------------------------------------------
// Inner derivations: d1 = (i/t12)[x2,.], d2 = (-i/t12)[x1,.], d3 = (i/t34)[x4,.],
// d4 = (-i/t34)[x3,.], applied to every block.

inline FockOp derivation(int j, const FockOp& f) { return FockOp(f.space(), detail::derive(f.space(), j, f.mat())); }
inline BlockOp derivation(int j, const BlockOp& f) {
  return BlockOp(f.space(), f.rows(), f.cols(), detail::derive(f.space(), j, f.mat()));
}
inline FockOp derivation(const FockSpace& s, int j, const FockOp& f) {
  if (!(s == f.space())) throw SpaceMismatch();
  return derivation(j, f);
}

// ---------------------------------------------------------------------------
// Interior machinery

// 1 on interior basis states, 0 elsewhere; tiled over `blocks` copies.
inline RVec interior_mask(const FockSpace& s, int blocks = 1) {
  RVec m(s.dim() * blocks);
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < s.dim(); ++i) m(b * s.dim() + i) = s.in_interior(i) ? 1.0 : 0.0;
  return m;
}

inline std::vector<int> interior_indices(const FockSpace& s, int blocks = 1) {
  std::vector<int> idx;
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < s.dim(); ++i)
      if (s.in_interior(i)) idx.push_back(b * s.dim() + i);
  return idx;
}

inline FockOp interior_projector(const FockSpace& s) {
  return FockOp(s, interior_mask(s).cast<cplx>().asDiagonal());
}

// P_int X P_int restricted to interior rows and columns.
inline Mat interior_part(const BlockOp& a) {
  auto ri = interior_indices(a.space(), a.rows());
  auto ci = interior_indices(a.space(), a.cols());
  return a.mat()(ri, ci);
}

inline double interior_norm(const BlockOp& a) { return op_norm(interior_part(a)); }
inline double interior_max_abs(const BlockOp& a) { return max_abs(interior_part(a)); }

// ---------------------------------------------------------------------------
// Traces

enum class TraceMeasure {
  Plain,  // sum of diagonal entries
  Theta,  // pi^2 |t12 t34| times the plain trace
  Weyl,   // (2 pi)^2 |t12 t34| times the plain trace; the Weyl-consistent volume
};

inline double measure_weight(const Theta& th, TraceMeasure m) {
  switch (m) {
    case TraceMeasure::Plain: return 1.0;
    case TraceMeasure::Theta: return kPi * kPi * std::abs(th.theta12 * th.theta34);
    case TraceMeasure::Weyl: return 4.0 * kPi * kPi * std::abs(th.theta12 * th.theta34);
  }
  return 1.0;
}

inline cplx fock_trace(const BlockOp& a) {
  if (a.rows() != a.cols()) throw ShapeMismatch("trace of a non-square block operator");
  return a.mat().trace();
}

inline cplx trace_theta(const BlockOp& a) {
  return measure_weight(a.space().theta(), TraceMeasure::Theta) * fock_trace(a);
}

inline cplx trace_weyl(const BlockOp& a) {
  return measure_weight(a.space().theta(), TraceMeasure::Weyl) * fock_trace(a);
}

// Plain trace over interior diagonal entries only.
inline cplx interior_trace(const BlockOp& a) {
  if (a.rows() != a.cols()) throw ShapeMismatch("trace of a non-square block operator");
  return interior_mask(a.space(), a.rows()).cast<cplx>().dot(a.mat().diagonal());
}

}  // namespace ncinst
