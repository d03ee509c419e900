#pragma once

// Weyl quantization on the truncated Fock space.
//
// The kernel is built one plane at a time as a displaced, tapered parity
// operator. Its normalization is calibrated so that the symbol of the
// identity is 1 (the k = 0 plane wave); no other constant enters.

#include "fock.hpp"

#include <array>
#include <string>
#include <vector>

namespace ncinst {

struct WaveVector {
  std::array<double, 4> k{0.0, 0.0, 0.0, 0.0};
};

using Point4 = std::array<double, 4>;

// Parity taper: weight 1 up to start*n, raised cosine down to 0 at end*n.
struct WeylOptions {
  double taper_start = 0.25;
  double taper_end = 0.75;
};

namespace weyl {

inline RVec taper(int n, const WeylOptions& opt = {}) {
  double n0 = opt.taper_start * n, n1 = opt.taper_end * n;
  if (!(n1 > n0) || n0 < 0) throw InvalidArgument("taper window must satisfy 0 <= start < end");
  RVec w(n);
  for (int i = 0; i < n; ++i) {
    if (i <= n0) w(i) = 1.0;
    else if (i >= n1) w(i) = 0.0;
    else w(i) = 0.5 * (1.0 + std::cos(kPi * (i - n0) / (n1 - n0)));
  }
  return w;
}

// Diagonal of the tapered parity, already divided by its trace.
inline RVec calibrated_parity(int n, const WeylOptions& opt = {}) {
  RVec w = taper(n, opt);
  for (int i = 1; i < n; i += 2) w(i) = -w(i);
  double tr = w.sum();
  if (std::abs(tr) < 1e-12) throw InvalidArgument("tapered parity has vanishing trace");
  return w / tr;
}

// exp(i(ka*x_a + kb*x_b)) on one plane with [x_a, x_b] = i theta.
inline Mat plane_wave(int n, double theta, double ka, double kb) {
  auto [xa, xb] = detail::plane_coordinates(n, theta);
  return expi_hermitian(ka * xa + kb * xb);
}

// D(y) with D^+ x_a D = x_a + y_a and D^+ x_b D = x_b + y_b.
inline Mat displacement(int n, double theta, double ya, double yb) {
  auto [xa, xb] = detail::plane_coordinates(n, theta);
  return expi_hermitian((yb * xa - ya * xb) / theta);
}

// Single-plane kernel with unit trace.
inline Mat plane_kernel(int n, double theta, double ya, double yb, const WeylOptions& opt = {}) {
  RVec t = calibrated_parity(n, opt);
  if (ya == 0.0 && yb == 0.0) return t.cast<cplx>().asDiagonal();
  Mat d = displacement(n, theta, ya, yb);
  return d * t.cast<cplx>().asDiagonal() * d.adjoint();
}

// Tr(op (a (x) b)) for op on the two-mode space and single-mode a, b.
inline cplx trace_against(const Mat& op, const Mat& a, const Mat& b) {
  Eigen::Index n = a.rows();
  Mat bt = b.transpose();
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a(j, i) == cplx(0.0)) continue;
      s += a(j, i) * op.block(i * n, j * n, n, n).cwiseProduct(bt).sum();
    }
  return s;
}

// Radius of the phase-space disc resolved by one plane.
inline double trust_radius(int n_cut, double theta) { return std::sqrt(std::abs(theta) * n_cut) / 2.0; }

}  // namespace weyl

inline FockOp quantize_plane_wave(const FockSpace& s, const WaveVector& k) {
  const auto& th = s.theta();
  Mat w1 = weyl::plane_wave(s.n_cut(), th.theta12, k.k[0], k.k[1]);
  Mat w2 = weyl::plane_wave(s.n_cut(), th.theta34, k.k[2], k.k[3]);
  return FockOp(s, kron(w1, w2));
}

inline FockOp delta_kernel(const FockSpace& s, const Point4& x, const WeylOptions& opt = {}) {
  const auto& th = s.theta();
  Mat d1 = weyl::plane_kernel(s.n_cut(), th.theta12, x[0], x[1], opt);
  Mat d2 = weyl::plane_kernel(s.n_cut(), th.theta34, x[2], x[3], opt);
  return FockOp(s, kron(d1, d2));
}

// Tr(op * kernel(x)) at each point.
inline std::vector<cplx> symbol(const FockOp& op, const std::vector<Point4>& xs, const WeylOptions& opt = {}) {
  const auto& s = op.space();
  const auto& th = s.theta();
  std::vector<cplx> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    Mat d1 = weyl::plane_kernel(s.n_cut(), th.theta12, x[0], x[1], opt);
    Mat d2 = weyl::plane_kernel(s.n_cut(), th.theta34, x[2], x[3], opt);
    out.push_back(weyl::trace_against(op.mat(), d1, d2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampled functions on a uniform tensor grid

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  double spacing() const { return count > 1 ? (hi - lo) / (count - 1) : 1.0; }
  double point(int i) const { return count > 1 ? lo + i * spacing() : lo; }
};

// values are row-major with axis 0 varying slowest.
struct SampledFunction {
  std::array<GridAxis, 4> axes{};
  std::vector<cplx> values;

  size_t size() const {
    size_t n = 1;
    for (const auto& a : axes) n *= size_t(a.count);
    return n;
  }
  size_t flat(int i0, int i1, int i2, int i3) const {
    return ((size_t(i0) * axes[1].count + i1) * axes[2].count + i2) * axes[3].count + i3;
  }
  Point4 point(int i0, int i1, int i2, int i3) const {
    return {axes[0].point(i0), axes[1].point(i1), axes[2].point(i2), axes[3].point(i3)};
  }

  void validate() const {
    for (const auto& a : axes) {
      if (a.count < 1) throw InvalidArgument("grid axis needs at least one point");
      if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi < a.lo)
        throw InvalidArgument("grid axis extent must be finite with lo <= hi");
    }
    if (values.size() != size()) throw InvalidArgument("sample count does not match the grid");
    for (const auto& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidArgument("non-finite sample");
  }

  template <class F>
  static SampledFunction tabulate(const std::array<GridAxis, 4>& axes, F&& f) {
    SampledFunction out;
    out.axes = axes;
    out.values.resize(out.size());
    for (int a = 0; a < axes[0].count; ++a)
      for (int b = 0; b < axes[1].count; ++b)
        for (int c = 0; c < axes[2].count; ++c)
          for (int d = 0; d < axes[3].count; ++d) out.values[out.flat(a, b, c, d)] = f(out.point(a, b, c, d));
    return out;
  }
};

struct Quantized {
  FockOp op;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> grid_warnings(const FockSpace& s, const SampledFunction& f) {
  std::vector<std::string> w;
  double peak = 0.0, edge = 0.0;
  for (int a = 0; a < f.axes[0].count; ++a)
    for (int b = 0; b < f.axes[1].count; ++b)
      for (int c = 0; c < f.axes[2].count; ++c)
        for (int d = 0; d < f.axes[3].count; ++d) {
          double v = std::abs(f.values[f.flat(a, b, c, d)]);
          peak = std::max(peak, v);
          bool on_edge = a == 0 || b == 0 || c == 0 || d == 0 || a == f.axes[0].count - 1 ||
                         b == f.axes[1].count - 1 || c == f.axes[2].count - 1 || d == f.axes[3].count - 1;
          if (on_edge) edge = std::max(edge, v);
        }
  if (peak > 0 && edge > 1e-3 * peak) w.push_back("samples do not decay at the grid edges");
  for (int ax = 0; ax < 4; ++ax) {
    double th = std::abs(s.theta().for_axis(ax + 1));
    double limit = 2.0 * std::sqrt(th / s.n_cut());
    if (f.axes[ax].count > 1 && f.axes[ax].spacing() > limit)
      w.push_back("grid spacing on axis " + std::to_string(ax + 1) +
                  " is coarser than the kernel resolution; high levels of the result are unreliable");
    double r = weyl::trust_radius(s.n_cut(), th);
    if (f.axes[ax].hi > r || f.axes[ax].lo < -r)
      w.push_back("grid on axis " + std::to_string(ax + 1) + " extends past the trust radius " + std::to_string(r));
  }
  return w;
}

}  // namespace detail

// Riemann sum of f(x) times the kernel, with weight prod(spacing)/((2 pi)^2 |t12 t34|).
inline Quantized quantize_sampled(const FockSpace& s, const SampledFunction& f, const WeylOptions& opt = {}) {
  f.validate();
  const auto& th = s.theta();
  int n = s.n_cut();
  double vol = 1.0;
  for (const auto& a : f.axes) vol *= a.spacing();
  double weight = vol / (4.0 * kPi * kPi * std::abs(th.theta12 * th.theta34));

  std::vector<Mat> k1, k2;
  for (int a = 0; a < f.axes[0].count; ++a)
    for (int b = 0; b < f.axes[1].count; ++b)
      k1.push_back(weyl::plane_kernel(n, th.theta12, f.axes[0].point(a), f.axes[1].point(b), opt));
  for (int c = 0; c < f.axes[2].count; ++c)
    for (int d = 0; d < f.axes[3].count; ++d)
      k2.push_back(weyl::plane_kernel(n, th.theta34, f.axes[2].point(c), f.axes[3].point(d), opt));

  size_t n1 = k1.size(), n2 = k2.size();
  Mat out = Mat::Zero(s.dim(), s.dim());
  for (size_t j = 0; j < n2; ++j) {
    Mat g = Mat::Zero(n, n);
    bool any = false;
    for (size_t i = 0; i < n1; ++i) {
      cplx v = f.values[i * n2 + j];
      if (v == cplx(0.0)) continue;
      g += v * k1[i];
      any = true;
    }
    if (!any) continue;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        if (g(p, q) != cplx(0.0)) out.block(p * n, q * n, n, n) += g(p, q) * k2[j];
  }
  return {FockOp(s, weight * out), detail::grid_warnings(s, f)};
}

}  // namespace ncinst
