#pragma once

// Invariant checks shared by the selftest command and the acceptance binary.
// Each measures one number and compares it with a fixed threshold.

#include "io.hpp"

#include <functional>
#include <random>
#include <sstream>

namespace ncinst::checks {

struct Check {
  std::string suite;
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string note;
};

// pass iff value <= tol and finite; tol 0 means bitwise exact
inline Check make_check(std::string suite, std::string name, double value, double tol, std::string note = {}) {
  return {std::move(suite), std::move(name), value, tol, std::isfinite(value) && value <= tol, std::move(note)};
}

// Runs `f`; a thrown library error becomes a failed check carrying the message.
inline Check guarded(const std::string& suite, const std::string& name, double tol, const std::function<Check()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {suite, name, std::numeric_limits<double>::infinity(), tol, false, std::string("threw: ") + e.what()};
  }
}

inline std::string seed_note(unsigned seed) { return "seed " + std::to_string(seed); }

// ---------------------------------------------------------------------------
// Fock algebra

// largest interior deviation of [c_i, c_i^*] from the identity, both modes
inline double ccr_interior_defect(const FockSpace& s) {
  double worst = 0.0;
  Mat id = Mat::Identity(s.dim(), s.dim());
  for (int mode : {1, 2}) {
    auto a = annihilation(s, mode);
    worst = std::max(worst, interior_max_abs(FockOp(s, commutator(a, a.adjoint()).mat() - id)));
  }
  return worst;
}

// The defect sits on the top level only: diagonal entries there are 1 - n_cut,
// and nothing else deviates. Returns the largest deviation from that pattern.
inline double ccr_boundary_pattern(const FockSpace& s) {
  double worst = 0.0;
  for (int mode : {1, 2}) {
    auto a = annihilation(s, mode);
    Mat c = commutator(a, a.adjoint()).mat();
    for (int i = 0; i < s.dim(); ++i) {
      auto [m, n] = s.label(i);
      int level = mode == 1 ? m : n;
      c(i, i) -= level == s.n_cut() - 1 ? 1.0 - s.n_cut() : 1.0;
    }
    worst = std::max(worst, max_abs(c));
  }
  return worst;
}

inline double coordinate_commutator_defect(const FockSpace& s) {
  const Theta& th = s.theta();
  Mat id = Mat::Identity(s.dim(), s.dim());
  double worst = 0.0;
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= 4; ++j) {
      cplx expect = 0.0;
      if (i == 1 && j == 2) expect = kI * th.theta12;
      if (i == 2 && j == 1) expect = -kI * th.theta12;
      if (i == 3 && j == 4) expect = kI * th.theta34;
      if (i == 4 && j == 3) expect = -kI * th.theta34;
      Mat c = commutator(coordinate(s, i), coordinate(s, j)).mat() - expect * id;
      worst = std::max(worst, interior_max_abs(FockOp(s, c)));
    }
  return worst;
}

// Leibniz rule and commuting derivations on products of coordinates whose
// total degree stays within the margin.
template <class Rng>
std::pair<double, double> derivation_defects(const FockSpace& s, int trials, Rng& rng) {
  std::uniform_int_distribution<int> ax(1, 4);
  double leibniz = 0.0, commute = 0.0;
  int deg = std::max(1, s.margin());
  for (int t = 0; t < trials; ++t) {
    FockOp a = FockOp::identity(s);
    int da = std::max(1, deg - 1);
    for (int i = 0; i < da; ++i) a = a * coordinate(s, ax(rng));
    FockOp b = deg > da ? coordinate(s, ax(rng)) : FockOp::identity(s);
    for (int j = 1; j <= 4; ++j) {
      Mat l = derivation(j, a * b).mat() - (derivation(j, a) * b).mat() - (a * derivation(j, b)).mat();
      leibniz = std::max(leibniz, interior_max_abs(FockOp(s, l)));
      for (int k = j + 1; k <= 4; ++k) {
        Mat c = derivation(j, derivation(k, a * b)).mat() - derivation(k, derivation(j, a * b)).mat();
        commute = std::max(commute, interior_max_abs(FockOp(s, c)));
      }
    }
  }
  return {leibniz, commute};
}

// d_1 (x_1^p) = p x_1^{p-1} for p <= 3
inline double x1_power_defect(const FockSpace& s) {
  Mat x = coordinate(s, 1).mat();
  Mat xn = Mat::Identity(s.dim(), s.dim());
  double worst = 0.0;
  for (int p = 1; p <= 3; ++p) {
    Mat prev = xn;
    xn = xn * x;
    worst = std::max(worst, interior_max_abs(FockOp(s, derivation(1, FockOp(s, xn)).mat() - double(p) * prev)));
  }
  return worst;
}

// relative |Tr(AB) - Tr(BA)| with A interior-supported and B arbitrary
template <class Rng>
double trace_cyclicity_defect(const FockSpace& s, Rng& rng) {
  std::normal_distribution<double> g;
  Mat a(s.dim(), s.dim()), b(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) {
      a(i, j) = cplx(g(rng), g(rng));
      b(i, j) = cplx(g(rng), g(rng));
    }
  Mat p = interior_projector(s).mat();
  FockOp ai(s, p * a * p), bb(s, b);
  cplx ab = trace_theta(ai * bb), ba = trace_theta(bb * ai);
  return std::abs(ab - ba) / std::max(1.0, std::abs(ab));
}

// ---------------------------------------------------------------------------
// Weyl map

// worst |Tr(W_k Delta(x)) - e^{ikx}| over |k| <= 0.5, |x| <= 1, one plane at a time
inline double plane_wave_recovery_error(int n, double theta) {
  const std::vector<std::pair<double, double>> ks{{0.0, 0.0}, {0.5, 0.0}, {0.0, -0.5}, {0.3, -0.4}, {-0.35, 0.35}, {-0.2, 0.1}};
  const std::vector<std::pair<double, double>> xs{{0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {-0.6, 0.7}, {0.2, -0.9}, {0.5, 0.5}};
  double worst = 0.0;
  for (auto [ka, kb] : ks) {
    Mat w = weyl::plane_wave(n, theta, ka, kb);
    for (auto [ya, yb] : xs) {
      cplx v = (w * weyl::plane_kernel(n, theta, ya, yb)).trace();
      worst = std::max(worst, std::abs(v - std::exp(kI * (ka * ya + kb * yb))));
    }
  }
  return worst;
}

inline double plane_wave_adjoint_defect(const FockSpace& s) {
  WaveVector k{{0.3, -0.2, 0.45, 0.1}}, mk{{-0.3, 0.2, -0.45, -0.1}};
  return max_abs(quantize_plane_wave(s, mk).mat() - quantize_plane_wave(s, k).mat().adjoint());
}

// the 4D kernel built from one displacement on the full space equals the
// product of the two plane kernels
inline double kernel_factorization_defect(const FockSpace& s) {
  const Theta& th = s.theta();
  Point4 x{0.2, -0.5, 0.4, 0.1};
  Mat gen = (x[1] * coordinate(s, 1).mat() - x[0] * coordinate(s, 2).mat()) / th.theta12 +
            (x[3] * coordinate(s, 3).mat() - x[2] * coordinate(s, 4).mat()) / th.theta34;
  Mat d = expi_hermitian(gen);
  RVec w = weyl::taper(s.n_cut());
  Vec t(s.dim());
  double tr = 0.0;
  for (int i = 0; i < s.dim(); ++i) {
    auto [m, n] = s.label(i);
    double v = w(m) * w(n) * (((m + n) % 2) ? -1.0 : 1.0);
    t(i) = v;
    tr += v;
  }
  Mat direct = d * (t / tr).asDiagonal() * d.adjoint();
  return max_abs(direct - delta_kernel(s, x).mat());
}

template <class Rng>
double quantize_linearity_defect(int n_cut, Rng& rng) {
  auto s = make_space(n_cut, Theta{1.0, 1.0}, 0);
  std::array<GridAxis, 4> axes{GridAxis{-2, 2, 5}, GridAxis{-2, 2, 5}, GridAxis{-2, 2, 5}, GridAxis{-2, 2, 5}};
  auto f = SampledFunction::tabulate(axes, [](const Point4& x) { return std::exp(-x[0] * x[0] - 0.5 * x[2] * x[2]); });
  auto g = SampledFunction::tabulate(axes, [](const Point4& x) { return std::exp(kI * x[1]) * std::exp(-x[3] * x[3]); });
  std::normal_distribution<double> nd;
  cplx al(nd(rng), nd(rng)), be(nd(rng), nd(rng));
  SampledFunction h = f;
  for (size_t i = 0; i < h.values.size(); ++i) h.values[i] = al * f.values[i] + be * g.values[i];
  Mat lhs = quantize_sampled(s, h).op.mat();
  Mat rhs = al * quantize_sampled(s, f).op.mat() + be * quantize_sampled(s, g).op.mat();
  return max_abs(lhs - rhs);
}

// the k = 0 plane wave quantizes to the identity and reads back as 1
inline std::pair<double, double> zero_wave_roundtrip(const FockSpace& s) {
  double op = max_abs(quantize_plane_wave(s, WaveVector{}).mat() - Mat::Identity(s.dim(), s.dim()));
  double back = 0.0;
  for (cplx v : symbol(FockOp::identity(s), {{0, 0, 0, 0}, {0.5, -0.5, 0.3, 0.2}, {1.0, 0.0, 0.0, -1.0}}))
    back = std::max(back, std::abs(v - 1.0));
  return {op, back};
}

// ---------------------------------------------------------------------------
// Connections

template <class Rng>
double projector_idempotence_defect(const FockSpace& s, int count, Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < count; ++t) {
    auto iso = random_isometry(s, 2 + t % 2, 1, s.n_cut() / 2, 1.0 + 0.5 * t, rng);
    Mat q = Mat::Identity(iso.u.rows() * s.dim(), iso.u.rows() * s.dim()) - iso.u.mat() * iso.u.mat().adjoint();
    worst = std::max(worst, op_norm(q * q - q));
  }
  return worst;
}

// curvature_projected against curvature_general of the induced connection
template <class Rng>
double projected_general_defect(const FockSpace& s, int count, Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < count; ++t) {
    int rows = 2 + t % 2;
    auto iso = random_isometry(s, rows, 1 + (t % 2) * (rows - 2), s.n_cut() / 2, 0.5 + 0.1 * t, rng);
    worst = std::max(worst, interior_norm(curvature_general(connection_from_isometry(iso)) - curvature_projected(iso)));
  }
  return worst;
}

namespace detail {

template <class Rng>
Mat random_hermitian(int n, Rng& rng) {
  std::normal_distribution<double> g;
  Mat h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = cplx(g(rng), g(rng));
  return (h + h.adjoint()) / 2.0;
}

template <class Rng>
Vec low_vector(const FockSpace& s, int l, Rng& rng) {
  std::normal_distribution<double> g;
  Vec v = Vec::Zero(s.dim());
  for (int m = 0; m < l; ++m)
    for (int n = 0; n < l; ++n) v(s.index(m, n)) = cplx(g(rng), g(rng));
  return v / v.norm();
}

template <class Rng>
Mat low_block(const FockSpace& s, int r, int c, int l, Rng& rng) {
  Mat m = Mat::Zero(r * s.dim(), c * s.dim());
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < c; ++q) {
      Mat blk = Mat::Zero(s.dim(), s.dim());
      for (int i = 0; i < 3; ++i) blk += low_vector(s, l, rng) * low_vector(s, l, rng).adjoint();
      m.block(p * s.dim(), q * s.dim(), s.dim(), s.dim()) = blk;
    }
  return m;
}

}  // namespace detail

// curvature_block against [nabla_m, nabla_n] applied to low-level sections
template <class Rng>
double block_composition_defect(const FockSpace& s, int k, int n, Rng& rng) {
  BlockConnection bc{s, k, n, {}, {}, {}};
  for (int j = 0; j < 4; ++j) {
    bc.c[j] = detail::random_hermitian(k, rng);
    for (int i = 0; i < k * n; ++i) bc.b[j].push_back(Vec(0.5 * detail::low_vector(s, 3, rng)));
    Mat d = detail::low_block(s, n, n, 3, rng);
    bc.d[j] = BlockOp(s, n, n, (d + d.adjoint()) / 2.0);
  }
  auto f = curvature_block(bc);
  BlockOp p = block_module_projector(s, k, n);
  std::array<BlockOp, 4> a;
  for (int j = 1; j <= 4; ++j) a[j - 1] = block_potential(bc, j);
  auto nabla = [&](int j, const BlockOp& xi) { return p * derivation(j, xi) + kI * (a[j - 1] * xi); };
  double worst = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    BlockOp xi = p * BlockOp(s, k + n, 1, detail::low_block(s, k + n, 1, 3, rng));
    for (int m = 1; m <= 4; ++m)
      for (int q = m + 1; q <= 4; ++q)
        worst = std::max(worst, interior_norm(nabla(m, nabla(q, xi)) - nabla(q, nabla(m, xi)) - f(m, q) * xi));
  }
  return worst;
}

inline double xi_spectral_defect() {
  Eigen::Matrix4cd om = spin::omega();
  Eigen::Matrix4cd lam = spin::xi_eigenvalues().cast<cplx>().asDiagonal();
  return (spin::xi() - om.adjoint() * lam * om).cwiseAbs().maxCoeff();
}

inline double omega_unitarity_defect() {
  Eigen::Matrix4cd om = spin::omega();
  return (om.adjoint() * om - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff();
}

template <class Rng>
double antisymmetry_defect(const FockSpace& s, Rng& rng) {
  auto f = curvature_general(connection_from_isometry(random_isometry(s, 2, 1, s.n_cut() / 2, 1.0, rng)));
  double worst = 0.0;
  for (int m = 1; m <= 4; ++m)
    for (int n = 1; n <= 4; ++n) worst = std::max(worst, max_abs((f(m, n) + f(n, m)).mat()));
  return worst;
}

struct GaugeDefects {
  double action = 0.0;    // relative
  double charge = 0.0;    // relative
  double residual = 0.0;  // relative to max(1, r)
};

// Random-isometry connections under interior-supported gauge transforms.
template <class Rng>
GaugeDefects gauge_invariance(const FockSpace& s, int transforms, Rng& rng) {
  auto conn = connection_from_isometry(random_isometry(s, 2, 1, s.n_cut() / 2, 1.0, rng));
  auto f0 = curvature_general(conn);
  double s0 = ym_action(f0, 1.0).value, q0 = topological_number(f0).value;
  auto r0 = asd_residual(f0);
  GaugeDefects out;
  for (int t = 0; t < transforms; ++t) {
    auto g = gauge_element({random_interior_hermitian(s, 1, s.n_cut() / 2 + 1, 0.5 + 0.1 * t, rng)});
    auto f1 = curvature_general(gauge_transform(g, conn));
    out.action = std::max(out.action, std::abs(ym_action(f1, 1.0).value - s0) / std::abs(s0));
    out.charge = std::max(out.charge, std::abs(topological_number(f1).value - q0) / std::abs(q0));
    auto r1 = asd_residual(f1);
    for (int i = 0; i < 3; ++i) out.residual = std::max(out.residual, std::abs(r1[i] - r0[i]) / std::max(1.0, r0[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ADHM frames

struct FrameDefects {
  int zero_modes = 0;
  double right_unit = 0.0;   // U^* U against 1_n - I_k
  double direct_sum = 0.0;   // U^* U against 1_n + I_k
  double range = 0.0;        // U U^* against Pi
  double oracle = 0.0;       // E F E against U^* Pi [dPi, dPi] Pi U
  double asd = 0.0;
};

inline FrameDefects frame_defects(const InstantonFrame& f) {
  FrameDefects out;
  const BlockOp& u = f.u.u;
  BlockOp utu = u.adjoint() * u;
  out.zero_modes = int(f.zero_modes.size());
  out.right_unit = interior_norm(utu - f.module_unit());
  out.direct_sum = interior_norm(utu - (BlockOp::identity(f.space(), f.n()) + f.zero_projector));
  out.range = interior_norm(u * u.adjoint() - f.pi);
  auto fg = curvature_general(connection_from_isometry(f.u));
  std::array<BlockOp, 4> dpi;
  for (int j = 1; j <= 4; ++j) dpi[j - 1] = derivation(j, f.pi);
  const BlockOp& e = f.module_unit();
  for (int slot = 0; slot < 6; ++slot) {
    auto [p, q] = Curvature::pair(slot);
    BlockOp oracle = u.adjoint() * f.pi * commutator(dpi[p - 1], dpi[q - 1]) * f.pi * u;
    out.oracle = std::max(out.oracle, interior_norm(e * fg(p, q) * e - oracle));
  }
  for (double r : asd_residual(curvature_projected(f.u))) out.asd = std::max(out.asd, r);
  return out;
}

// ---------------------------------------------------------------------------
// Suites

inline std::vector<Check> fock_suite(int n_cut, unsigned seed) {
  const std::string S = "fock";
  std::mt19937 rng(seed);
  std::vector<Check> out;
  auto s = make_space(n_cut, Theta{1.0, 0.6}, n_cut / 4);
  out.push_back(guarded(S, "ccr_interior", 1e-14, [&] { return make_check(S, "ccr_interior", ccr_interior_defect(s), 1e-14, "exact up to rounding of sqrt(k)^2"); }));
  out.push_back(guarded(S, "ccr_boundary_only", 1e-12, [&] { return make_check(S, "ccr_boundary_only", ccr_boundary_pattern(s), 1e-12); }));
  for (Theta th : {Theta{1.0, 1.0}, Theta{0.5, 2.0}, Theta{2.0, -1.5}}) {
    auto t = make_space(n_cut, th, 1);
    std::string name = "coordinate_commutators theta=(" + std::to_string(th.theta12) + "," + std::to_string(th.theta34) + ")";
    out.push_back(guarded(S, name, 1e-12, [&] { return make_check(S, name, coordinate_commutator_defect(t), 1e-12); }));
  }
  auto [leib, comm] = derivation_defects(s, 10, rng);
  out.push_back(make_check(S, "leibniz", leib, 1e-10, seed_note(seed)));
  out.push_back(make_check(S, "derivations_commute", comm, 1e-10, seed_note(seed)));
  out.push_back(make_check(S, "d1_of_x1_powers", x1_power_defect(s), 1e-10));
  out.push_back(make_check(S, "trace_cyclicity", trace_cyclicity_defect(s, rng), 1e-9, seed_note(seed)));
  return out;
}

inline std::vector<Check> weyl_suite(int n_cut, unsigned seed) {
  const std::string S = "weyl";
  std::mt19937 rng(seed);
  std::vector<Check> out;
  auto s = make_space(n_cut, Theta{0.8, 1.4}, 0);
  out.push_back(make_check(S, "plane_wave_adjoint", plane_wave_adjoint_defect(s), 1e-10));
  out.push_back(make_check(S, "kernel_factorization", kernel_factorization_defect(make_space(std::min(n_cut, 8), Theta{0.8, 1.4}, 0)), 1e-10));
  out.push_back(make_check(S, "quantize_linearity", quantize_linearity_defect(std::min(n_cut, 6), rng), 1e-12, seed_note(seed)));
  auto [op, back] = zero_wave_roundtrip(make_space(n_cut, Theta{1.0, 1.0}, 0));
  out.push_back(make_check(S, "zero_wave_is_identity", op, 0.0));
  out.push_back(make_check(S, "identity_symbol_is_one", back, 1e-12));
  // fixed resolution: the recovery claim is made at 48 levels per plane
  double rec = std::max(plane_wave_recovery_error(48, 1.0), plane_wave_recovery_error(48, 0.5));
  out.push_back(make_check(S, "plane_wave_recovery_48", rec, 1e-3, "one calibration for all k"));
  return out;
}

inline std::vector<Check> connections_suite(int n_cut, unsigned seed) {
  const std::string S = "connections";
  std::mt19937 rng(seed);
  std::vector<Check> out;
  auto s = make_space(n_cut, Theta{1.0, 1.0}, n_cut / 4);
  out.push_back(make_check(S, "projector_idempotence", projector_idempotence_defect(s, 5, rng), 1e-10, seed_note(seed)));
  out.push_back(make_check(S, "projected_vs_general_x20", projected_general_defect(s, 20, rng), 1e-7, seed_note(seed)));
  auto sg = make_space(n_cut, Theta{0.6, 1.7}, n_cut / 4);
  out.push_back(make_check(S, "projected_vs_general_theta", projected_general_defect(sg, 2, rng), 1e-7, seed_note(seed)));
  for (auto [k, n] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
    std::string name = "block_composition k=" + std::to_string(k) + " n=" + std::to_string(n);
    out.push_back(make_check(S, name, block_composition_defect(s, k, n, rng), 1e-8, seed_note(seed)));
  }
  out.push_back(make_check(S, "xi_spectral", xi_spectral_defect(), 1e-12));
  out.push_back(make_check(S, "omega_unitary", omega_unitarity_defect(), 1e-12));
  out.push_back(make_check(S, "antisymmetry", antisymmetry_defect(s, rng), 0.0, seed_note(seed)));
  auto g = gauge_invariance(s, 3, rng);
  out.push_back(make_check(S, "gauge_action", g.action, 1e-6, seed_note(seed)));
  out.push_back(make_check(S, "gauge_topological_number", g.charge, 1e-6, seed_note(seed)));
  out.push_back(make_check(S, "gauge_asd_residual", g.residual, 1e-6, seed_note(seed)));
  return out;
}

inline std::vector<Check> adhm_suite(int n_cut) {
  const std::string S = "adhm";
  std::vector<Check> out;
  double worst = 0.0;
  for (const auto& name : preset_names()) {
    auto r = adhm_residuals(preset(name));
    worst = std::max({worst, r.moment, r.complex_});
  }
  out.push_back(make_check(S, "presets_solve_constraints", worst, 1e-12));
  AdhmData z = zero_adhm(1, 1, Theta{1.0, 1.0});
  out.push_back(make_check(S, "zero_data_residual", std::abs(adhm_residuals(z).moment - 4.0), 1e-12));
  {
    AdhmData d = zero_adhm(2, 2);
    d.i << 1.0, cplx(0.5, 1), 2.0, -1.0;
    d.j << cplx(0, 1), 0.3, 1.2, cplx(-0.7, 0.2);
    double r0 = adhm_residuals(d).complex_, dev = 0.0;
    for (double sc : {0.5, 3.0}) {
      AdhmData e = d;
      e.i *= sc;
      e.j *= sc;
      dev = std::max(dev, std::abs(adhm_residuals(e).complex_ - sc * sc * r0) / (sc * sc * r0));
    }
    out.push_back(make_check(S, "complex_residual_scaling", dev, 1e-12));
  }
  auto s = make_space(n_cut, Theta{1.0, 1.0}, n_cut / 4);
  out.push_back(guarded(S, "gamma_commutes_with_number", 1e-10, [&] {
    auto g = gamma_extract(build_delta(preset("u1-k1"), s));
    Mat ntot = number(s, 1).mat() + number(s, 2).mat();
    return make_check(S, "gamma_commutes_with_number", max_abs(g.gamma.mat() * ntot - ntot * g.gamma.mat()), 1e-10);
  }));
  for (const char* name : {"u1-k1", "u1-k2", "u2-k1"}) {
    std::string p = std::string(name) + " ";
    try {
      auto f = instanton_frame(preset(name), s);
      auto d = frame_defects(f);
      out.push_back(make_check(S, p + "zero_mode_count", std::abs(d.zero_modes - f.k()), 0.0));
      out.push_back(make_check(S, p + "UU*=Pi", d.range, 1e-6));
      out.push_back(make_check(S, p + "U*U=1-I_k", d.right_unit, 1e-6));
      out.push_back(make_check(S, p + "curvature_vs_pi_oracle", d.oracle, 1e-5));
      out.push_back(make_check(S, p + "asd", d.asd, 1e-8));
    } catch (const std::exception& e) {
      out.push_back({S, p + "frame", std::numeric_limits<double>::infinity(), 0.0, false, std::string("threw: ") + e.what()});
    }
  }
  return out;
}

inline std::vector<Check> diagnostics_suite(int n_cut, unsigned seed) {
  const std::string S = "diagnostics";
  std::mt19937 rng(seed);
  std::vector<Check> out;
  auto s = make_space(n_cut, Theta{1.0, 1.0}, n_cut / 4);
  try {
    auto f = instanton_frame(preset("u1-k1"), s);
    auto ff = ff_terms(f);
    double split = 0.0;
    for (int slot = 0; slot < 6; ++slot) {
      auto [p, q] = Curvature::pair(slot);
      BlockOp tx = ff.t(p, q) + ff.x(p, q);
      Mat sum = Mat::Zero(tx.mat().rows(), tx.mat().cols());
      for (int w = 0; w < 4; ++w) sum += ff.term(p, q, w).mat();
      split = std::max(split, max_abs(sum - (tx * tx).mat()));
    }
    out.push_back(make_check(S, "four_term_split", split, 1e-10));
    auto c = extra_term_trace_cancellation(f, ff);
    out.push_back(make_check(S, "term_cyclicity", c.cyclicity, 1e-8));
    out.push_back(make_check(S, "module_extra_terms", c.module_extra, 1e-4));
    TraceOptions opt{TraceMeasure::Weyl, true, ff.unit};
    double q = topological_number(ff.t, opt).value, ident = 0.0;
    for (double g : {0.7, 1.0, 2.0}) ident = std::max(ident, std::abs(q - g * g / (4 * kPi * kPi) * ym_action(ff.t, g, opt).value) / std::abs(q));
    out.push_back(make_check(S, "charge_action_identity", ident, 1e-10));
    auto conn = connection_from_isometry(f.u);
    double q0 = topological_number(curvature_general(conn), TraceOptions{TraceMeasure::Weyl, true, conn.unit}).value, dq = 0.0;
    for (int t = 0; t < 3; ++t) {
      auto g = gauge_element({random_interior_hermitian(s, 1, n_cut / 2 + 1, 1.0, rng)});
      auto c1 = gauge_transform(g, conn);
      double q1 = topological_number(curvature_general(c1), TraceOptions{TraceMeasure::Weyl, true, c1.unit}).value;
      dq = std::max(dq, std::abs(q1 - q0));
    }
    out.push_back(make_check(S, "charge_gauge_invariance", dq, 1e-4, seed_note(seed)));
  } catch (const std::exception& e) {
    out.push_back({S, "u1-k1 frame", std::numeric_limits<double>::infinity(), 0.0, false, std::string("threw: ") + e.what()});
  }
  out.push_back(guarded(S, "richardson_polynomial", 1e-12, [&] {
    auto q = [](int n) { return 1.0 - 0.3 / n + 0.7 / (double(n) * n); };
    return make_check(S, "richardson_polynomial", std::abs(richardson({8, 12, 16}, {q(8), q(12), q(16)}) - 1.0), 1e-12);
  }));
  out.push_back(guarded(S, "trivial_charge", 0.0, [&] {
    auto r = charge_scan(preset("trivial"), {4, 6});
    return make_check(S, "trivial_charge", std::abs(r.extrapolated), 0.0);
  }));
  return out;
}

inline std::vector<Check> io_suite(unsigned seed) {
  const std::string S = "io";
  std::vector<Check> out;
  out.push_back(guarded(S, "csv_json_agree", 0.0, [&] {
    auto r = charge_scan(preset("u1-k1"), {6, 8});
    auto a = io::charge_report_from_json(json::parse(io::charge_report_to_json(r).dump()));
    auto b = io::charge_report_from_csv(io::charge_report_to_csv(r));
    double d = 0.0;
    d += a.cutoffs != b.cutoffs || a.margins != b.margins || a.method != b.method;
    for (size_t i = 0; i < a.charges.size(); ++i) {
      d = std::max(d, std::abs(a.charges[i] - b.charges[i]));
      d = std::max(d, std::abs(a.charge_imag[i] - b.charge_imag[i]));
      for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(a.residuals[i][j] - b.residuals[i][j]));
      for (int j = 0; j < 4; ++j) d = std::max(d, std::abs(a.term_traces[i][j] - b.term_traces[i][j]));
    }
    d = std::max(d, std::abs(a.extrapolated - b.extrapolated));
    return make_check(S, "csv_json_agree", d, 0.0);
  }));
  out.push_back(guarded(S, "adhm_json_roundtrip", 0.0, [&] {
    double d = 0.0;
    for (const auto& name : preset_names()) {
      AdhmData p = preset(name), q = io::adhm_from_json(json::parse(io::adhm_to_json(p).dump()));
      d = std::max({d, max_abs(p.b1 - q.b1), max_abs(p.b2 - q.b2), max_abs(p.i - q.i), max_abs(p.j - q.j)});
    }
    return make_check(S, "adhm_json_roundtrip", d, 0.0);
  }));
  out.push_back(guarded(S, "seeded_determinism", 0.0, [&] {
    auto s = make_space(6, Theta{1.0, 1.0}, 1);
    std::mt19937 r1(seed), r2(seed);
    auto a = random_isometry(s, 2, 1, 3, 1.0, r1), b = random_isometry(s, 2, 1, 3, 1.0, r2);
    return make_check(S, "seeded_determinism", max_abs(a.u.mat() - b.u.mat()), 0.0, seed_note(seed));
  }));
  return out;
}

struct SelftestReport {
  int n_cut = 0;
  unsigned seed = 0;
  std::vector<Check> checks;

  int passed() const { return int(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.pass; })); }
  int failed() const { return int(checks.size()) - passed(); }
};

inline SelftestReport selftest(int n_cut, unsigned seed, const std::function<void(const Check&)>& on_check = {}) {
  SelftestReport rep{n_cut, seed, {}};
  using Suite = std::function<std::vector<Check>()>;
  std::vector<std::pair<std::string, Suite>> suites{
      {"fock", [&] { return fock_suite(n_cut, seed); }},
      {"weyl", [&] { return weyl_suite(n_cut, seed); }},
      {"connections", [&] { return connections_suite(n_cut, seed); }},
      {"adhm", [&] { return adhm_suite(n_cut); }},
      {"diagnostics", [&] { return diagnostics_suite(n_cut, seed); }},
      {"io", [&] { return io_suite(seed); }},
  };
  for (auto& [name, run] : suites) {
    std::vector<Check> got;
    try {
      got = run();
    } catch (const std::exception& e) {
      got.push_back({name, "suite", std::numeric_limits<double>::infinity(), 0.0, false, std::string("threw: ") + e.what()});
    }
    for (auto& c : got) {
      if (on_check) on_check(c);
      rep.checks.push_back(std::move(c));
    }
  }
  return rep;
}

inline json check_to_json(const Check& c) {
  return {{"suite", c.suite}, {"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}, {"note", c.note}};
}

}  // namespace ncinst::checks
