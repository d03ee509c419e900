#pragma once

// Charge of the ADHM frame, the split of F_pq F_pq into the module curvature
// and the zero-mode correction, the Corrigan-type cross-check and the cutoff
// scan with extrapolation.

#include "adhm.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ncinst {

// Full curvature of A = U^* dU on the frame.
inline Curvature corrected_curvature(const InstantonFrame& f) { return curvature_general(connection_from_isometry(f.u)); }

// ---------------------------------------------------------------------------
// F_pq = T_pq + X_pq with T_pq = dU_p^*(1 - UU^*)dU_q - (p<->q) and
// X_pq = (d_p E) U^* d_q U - (d_q E) U^* d_p U, E = U^* U.

struct FfTerms {
  Curvature t;
  Curvature x;
  BlockOp unit;
  std::array<BlockOp, 4> du;  // d_j U
  std::array<BlockOp, 4> de;  // d_j E
  std::array<BlockOp, 4> a;   // U^* d_j U

  // 0: T T, 1: T X, 2: X T, 3: X X for the pair (p, q)
  BlockOp term(int p, int q, int which) const {
    BlockOp tp = t(p, q), xp = x(p, q);
    switch (which) {
      case 0: return tp * tp;
      case 1: return tp * xp;
      case 2: return xp * tp;
      case 3: return xp * xp;
    }
    throw InvalidArgument("term index must be in 0..3");
  }
};

inline FfTerms ff_terms(const InstantonFrame& f) {
  const BlockOp& u = f.u.u;
  FfTerms out;
  out.unit = f.module_unit();
  out.t = curvature_projected(f.u);
  BlockOp ud = u.adjoint();
  for (int j = 1; j <= 4; ++j) {
    out.du[j - 1] = derivation(j, u);
    out.de[j - 1] = derivation(j, out.unit);
    out.a[j - 1] = ud * out.du[j - 1];
  }
  std::array<BlockOp, 6> x;
  for (int s = 0; s < 6; ++s) {
    auto [p, q] = Curvature::pair(s);
    x[s] = out.de[p - 1] * out.a[q - 1] - out.de[q - 1] * out.a[p - 1];
  }
  out.x = Curvature(x);
  return out;
}

// Traces of the four terms summed over ordered pairs.
inline std::array<TraceValue, 4> ff_term_traces(const FfTerms& ff, const TraceOptions& opt) {
  std::array<cplx, 4> acc{};
  for (int s = 0; s < 6; ++s) {
    const BlockOp& t = ff.t.component(s);
    const BlockOp& x = ff.x.component(s);
    acc[0] += 2.0 * trace_product(t, t, opt);
    acc[1] += 2.0 * trace_product(t, x, opt);
    acc[2] += 2.0 * trace_product(x, t, opt);
    acc[3] += 2.0 * trace_product(x, x, opt);
  }
  std::array<TraceValue, 4> out;
  for (int i = 0; i < 4; ++i) out[i] = {acc[i].real(), acc[i].imag()};
  return out;
}

struct CancellationReport {
  std::array<double, 4> module_terms{};  // Tr(E . E) on the interior, all four terms
  std::array<double, 4> plain_terms{};   // plain interior trace
  double module_extra = 0.0;             // |terms 2 + 3 + 4| under the module trace
  double plain_extra = 0.0;              // same under the plain trace
  // (3,4) pair, X_34^2 = a a - a b - b a + b b with a = (d3 E) U^* d4 U, b = (d4 E) U^* d3 U
  std::array<double, 4> pair34_plain{};
  std::array<double, 4> pair34_module{};
  double mechanism = 0.0;                // interior norm of (1 - UU^*) d3U (d3 E) U^*
  double cyclicity = 0.0;                // |Tr(T X) - Tr(X T)| under the plain trace

  double value() const { return module_extra; }
};

inline CancellationReport extra_term_trace_cancellation(const InstantonFrame& f, const FfTerms& ff) {
  CancellationReport r;
  TraceOptions module{TraceMeasure::Plain, true, ff.unit};
  TraceOptions plain{TraceMeasure::Plain, true, std::nullopt};
  auto tm = ff_term_traces(ff, module), tp = ff_term_traces(ff, plain);
  for (int i = 0; i < 4; ++i) {
    r.module_terms[i] = tm[i].value;
    r.plain_terms[i] = tp[i].value;
  }
  r.module_extra = std::abs(tm[1].value + tm[2].value + tm[3].value);
  r.plain_extra = std::abs(tp[1].value + tp[2].value + tp[3].value);

  BlockOp a = ff.de[2] * ff.a[3], b = ff.de[3] * ff.a[2];
  std::array<std::pair<const BlockOp*, const BlockOp*>, 4> sub{{{&a, &a}, {&a, &b}, {&b, &a}, {&b, &b}}};
  const double sign[4] = {1.0, -1.0, -1.0, 1.0};
  for (int i = 0; i < 4; ++i) {
    r.pair34_plain[i] = sign[i] * trace_product(*sub[i].first, *sub[i].second, plain).real();
    r.pair34_module[i] = sign[i] * trace_product(*sub[i].first, *sub[i].second, module).real();
  }

  const BlockOp& u = f.u.u;
  BlockOp m = ff.du[2] * ff.de[2] * u.adjoint();
  r.mechanism = interior_norm(m - u * (u.adjoint() * m));
  cplx c1 = 0.0, c2 = 0.0;
  for (int s = 0; s < 6; ++s) {
    c1 += trace_product(ff.t.component(s), ff.x.component(s), plain);
    c2 += trace_product(ff.x.component(s), ff.t.component(s), plain);
  }
  r.cyclicity = std::abs(c1 - c2);
  return r;
}

inline CancellationReport extra_term_trace_cancellation(const InstantonFrame& f) {
  return extra_term_trace_cancellation(f, ff_terms(f));
}

// ---------------------------------------------------------------------------
// Corrigan-type identity:
//   sum_pq Tr_{n+2k}(F_pq F_pq) = 1/2 sum_q d_q d_q sum_p Tr_{2k}[s_p b^*(1 + Pi)b sbar_p (1_2 (x) Gamma^{-1})]
// with F the curvature Pi[dPi, dPi]Pi, s = (1, i s1, i s2, i s3), b the
// injection of the last 2k summands. The conjugate sbar_p is scanned over
// s_p^* and s_p.

enum class SigmaBar { Adjoint, Same };

inline const char* to_string(SigmaBar c) { return c == SigmaBar::Adjoint ? "adjoint" : "same"; }

struct CorriganSide {
  FockOp lhs;
  FockOp rhs;
};

struct CorriganReport {
  SigmaBar convention = SigmaBar::Adjoint;  // the agreeing one
  double lhs_trace = 0.0;                   // plain interior traces
  double rhs_trace = 0.0;
  double relative_mismatch = 0.0;           // |lhs - rhs| / |lhs| of the traces
  double relative_norm_mismatch = 0.0;      // interior operator norm of lhs - rhs over that of lhs
  std::vector<std::pair<SigmaBar, double>> scan;  // relative trace mismatch per convention
};

namespace detail {

inline std::array<Eigen::Matrix2cd, 4> quaternion_basis() {
  return {spin::pauli(0), kI * spin::pauli(1), kI * spin::pauli(2), kI * spin::pauli(3)};
}

// Block trace over the row/column summands of a square block operator.
inline Mat block_trace(const Mat& m, int blocks, int dim) {
  Mat out = Mat::Zero(dim, dim);
  for (int b = 0; b < blocks; ++b) out += m.block(b * dim, b * dim, dim, dim);
  return out;
}

inline Mat hermitian_pinv(const Mat& h, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es((h + h.adjoint()) / 2.0);
  RVec inv(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    double w = es.eigenvalues()(i);
    inv(i) = std::abs(w) > floor ? 1.0 / w : 0.0;
  }
  return es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

// Left side from the module curvature: Pi F Pi = U T U^*, so the block trace
// of (Pi[dPi,dPi]Pi)^2 is sum_a U_a T^2 U_a^*.
inline FockOp corrigan_lhs(const InstantonFrame& f, const Curvature& t) {
  const auto& s = f.space();
  const int dim = s.dim(), rows = f.u.u.rows(), nd = f.u.u.cols() * dim;
  Mat tt = Mat::Zero(nd, nd);
  for (const auto& c : t.components()) tt.noalias() += 2.0 * c.mat() * c.mat();
  Mat out = Mat::Zero(dim, dim);
  for (int a = 0; a < rows; ++a) {
    auto ua = f.u.u.mat().middleRows(a * dim, dim);
    out.noalias() += ua * tt * ua.adjoint();
  }
  return FockOp(s, out);
}

inline FockOp corrigan_rhs(const DeltaOp& dop, const BlockOp& pi, SigmaBar convention, double floor = 1e-10) {
  const auto& s = dop.space;
  const int dim = s.dim(), k = dop.k, n = dop.n, kd = k * dim;
  if (k == 0) return FockOp::zero(s);
  Mat g = gram(dop);
  Mat gamma_inv = detail::hermitian_pinv(g.topLeftCorner(kd, kd), floor);
  // b^*(2 - Delta Gamma^{-1} Delta^*)b = b^*(1 + Pi)b on the spinor (x) C^k (x) F space
  Mat inner = pi.mat().bottomRightCorner(2 * kd, 2 * kd);
  inner.diagonal().array() += 1.0;
  auto sig = detail::quaternion_basis();
  // spinor-diagonal part of sum_p s_p inner sbar_p
  Mat diag = Mat::Zero(kd, kd);
  for (int p = 0; p < 4; ++p) {
    Eigen::Matrix2cd sb = convention == SigmaBar::Adjoint ? Eigen::Matrix2cd(sig[p].adjoint()) : sig[p];
    for (int r = 0; r < 2; ++r)
      for (int t = 0; t < 2; ++t)
        for (int u = 0; u < 2; ++u) {
          cplx c = sig[p](r, t) * sb(u, r);
          if (c != cplx(0.0)) diag += c * inner.block(t * kd, u * kd, kd, kd);
        }
  }
  Mat inside = detail::block_trace(diag * gamma_inv, k, dim);
  Mat rhs = Mat::Zero(dim, dim);
  for (int q = 1; q <= 4; ++q) rhs += 0.5 * detail::derive(s, q, detail::derive(s, q, inside));
  return FockOp(s, rhs);
}

inline CorriganReport corrigan_check(const DeltaOp& dop, const InstantonFrame& f, const Curvature& t) {
  CorriganReport r;
  FockOp lhs = corrigan_lhs(f, t);
  double lt = interior_trace(lhs).real();
  double lnorm = interior_norm(lhs);
  double best = std::numeric_limits<double>::infinity();
  for (SigmaBar c : {SigmaBar::Adjoint, SigmaBar::Same}) {
    FockOp rhs = corrigan_rhs(dop, f.pi, c);
    double rt = interior_trace(rhs).real();
    double mismatch = std::abs(lt - rt) / std::max(std::abs(lt), 1e-300);
    r.scan.emplace_back(c, mismatch);
    if (mismatch < best) {
      best = mismatch;
      r.convention = c;
      r.rhs_trace = rt;
      r.relative_mismatch = mismatch;
      r.relative_norm_mismatch = interior_norm(lhs - rhs) / std::max(lnorm, 1e-300);
    }
  }
  r.lhs_trace = lt;
  return r;
}

// ---------------------------------------------------------------------------
// Cutoff scan

struct MarginRule {
  enum class Kind { Fraction, Fixed };
  Kind kind = Kind::Fraction;
  double fraction = 0.25;
  int fixed = 0;

  int margin(int n_cut) const {
    int m = kind == Kind::Fraction ? int(std::lround(fraction * n_cut)) : fixed;
    return std::clamp(m, 0, n_cut - 2);
  }

  // "n/4", "0.25" or "8"
  static MarginRule parse(const std::string& text) {
    MarginRule r;
    try {
      if (text.rfind("n/", 0) == 0) {
        double d = std::stod(text.substr(2));
        if (!(d > 0)) throw InvalidArgument("");
        r.fraction = 1.0 / d;
        return r;
      }
      if (text.find('.') != std::string::npos) {
        r.fraction = std::stod(text);
        if (!(r.fraction >= 0 && r.fraction < 1)) throw InvalidArgument("");
        return r;
      }
      size_t used = 0;
      int v = std::stoi(text, &used);
      if (used != text.size() || v < 0) throw InvalidArgument("");
      r.kind = Kind::Fixed;
      r.fixed = v;
      return r;
    } catch (const std::exception&) {
      throw InvalidArgument("margin rule '" + text + "' is not n/D, a fraction in [0,1) or a non-negative integer");
    }
  }

  std::string str() const {
    if (kind == Kind::Fixed) return std::to_string(fixed);
    std::ostringstream o;
    o << fraction;
    return o.str();
  }
};

struct ChargeOptions {
  TraceMeasure measure = TraceMeasure::Weyl;
  bool module_trace = true;  // Tr(E F F E) instead of Tr(F F)
  FrameOptions frame{};
};

struct ChargeReport {
  std::vector<int> cutoffs;
  std::vector<int> margins;
  std::vector<double> charges;       // raw Q per cutoff
  std::vector<double> charge_imag;   // imaginary parts, diagnostic
  std::vector<std::array<double, 3>> residuals;
  std::vector<std::array<double, 4>> term_traces;  // the four terms, in units of Q
  double extrapolated = 0.0;
  std::string method;                // "polynomial-N", "two-point", "none"
  std::vector<std::string> warnings;

  double extrapolated_abs() const { return std::abs(extrapolated); }
};

// Value at h = 0 of the interpolating polynomial through (1/n_i, q_i).
inline double richardson(const std::vector<int>& cutoffs, const std::vector<double>& values) {
  const size_t m = cutoffs.size();
  if (m != values.size() || m == 0) throw InvalidArgument("extrapolation needs matching, non-empty inputs");
  double out = 0.0;
  for (size_t i = 0; i < m; ++i) {
    double w = 1.0, hi = 1.0 / cutoffs[i];
    for (size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double hj = 1.0 / cutoffs[j];
      w *= (0.0 - hj) / (hi - hj);
    }
    out += w * values[i];
  }
  return out;
}

struct CutoffResult {
  double charge = 0.0;
  double imag = 0.0;
  std::array<double, 3> residual{};
  std::array<double, 4> terms{};
  std::vector<std::string> warnings;
};

inline CutoffResult charge_at_cutoff(const AdhmData& d, const FockSpace& s, const ChargeOptions& opt = {}) {
  InstantonFrame f = instanton_frame(d, s, opt.frame);
  FfTerms ff = ff_terms(f);
  TraceOptions tr{opt.measure, true, opt.module_trace ? std::optional<BlockOp>(ff.unit) : std::nullopt};
  auto terms = ff_term_traces(ff, tr);
  const double k = 1.0 / (16.0 * kPi * kPi);
  CutoffResult r;
  for (int i = 0; i < 4; ++i) {
    r.terms[i] = k * terms[i].value;
    r.charge += r.terms[i];
    r.imag += k * terms[i].imag;
  }
  r.residual = asd_residual(ff.t);
  r.warnings = f.warnings;
  return r;
}

inline ChargeReport charge_scan(const AdhmData& d, const std::vector<int>& cutoffs, const MarginRule& rule = {},
                                const ChargeOptions& opt = {}) {
  if (cutoffs.empty()) throw InvalidArgument("charge scan needs at least one cutoff");
  for (size_t i = 1; i < cutoffs.size(); ++i)
    if (cutoffs[i] <= cutoffs[i - 1]) throw InvalidArgument("cutoffs must be strictly increasing");
  ChargeReport rep;
  for (int n : cutoffs) {
    FockSpace s = make_space(n, d.theta, rule.margin(n));
    CutoffResult c = charge_at_cutoff(d, s, opt);
    rep.cutoffs.push_back(n);
    rep.margins.push_back(s.margin());
    rep.charges.push_back(c.charge);
    rep.charge_imag.push_back(c.imag);
    rep.residuals.push_back(c.residual);
    rep.term_traces.push_back(c.terms);
    for (const auto& w : c.warnings) rep.warnings.push_back("n_cut " + std::to_string(n) + ": " + w);
    double rel = std::abs(c.imag) / std::max(1.0, std::abs(c.charge));
    if (rel > 1e-6) rep.warnings.push_back("n_cut " + std::to_string(n) + ": imaginary part of Q is " + std::to_string(c.imag));
  }
  if (cutoffs.size() == 1) {
    rep.extrapolated = rep.charges[0];
    rep.method = "none";
    rep.warnings.push_back("single cutoff: no extrapolation, raw Q reported");
  } else {
    rep.extrapolated = richardson(rep.cutoffs, rep.charges);
    rep.method = cutoffs.size() == 2 ? "two-point" : "polynomial-" + std::to_string(cutoffs.size());
    // fall back to the two largest cutoffs if the full polynomial leaves their range
    if (cutoffs.size() > 2) {
      std::vector<int> tail(rep.cutoffs.end() - 2, rep.cutoffs.end());
      std::vector<double> tv(rep.charges.end() - 2, rep.charges.end());
      double two = richardson(tail, tv);
      double spread = std::abs(rep.charges.back() - rep.charges[rep.charges.size() - 2]);
      if (!std::isfinite(rep.extrapolated) || std::abs(rep.extrapolated - two) > 10.0 * std::max(spread, 1e-12)) {
        rep.warnings.push_back("polynomial extrapolation unstable; using the two largest cutoffs");
        rep.extrapolated = two;
        rep.method = "two-point";
      }
    }
  }
  return rep;
}

}  // namespace ncinst
