// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exits 1 if any criterion fails.

#include <ncinst/checks.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace ncinst;
using namespace ncinst::checks;

namespace {

const Theta kUnit{1.0, 1.0};
constexpr unsigned kSeed = 20241016;

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void need(bool ok, const std::string& what) {
    pass &= ok;
    lines.push_back(std::string(ok ? "[ok]   " : "[miss] ") + what);
  }
  void info(const std::string& what) { lines.push_back("       " + what); }
};

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

// Shared state: the scan and the n_cut = 32 frame feed several criteria.
struct Shared {
  ChargeReport scan;
  double scan_seconds = 0.0;
  std::optional<InstantonFrame> frame32;
  std::optional<DeltaOp> delta32;
};

Outcome criterion1(Shared& sh) {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  sh.scan = charge_scan(preset("u1-k1"), {16, 24, 32}, MarginRule::parse("n/4"));
  sh.scan_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (size_t i = 0; i < sh.scan.cutoffs.size(); ++i)
    o.info("n_cut " + std::to_string(sh.scan.cutoffs[i]) + "  margin " + std::to_string(sh.scan.margins[i]) + "  Q = " +
           fmt("%.6f", sh.scan.charges[i]));
  double dev = std::abs(sh.scan.extrapolated_abs() - 1.0);
  o.need(dev < 0.1, "|Q_extrap| = " + fmt("%.6f", sh.scan.extrapolated_abs()) + " (" + sh.scan.method + "), |Q| - 1 = " + g(dev) + " < 0.1");
  o.info("scan time " + fmt("%.1f", sh.scan_seconds) + " s (target < 900 s)");
  for (const auto& w : sh.scan.warnings) o.info("warning: " + w);
  return o;
}

Outcome criterion2(const Shared& sh) {
  Outcome o;
  const auto& r = sh.scan.residuals;
  for (size_t i = 0; i < r.size(); ++i)
    o.info("n_cut " + std::to_string(sh.scan.cutoffs[i]) + "  residuals " + g(r[i][0]) + " " + g(r[i][1]) + " " + g(r[i][2]));
  const auto& last = r.back();
  o.need(sh.scan.cutoffs.back() == 32 && last[0] < 0.05 && last[1] < 0.05 && last[2] < 0.05, "all three residuals < 0.05 at n_cut 32");
  bool decreasing = true;
  for (size_t i = 1; i < r.size(); ++i)
    for (int c = 0; c < 3; ++c) decreasing &= r[i][c] < r[i - 1][c];
  o.need(decreasing, "each residual strictly decreasing over the scan");
  if (!decreasing) o.info("residuals sit at rounding level at every cutoff, so there is no truncation trend to decrease");
  return o;
}

Outcome criterion3(const Shared& sh) {
  Outcome o;
  auto ff = ff_terms(sh.frame32.value());
  auto c = extra_term_trace_cancellation(sh.frame32.value(), ff);
  o.need(c.module_extra < 1e-4, "extra-term trace sum (module trace) = " + g(c.module_extra) + " < 1e-4 at n_cut 32");
  o.info("module trace terms 2..4: " + g(c.module_terms[1]) + " " + g(c.module_terms[2]) + " " + g(c.module_terms[3]));
  o.info("plain trace terms 2..4: " + g(c.plain_terms[1]) + " " + g(c.plain_terms[2]) + " " + g(c.plain_terms[3]) +
         "  (sum " + g(c.plain_terms[1] + c.plain_terms[2] + c.plain_terms[3]) + ")");
  // signed contributions of X_34^2 = aa - ab - ba + bb, which add up to its trace
  auto pattern = [](const std::array<double, 4>& v) {
    const double want[4] = {-1, 1, 1, -1};
    for (int i = 0; i < 4; ++i)
      if (!(v[i] * want[i] > 1e-8)) return false;
    return true;
  };
  bool plain_ok = pattern(c.pair34_plain), module_ok = pattern(c.pair34_module);
  o.need(plain_ok || module_ok, "(3,4) contributions follow the sign pattern (-,+,+,-)");
  o.info("(3,4) signed contributions, plain trace:  " + g(c.pair34_plain[0]) + " " + g(c.pair34_plain[1]) + " " + g(c.pair34_plain[2]) +
         " " + g(c.pair34_plain[3]));
  o.info("(3,4) signed contributions, module trace: " + g(c.pair34_module[0]) + " " + g(c.pair34_module[1]) + " " +
         g(c.pair34_module[2]) + " " + g(c.pair34_module[3]));
  o.info("(3,4) raw products Tr(aa) Tr(ab) Tr(ba) Tr(bb), plain trace: " + g(c.pair34_plain[0]) + " " + g(-c.pair34_plain[1]) + " " +
         g(-c.pair34_plain[2]) + " " + g(c.pair34_plain[3]));
  o.info("mechanism (1 - UU*) d3U (d3 E) U* = " + g(c.mechanism) + ", cyclicity defect " + g(c.cyclicity));
  return o;
}

Outcome criterion4() {
  Outcome o;
  double xi = xi_spectral_defect(), om = omega_unitarity_defect();
  o.need(xi < 1e-12, "max |Xi - Omega* diag(-3,1,1,1) Omega| = " + g(xi) + " < 1e-12");
  o.need(om < 1e-12, "max |Omega* Omega - 1| = " + g(om) + " < 1e-12");
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::mt19937 rng(kSeed);
  auto s = make_space(12, kUnit, 3);
  double d = projected_general_defect(s, 20, rng);
  o.need(d < 1e-7, "projected vs general curvature, 20 random isometries at n_cut 12: " + g(d) + " < 1e-7");
  double b = block_composition_defect(s, 1, 1, rng);
  o.need(b < 1e-8, "block curvature vs covariant-derivative composition, k = n = 1, n_cut 12: " + g(b) + " < 1e-8");
  o.info("seed " + std::to_string(kSeed));
  return o;
}

Outcome criterion6() {
  Outcome o;
  std::mt19937 rng(kSeed + 6);
  auto s = make_space(12, kUnit, 3);
  double q = projector_idempotence_defect(s, 5, rng);
  o.need(q < 1e-10, "||Q^2 - Q|| = " + g(q) + " < 1e-10");
  double c = ccr_interior_defect(s);
  o.need(c < 1e-14, "[c_i, c_i*] - 1 on the interior: " + g(c) + " (exact up to rounding of sqrt(k)^2, threshold 1e-14)");
  double b = ccr_boundary_pattern(s);
  o.need(b < 1e-12, "commutator defect confined to the top level: " + g(b));
  double x = 0.0;
  for (Theta th : {kUnit, Theta{0.5, 2.0}, Theta{2.0, -1.5}}) x = std::max(x, coordinate_commutator_defect(make_space(12, th, 1)));
  o.need(x < 1e-12, "P_int [x_i, x_j] P_int - i theta_ij P_int: " + g(x) + " < 1e-12");
  auto [leib, comm] = derivation_defects(s, 10, rng);
  o.need(leib < 1e-10, "Leibniz rule on the interior: " + g(leib) + " < 1e-10");
  o.need(comm < 1e-10, "derivations commute on the interior: " + g(comm) + " < 1e-10");
  double p = x1_power_defect(s);
  o.need(p < 1e-10, "d1(x1^p) = p x1^(p-1), p <= 3: " + g(p) + " < 1e-10");
  return o;
}

Outcome criterion7() {
  Outcome o;
  for (double theta : {1.0, 0.5}) {
    double e = plane_wave_recovery_error(48, theta);
    o.need(e < 1e-3, "plane-wave symbol recovery at 48 levels per plane, theta " + g(theta) + ": " + g(e) + " < 1e-3");
  }
  o.info("|k| <= 0.5, |x| <= 1; kernel normalized once by its trace (the k = 0 wave)");
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::mt19937 rng(kSeed + 8);
  auto s = make_space(24, kUnit, 6);
  auto d = gauge_invariance(s, 10, rng);
  o.need(d.action < 1e-6, "action, 10 interior gauge transforms at n_cut 24: relative change " + g(d.action) + " < 1e-6");
  o.need(d.charge < 1e-6, "topological number, same transforms: relative change " + g(d.charge) + " < 1e-6");
  o.info("ASD residuals relative change " + g(d.residual));
  return o;
}

Outcome criterion9() {
  Outcome o;
  auto s = make_space(24, kUnit, 6);
  for (const char* name : {"u1-k1", "u1-k2"}) {
    auto f = instanton_frame(preset(name), s);
    auto d = frame_defects(f);
    std::string p = std::string(name) + ": ";
    o.need(d.zero_modes == f.k(), p + std::to_string(d.zero_modes) + " normalizable zero mode(s), k = " + std::to_string(f.k()));
    o.need(d.range < 1e-6, p + "||UU* - Pi|| = " + g(d.range) + " < 1e-6");
    o.need(d.direct_sum < 1e-6, p + "||U*U - (1_n + I_k)|| = " + g(d.direct_sum) + " < 1e-6");
    o.info(p + "||U*U - (1_n - I_k)|| = " + g(d.right_unit) + " (the frame's actual right unit)");
    for (const auto& w : f.warnings) o.info(p + "warning: " + w);
  }
  return o;
}

Outcome criterion10(const Shared& sh) {
  Outcome o;
  auto ff = ff_terms(sh.frame32.value());
  auto r = corrigan_check(sh.delta32.value(), sh.frame32.value(), ff.t);
  o.need(r.relative_mismatch < 0.1, std::string("relative interior mismatch (") + to_string(r.convention) + " conjugate) = " +
                                        g(r.relative_mismatch) + " < 0.1 at n_cut 32");
  o.info("traces: curvature side " + g(r.lhs_trace) + ", Gamma side " + g(r.rhs_trace) + "; operator-norm mismatch " +
         g(r.relative_norm_mismatch));
  for (const auto& [conv, mism] : r.scan) o.info(std::string("convention ") + to_string(conv) + ": mismatch " + g(mism));
  return o;
}

}  // namespace

int main() {
  Shared sh;
  int failed = 0;
  auto t_all = std::chrono::steady_clock::now();
  auto run = [&](int id, const std::function<Outcome()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.lines.push_back(std::string("[miss] threw: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << fmt("  (%.1f s)", secs) << "\n";
    for (const auto& l : o.lines) std::cout << "    " << l << "\n";
    std::cout.flush();
    failed += !o.pass;
  };

  run(1, [&] { return criterion1(sh); });
  run(2, [&] { return criterion2(sh); });
  {
    auto s = make_space(32, kUnit, 8);
    try {
      sh.delta32 = build_delta(preset("u1-k1"), s);
      sh.frame32 = zero_modes(preset("u1-k1"), sh.delta32.value(), projection_pi(sh.delta32.value()));
    } catch (const std::exception& e) {
      std::cout << "n_cut 32 frame failed: " << e.what() << "\n";
    }
  }
  run(3, [&] { return criterion3(sh); });
  run(4, [] { return criterion4(); });
  run(5, [] { return criterion5(); });
  run(6, [] { return criterion6(); });
  run(7, [] { return criterion7(); });
  run(8, [] { return criterion8(); });
  run(9, [] { return criterion9(); });
  run(10, [&] { return criterion10(sh); });

  double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_all).count();
  std::cout << "SUMMARY: " << 10 - failed << " of 10 criteria pass" << fmt("  (%.1f s)", total) << "\n";
  return failed == 0 ? 0 : 1;
}
