// Command-line front end. Exit codes: 0 success, 1 tolerance failure or
// numerical abort, 2 bad input.

#include <ncinst/checks.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace ncinst;

namespace {

constexpr int kOk = 0;
constexpr int kTolerance = 1;
constexpr int kInput = 2;

struct Flags {
  std::string input, preset, margin, out, format, config, wave;
  std::vector<int> cutoffs;
  double tol = 0.0;
  unsigned seed = 0;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "ADHM data (JSON) or, for weyl-roundtrip, a sampled function (JSON or .csv)");
  cmd->add_option("--preset", f.preset, "named ADHM preset: u1-k1, u1-k2, u2-k1, trivial");
  cmd->add_option("--cutoffs", f.cutoffs, "comma-separated Fock cutoffs, strictly increasing")->delimiter(',');
  cmd->add_option("--margin", f.margin, "interior margin rule: n/4, a fraction like 0.25, or a fixed integer");
  cmd->add_option("--tol", f.tol, "pass threshold (command-specific default)");
  cmd->add_option("--seed", f.seed, "RNG seed for randomized checks");
  cmd->add_option("--out", f.out, "write the report here instead of stdout");
  cmd->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--config", f.config, "JSON file with the same fields; flags override it");
}

RunConfig resolve(CLI::App* cmd, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = RunConfig::from_json(io::parse_json(io::read_file(f.config), f.config));
  auto given = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
  if (given("--input")) {
    c.input = f.input;
    c.preset.reset();
  }
  if (given("--preset")) {
    c.preset = f.preset;
    c.input.reset();
  }
  if (given("--cutoffs")) c.cutoffs = f.cutoffs;
  if (given("--margin")) c.margin = f.margin;
  if (given("--tol")) c.tol = f.tol;
  if (given("--seed")) c.seed = f.seed;
  if (given("--out")) c.out = f.out;
  if (given("--format")) c.format = f.format;
  c.validate();
  return c;
}

// Report goes to --out or stdout; the one-line summary goes to stdout when
// the report is in a file, stderr otherwise, so piped output stays parseable.
void emit(const RunConfig& c, const json& j, const std::string& csv, const std::string& summary) {
  std::string body = c.format == "csv" ? csv : j.dump(2) + "\n";
  if (c.out) {
    io::write_file(*c.out, body);
    std::cout << summary << "\n";
  } else {
    std::cout << body;
    std::cerr << summary << "\n";
  }
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<int> cutoffs_or(const RunConfig& c, std::vector<int> fallback) { return c.cutoffs.empty() ? fallback : c.cutoffs; }

// ---------------------------------------------------------------------------

int cmd_verify_adhm(const RunConfig& c) {
  AdhmData d = c.adhm();
  auto r = adhm_residuals(d);
  double tol = c.tol_or(1e-8);
  bool ok = r.moment <= tol && r.complex_ <= tol;
  json j{{"k", d.k}, {"n", d.n}, {"theta", {d.theta.theta12, d.theta.theta34}}, {"residual_moment", r.moment},
         {"residual_complex", r.complex_}, {"tol", tol}, {"pass", ok}};
  std::string csv = "k,n,theta12,theta34,residual_moment,residual_complex,tol,pass\n" + std::to_string(d.k) + "," +
                    std::to_string(d.n) + "," + num(d.theta.theta12) + "," + num(d.theta.theta34) + "," + num(r.moment) + "," +
                    num(r.complex_) + "," + num(tol) + "," + (ok ? "true" : "false") + "\n";
  emit(c, j, csv, "residuals " + num(r.moment) + " " + num(r.complex_) + (ok ? "  ok" : "  above tolerance " + num(tol)));
  return ok ? kOk : kTolerance;
}

int cmd_charge(const RunConfig& c) {
  AdhmData d = c.adhm();
  auto cutoffs = cutoffs_or(c, {16, 24, 32});
  auto rule = MarginRule::parse(c.margin);
  ChargeReport rep = charge_scan(d, cutoffs, rule);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  emit(c, io::charge_report_to_json(rep), io::charge_report_to_csv(rep),
       "extrapolated Q = " + num(rep.extrapolated) + " (" + rep.method + ")");
  return kOk;
}

int cmd_asd_residual(const RunConfig& c) {
  AdhmData d = c.adhm();
  auto cutoffs = cutoffs_or(c, {32});
  auto rule = MarginRule::parse(c.margin);
  double tol = c.tol_or(0.05);
  json rows = json::array();
  std::string csv = "n_cut,margin,asd_1,asd_2,asd_3,pass\n";
  bool all_ok = true;
  std::string summary;
  for (int n_cut : cutoffs) {
    auto s = make_space(n_cut, d.theta, rule.margin(n_cut));
    auto f = instanton_frame(d, s);
    for (const auto& w : f.warnings) std::cerr << "warning (n_cut " << n_cut << "): " << w << "\n";
    auto r = asd_residual(curvature_projected(f.u));
    bool ok = r[0] < tol && r[1] < tol && r[2] < tol;
    all_ok &= ok;
    rows.push_back({{"n_cut", n_cut}, {"margin", s.margin()}, {"asd_residual", r}, {"pass", ok}});
    csv += std::to_string(n_cut) + "," + std::to_string(s.margin()) + "," + num(r[0]) + "," + num(r[1]) + "," + num(r[2]) + "," +
           (ok ? "true" : "false") + "\n";
    summary = "n_cut " + std::to_string(n_cut) + ": " + num(r[0]) + " " + num(r[1]) + " " + num(r[2]);
  }
  emit(c, json{{"tol", tol}, {"cutoffs", rows}, {"pass", all_ok}}, csv, summary + (all_ok ? "  ok" : "  above tolerance " + num(tol)));
  return all_ok ? kOk : kTolerance;
}

// Without --input: quantize the plane wave given by --wave and read its
// symbol back at probe points with |x| <= 1. With --input: quantize the
// samples and read them back at grid points inside the trust radius.
int cmd_weyl_roundtrip(const RunConfig& c, const std::string& wave) {
  int n_cut = cutoffs_or(c, {24}).front();
  auto s = make_space(n_cut, Theta{1.0, 1.0}, 0);
  double tol = c.tol_or(1e-3);
  json j;
  std::string csv;
  double err = 0.0;
  if (c.input) {
    SampledFunction f = io::read_sampled(*c.input);
    auto q = quantize_sampled(s, f);
    for (const auto& w : q.warnings) std::cerr << "warning: " << w << "\n";
    double r = weyl::trust_radius(n_cut, 1.0);
    std::vector<Point4> xs;
    std::vector<cplx> want;
    double scale = 0.0;
    for (const auto& v : f.values) scale = std::max(scale, std::abs(v));
    for (int a = 0; a < f.axes[0].count; ++a)
      for (int b = 0; b < f.axes[1].count; ++b)
        for (int cc = 0; cc < f.axes[2].count; ++cc)
          for (int dd = 0; dd < f.axes[3].count; ++dd) {
            Point4 x = f.point(a, b, cc, dd);
            if (std::abs(x[0]) > r || std::abs(x[1]) > r || std::abs(x[2]) > r || std::abs(x[3]) > r) continue;
            xs.push_back(x);
            want.push_back(f.values[f.flat(a, b, cc, dd)]);
          }
    auto got = symbol(q.op, xs);
    for (size_t i = 0; i < xs.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    if (scale > 0) err /= scale;
    j = {{"n_cut", n_cut}, {"points", xs.size()}, {"relative_error", err}, {"warnings", q.warnings}};
    csv = "n_cut,points,relative_error\n" + std::to_string(n_cut) + "," + std::to_string(xs.size()) + "," + num(err) + "\n";
  } else {
    WaveVector k;
    std::stringstream ss(wave);
    std::string cell;
    int i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= 4) throw InputError("--wave takes four comma-separated numbers");
      try {
        k.k[i++] = std::stod(cell);
      } catch (const std::exception&) {
        throw InputError("--wave: malformed number '" + cell + "'");
      }
    }
    if (i != 4) throw InputError("--wave takes four comma-separated numbers");
    FockOp w = quantize_plane_wave(s, k);
    std::vector<Point4> xs{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, -1, 0, 0}, {0, 0, 0.6, -0.7}, {0.5, 0.5, -0.5, 0.5}, {-0.2, 0.9, 0.3, 0.1}};
    auto got = symbol(w, xs);
    for (size_t p = 0; p < xs.size(); ++p) {
      double phase = k.k[0] * xs[p][0] + k.k[1] * xs[p][1] + k.k[2] * xs[p][2] + k.k[3] * xs[p][3];
      err = std::max(err, std::abs(got[p] - std::exp(kI * phase)));
    }
    bool zero = k.k == std::array<double, 4>{0, 0, 0, 0};
    double id_dev = zero ? max_abs(w.mat() - Mat::Identity(s.dim(), s.dim())) : -1.0;
    j = {{"n_cut", n_cut}, {"wave", k.k}, {"symbol_error", err}};
    if (zero) j["identity_deviation"] = id_dev;
    csv = "n_cut,k1,k2,k3,k4,symbol_error,identity_deviation\n" + std::to_string(n_cut) + "," + num(k.k[0]) + "," + num(k.k[1]) + "," +
          num(k.k[2]) + "," + num(k.k[3]) + "," + num(err) + "," + (zero ? num(id_dev) : "") + "\n";
  }
  bool ok = err <= tol;
  j["tol"] = tol;
  j["pass"] = ok;
  emit(c, j, csv, "round-trip error " + num(err) + (ok ? "  ok" : "  above tolerance " + num(tol)));
  return ok ? kOk : kTolerance;
}

int cmd_selftest(const RunConfig& c) {
  int n_cut = cutoffs_or(c, {12}).front();
  auto t0 = std::chrono::steady_clock::now();
  auto rep = checks::selftest(n_cut, c.seed, [&](const checks::Check& k) {
    std::cerr << (k.pass ? "PASS " : "FAIL ") << k.suite << " / " << k.name << "  " << num(k.value) << " <= " << num(k.tol)
              << (k.note.empty() ? "" : "  (" + k.note + ")") << "\n";
  });
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json list = json::array();
  std::string csv = "suite,name,value,tol,pass\n";
  for (const auto& k : rep.checks) {
    list.push_back(checks::check_to_json(k));
    csv += k.suite + ",\"" + k.name + "\"," + num(k.value) + "," + num(k.tol) + "," + (k.pass ? "true" : "false") + "\n";
  }
  json j{{"n_cut", n_cut}, {"seed", c.seed}, {"passed", rep.passed()}, {"failed", rep.failed()}, {"seconds", secs}, {"checks", list}};
  emit(c, j, csv,
       "selftest n_cut " + std::to_string(n_cut) + ": " + std::to_string(rep.passed()) + " passed, " + std::to_string(rep.failed()) +
           " failed (" + num(secs) + " s)");
  return rep.failed() == 0 ? kOk : kTolerance;
}

void dump_spectrum(const SingularGamma& e) {
  std::cerr << "error: " << e.what() << "\nlowest eigenvalues of Delta^* Delta:\n";
  for (double v : e.spectrum()) std::cerr << "  " << num(v) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical noncommutative ADHM instantons on truncated Fock spaces"};
  app.require_subcommand(1);
  Flags f;
  f.wave = "0,0,0,0";
  std::vector<std::pair<CLI::App*, std::function<int(const RunConfig&)>>> cmds;
  auto add = [&](const char* name, const char* help, std::function<int(const RunConfig&)> run) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, f);
    cmds.emplace_back(cmd, std::move(run));
    return cmd;
  };
  add("verify-adhm", "check the two ADHM constraints", cmd_verify_adhm);
  add("charge", "topological charge over a cutoff scan, extrapolated", cmd_charge);
  add("asd-residual", "anti-self-duality residuals of the instanton curvature", cmd_asd_residual);
  add("weyl-roundtrip", "quantize then read back a symbol", [&](const RunConfig& c) { return cmd_weyl_roundtrip(c, f.wave); })
      ->add_option("--wave", f.wave, "plane-wave vector k1,k2,k3,k4 (default 0,0,0,0)");
  add("selftest", "run every invariant check and report counts", cmd_selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  for (auto& [cmd, run] : cmds) {
    if (!cmd->parsed()) continue;
    try {
      return run(resolve(cmd, f));
    } catch (const InputError& e) {
      std::cerr << "input error: " << e.what() << "\n";
      return kInput;
    } catch (const InvalidArgument& e) {
      std::cerr << "input error: " << e.what() << "\n";
      return kInput;
    } catch (const ShapeMismatch& e) {
      std::cerr << "input error: " << e.what() << "\n";
      return kInput;
    } catch (const SingularGamma& e) {
      dump_spectrum(e);
      return kTolerance;
    } catch (const ToleranceError& e) {
      std::cerr << "tolerance failure: " << e.what() << "\n";
      return kTolerance;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kTolerance;
    }
  }
  return kInput;
}
