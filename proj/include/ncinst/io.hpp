#pragma once

// JSON/CSV plumbing. Complex numbers are [re, im] pairs; matrices are
// row-major, either as nested rows or as one flat list.

#include "diagnostics.hpp"
#include "weyl.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ncinst {

using json = nlohmann::json;

namespace io {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // the message already carries line and column
    throw InputError(source + ": " + e.what());
  }
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError(field + ": expected a number or an [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline bool is_pair(const json& j) { return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(); }

// Nested rows [[z, z], [z, z]] or a flat row-major list [z, z, z, z].
inline Mat matrix_from_json(const json& j, int rows, int cols, const std::string& field) {
  Mat m(rows, cols);
  if (!j.is_array()) throw InputError(field + ": expected an array");
  if (rows * cols == 0) {
    // [] or, for n x 0, a list of empty rows
    for (const auto& row : j)
      if (!row.is_array() || !row.empty() || j.size() != size_t(rows)) throw InputError(field + ": expected an empty matrix");
    return m;
  }
  // flat only when the count matches; [[1,2],[3,4]] is two real rows, not two pairs
  bool flat = j.size() == size_t(rows) * cols && (j[0].is_number() || is_pair(j[0]));
  if (flat) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        m(r, c) = complex_from_json(j[r * cols + c], field + "[" + std::to_string(r * cols + c) + "]");
    return m;
  }
  if (j.size() != size_t(rows)) throw InputError(field + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(j.size()));
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != size_t(cols))
      throw InputError(field + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      m(r, c) = complex_from_json(row[c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

// Matrix dump: {"rows", "cols", "data"} with data row-major pairs.
inline json matrix_dump(const Mat& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(complex_to_json(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Mat matrix_undump(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw InputError("matrix dump needs rows, cols and data");
  return matrix_from_json(j["data"], j["rows"].get<int>(), j["cols"].get<int>(), "data");
}

// ---------------------------------------------------------------------------
// ADHM data: {k, n, theta: [t12, t34], B1, B2, I, J}

inline json adhm_to_json(const AdhmData& d) {
  return {{"k", d.k},
          {"n", d.n},
          {"theta", {d.theta.theta12, d.theta.theta34}},
          {"B1", matrix_to_json(d.b1)},
          {"B2", matrix_to_json(d.b2)},
          {"I", matrix_to_json(d.i)},
          {"J", matrix_to_json(d.j)}};
}

inline int int_field(const json& j, const char* name) {
  if (!j.contains(name)) throw InputError(std::string("missing field '") + name + "'");
  if (!j[name].is_number_integer()) throw InputError(std::string("field '") + name + "' must be an integer");
  return j[name].get<int>();
}

inline AdhmData adhm_from_json(const json& j) {
  if (!j.is_object()) throw InputError("ADHM data must be a JSON object");
  AdhmData d;
  d.k = int_field(j, "k");
  d.n = int_field(j, "n");
  if (d.k < 0 || d.n < 1) throw InputError("need k >= 0 and n >= 1");
  if (j.contains("theta")) {
    const json& t = j["theta"];
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
      throw InputError("field 'theta' must be [theta12, theta34]");
    d.theta = {t[0].get<double>(), t[1].get<double>()};
  }
  auto mat = [&](const char* name, int r, int c) {
    if (!j.contains(name)) {
      if (r * c == 0) return Mat(r, c);
      throw InputError(std::string("missing field '") + name + "'");
    }
    return matrix_from_json(j[name], r, c, name);
  };
  d.b1 = mat("B1", d.k, d.k);
  d.b2 = mat("B2", d.k, d.k);
  d.i = mat("I", d.k, d.n);
  d.j = mat("J", d.n, d.k);
  try {
    d.validate();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  return d;
}

inline AdhmData read_adhm(const std::string& path) { return adhm_from_json(parse_json(read_file(path), path)); }

// ---------------------------------------------------------------------------
// Sampled functions: {axes: [{lo, hi, count} x 4], values: [z, ...]} with
// values row-major, axis 0 slowest.

inline json sampled_to_json(const SampledFunction& f) {
  json axes = json::array();
  for (const auto& a : f.axes) axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
  json values = json::array();
  for (const auto& v : f.values) values.push_back(complex_to_json(v));
  return {{"axes", axes}, {"values", values}};
}

inline SampledFunction sampled_from_json(const json& j) {
  if (!j.is_object() || !j.contains("axes") || !j.contains("values")) throw InputError("sampled function needs axes and values");
  const json& axes = j["axes"];
  if (!axes.is_array() || axes.size() != 4) throw InputError("axes: expected four entries");
  SampledFunction f;
  for (int a = 0; a < 4; ++a) {
    const json& x = axes[a];
    std::string where = "axes[" + std::to_string(a) + "]";
    if (!x.is_object() || !x.contains("lo") || !x.contains("hi") || !x.contains("count"))
      throw InputError(where + ": needs lo, hi and count");
    if (!x["lo"].is_number() || !x["hi"].is_number() || !x["count"].is_number_integer())
      throw InputError(where + ": lo and hi must be numbers, count an integer");
    f.axes[a] = {x["lo"].get<double>(), x["hi"].get<double>(), x["count"].get<int>()};
  }
  const json& v = j["values"];
  if (!v.is_array()) throw InputError("values: expected an array");
  for (size_t i = 0; i < v.size(); ++i) f.values.push_back(complex_from_json(v[i], "values[" + std::to_string(i) + "]"));
  try {
    f.validate();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  return f;
}

// CSV grid: header x1,x2,x3,x4,re,im then one row per grid point in any
// order. The axes are read off the distinct coordinates and must be uniform.
inline SampledFunction sampled_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x1,x2,x3,x4,re,im", 0) != 0)
    throw InputError("sampled CSV: header must be x1,x2,x3,x4,re,im");
  std::vector<std::array<double, 6>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 6> r{};
    std::stringstream ls(line);
    std::string cell;
    int c = 0;
    try {
      while (std::getline(ls, cell, ',')) {
        if (c >= 6) throw InputError("");
        size_t used = 0;
        r[c++] = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw InputError("");
      }
    } catch (const std::exception&) {
      c = -1;
    }
    if (c != 6) throw InputError("sampled CSV line " + std::to_string(lineno) + ": expected six numbers");
    rows.push_back(r);
  }
  SampledFunction f;
  std::array<std::vector<double>, 4> coords;
  for (int a = 0; a < 4; ++a) {
    for (const auto& r : rows) coords[a].push_back(r[a]);
    std::sort(coords[a].begin(), coords[a].end());
    coords[a].erase(std::unique(coords[a].begin(), coords[a].end()), coords[a].end());
    if (coords[a].empty()) throw InputError("sampled CSV: no rows");
    const auto& v = coords[a];
    f.axes[a] = {v.front(), v.back(), int(v.size())};
    double h = f.axes[a].spacing();
    for (size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i] - f.axes[a].point(int(i))) > 1e-9 * std::max(1.0, std::abs(h)))
        throw InputError("sampled CSV: axis " + std::to_string(a + 1) + " is not uniformly spaced");
  }
  if (rows.size() != f.size()) throw InputError("sampled CSV: rows do not fill the grid exactly once");
  f.values.assign(f.size(), cplx(0.0));
  std::vector<char> seen(f.size(), 0);
  for (const auto& r : rows) {
    std::array<int, 4> idx{};
    for (int a = 0; a < 4; ++a)
      idx[a] = int(std::lower_bound(coords[a].begin(), coords[a].end(), r[a]) - coords[a].begin());
    size_t k = f.flat(idx[0], idx[1], idx[2], idx[3]);
    if (seen[k]) throw InputError("sampled CSV: duplicate grid point");
    seen[k] = 1;
    f.values[k] = {r[4], r[5]};
  }
  try {
    f.validate();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  return f;
}

inline SampledFunction read_sampled(const std::string& path) {
  std::string text = read_file(path);
  bool is_csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  return is_csv ? sampled_from_csv(text) : sampled_from_json(parse_json(text, path));
}

// ---------------------------------------------------------------------------
// Charge reports

inline json charge_report_to_json(const ChargeReport& r) {
  json rows = json::array();
  for (size_t i = 0; i < r.cutoffs.size(); ++i) {
    rows.push_back({{"n_cut", r.cutoffs[i]},
                    {"margin", r.margins[i]},
                    {"Q", r.charges[i]},
                    {"Q_imag", r.charge_imag[i]},
                    {"asd_residual", r.residuals[i]},
                    {"term_traces", r.term_traces[i]}});
  }
  return {{"cutoffs", rows},
          {"extrapolated", r.extrapolated},
          {"extrapolated_abs", r.extrapolated_abs()},
          {"method", r.method},
          {"warnings", r.warnings}};
}

inline ChargeReport charge_report_from_json(const json& j) {
  ChargeReport r;
  try {
    for (const auto& row : j.at("cutoffs")) {
      r.cutoffs.push_back(row.at("n_cut").get<int>());
      r.margins.push_back(row.at("margin").get<int>());
      r.charges.push_back(row.at("Q").get<double>());
      r.charge_imag.push_back(row.at("Q_imag").get<double>());
      r.residuals.push_back(row.at("asd_residual").get<std::array<double, 3>>());
      r.term_traces.push_back(row.at("term_traces").get<std::array<double, 4>>());
    }
    r.extrapolated = j.at("extrapolated").get<double>();
    r.method = j.at("method").get<std::string>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw InputError(std::string("charge report: ") + e.what());
  }
  return r;
}

inline const char* kChargeCsvHeader = "n_cut,margin,Q,Q_imag,asd_1,asd_2,asd_3,term_1,term_2,term_3,term_4,extrapolated,method";

// One row per cutoff; the extrapolated value and method repeat on every row.
inline std::string charge_report_to_csv(const ChargeReport& r) {
  std::ostringstream o;
  o << std::setprecision(std::numeric_limits<double>::max_digits10);
  o << kChargeCsvHeader << "\n";
  for (size_t i = 0; i < r.cutoffs.size(); ++i) {
    o << r.cutoffs[i] << "," << r.margins[i] << "," << r.charges[i] << "," << r.charge_imag[i];
    for (double v : r.residuals[i]) o << "," << v;
    for (double v : r.term_traces[i]) o << "," << v;
    o << "," << r.extrapolated << "," << r.method << "\n";
  }
  return o.str();
}

inline ChargeReport charge_report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kChargeCsvHeader) throw InputError("charge CSV: unexpected header");
  ChargeReport r;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 13) throw InputError("charge CSV line " + std::to_string(lineno) + ": expected 13 fields");
    try {
      r.cutoffs.push_back(std::stoi(f[0]));
      r.margins.push_back(std::stoi(f[1]));
      r.charges.push_back(std::stod(f[2]));
      r.charge_imag.push_back(std::stod(f[3]));
      r.residuals.push_back({std::stod(f[4]), std::stod(f[5]), std::stod(f[6])});
      r.term_traces.push_back({std::stod(f[7]), std::stod(f[8]), std::stod(f[9]), std::stod(f[10])});
      r.extrapolated = std::stod(f[11]);
      r.method = f[12];
    } catch (const std::exception&) {
      throw InputError("charge CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return r;
}

}  // namespace io

// ---------------------------------------------------------------------------
// Run configuration: a JSON file mirrors the command-line flags; flags win.

struct RunConfig {
  std::optional<std::string> input;
  std::optional<std::string> preset;
  std::vector<int> cutoffs;
  std::string margin = "n/4";
  std::optional<double> tol;  // each command has its own default
  unsigned seed = 12345;
  std::optional<std::string> out;
  std::string format = "json";

  void validate() const {
    for (size_t i = 1; i < cutoffs.size(); ++i)
      if (cutoffs[i] <= cutoffs[i - 1]) throw InputError("cutoffs must be strictly increasing");
    for (int c : cutoffs)
      if (c < 2) throw InputError("cutoffs must be at least 2");
    if (tol && !(*tol > 0)) throw InputError("tolerance must be positive");
    if (format != "json" && format != "csv") throw InputError("format must be json or csv");
    if (input && preset) throw InputError("give either an input file or a preset, not both");
    try {
      MarginRule::parse(margin);
    } catch (const InvalidArgument& e) {
      throw InputError(e.what());
    }
  }

  static RunConfig from_json(const json& j) {
    RunConfig c;
    if (!j.is_object()) throw InputError("config must be a JSON object");
    static const std::vector<std::string> known{"input", "preset", "cutoffs", "margin", "tol", "seed", "out", "format"};
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) throw InputError("config: unknown field '" + it.key() + "'");
    try {
      if (j.contains("input")) c.input = j["input"].get<std::string>();
      if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
      if (j.contains("cutoffs")) c.cutoffs = j["cutoffs"].get<std::vector<int>>();
      if (j.contains("margin")) {
        c.margin = j["margin"].is_string() ? j["margin"].get<std::string>() : j["margin"].dump();
      }
      if (j.contains("tol")) c.tol = j["tol"].get<double>();
      if (j.contains("seed")) c.seed = j["seed"].get<unsigned>();
      if (j.contains("out")) c.out = j["out"].get<std::string>();
      if (j.contains("format")) c.format = j["format"].get<std::string>();
    } catch (const json::exception& e) {
      throw InputError(std::string("config: ") + e.what());
    }
    return c;
  }

  json to_json() const {
    json j{{"cutoffs", cutoffs}, {"margin", margin}, {"seed", seed}, {"format", format}};
    if (tol) j["tol"] = *tol;
    if (input) j["input"] = *input;
    if (preset) j["preset"] = *preset;
    if (out) j["out"] = *out;
    return j;
  }

  double tol_or(double fallback) const { return tol.value_or(fallback); }

  AdhmData adhm() const {
    if (input) return io::read_adhm(*input);
    try {
      return ncinst::preset(preset.value_or("u1-k1"));
    } catch (const InvalidArgument& e) {
      throw InputError(e.what());
    }
  }
};

}  // namespace ncinst
