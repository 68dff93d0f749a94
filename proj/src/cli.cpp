#include "nahmkn/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "nahmkn/counterexample.hpp"
#include "nahmkn/estimates.hpp"
#include "nahmkn/kempf_ness.hpp"
#include "nahmkn/moduli_map.hpp"
#include "nahmkn/polynomial.hpp"

namespace nahmkn::cli {

namespace fs = std::filesystem;
using io::Json;

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> table{
      {"reduced-flow", "RK4 solution of the reduced Nahm equation P' = -[P2, P3] (cyclic) from X",
       "params: X (triple, default the su(2) triple T), scale (default 1)\n"
       "reduced-flow.csv: t, P<a><i><j>_re, P<a><i><j>_im for a = 1..3\n"
       "reduced-flow.json: status, blowup_time, sup_norm, residual, conserved_drift, closed_form_error"},
      {"gauge-fix", "integrates the Nahm equations with constant A0 and moves the solution to A0 = 0",
       "params: A0 (matrix, default T1), X (triple, default T/2)\n"
       "gauge-fix.csv: t, k<i><j>_re, k<i><j>_im (the gauge transformation)\n"
       "gauge-fix.json: input_residual, deviation from the reduced flow, k(1)"},
      {"psi", "the map (k, X) -> (g, Y) = (k g(1), X2 + i X3) onto G x g",
       "params: k (matrix, default 1), X (triple, default 0)\n"
       "psi.json: record {k, X, g, Y}"},
      {"psi-inv", "Newton shooting for the preimage of (g, Y)",
       "params: g (matrix, default 1), Y (matrix, default 0)\n"
       "psi-inv.json: record {k, X, g, Y}, residual, iterations, round_trip"},
      {"potential", "Kahler potential rho(X) and the scaling law along s X",
       "params: X (triple, default T), scales (list, default 0.1 .. 1)\n"
       "potential.csv: scale, rho, rho_from_scaling, residual\n"
       "potential.json: rho(X), worst scaling residual"},
      {"moment", "hyperkahler moment map and the residual of mu_C against Phi o psi",
       "params: k (matrix, default 1), X (triple, default T/2)\n"
       "moment.json: record {k, X, g, Y}, mu = {I, J, K: {m0, m1}}, complex_residual"},
      {"verify-identities", "randomized identity suites with a pass/fail table",
       "samples: points per suite (default 100)\n"
       "verify-identities.csv: suite, samples, max_residual, threshold, pass\n"
       "suites: complex-moment, potential-moment, dpsi-origin, scaling-law, chart-roundtrip",
       100},
      {"kn-classify", "Kempf-Ness classification of a point for a linear action on C^N",
       "params: problem (object or path: generators | weights, character, hbar, shift),\n"
       "        point (vector), potential (standard | log_norm)\n"
       "kn-classify.json: verdict, value, iterations, gradient_norm, witness"},
      {"counterexample", "S^1 on C* with potential sqrt(1 + log^2 |z|^2)",
       "params: grid_lo (1e-16), grid_hi (1e16), grid_points (10000), levels ([1, 2, 3]), exponents ([0, 1, 2, 3])\n"
       "counterexample.csv: t, omega, mu, ratio_m0, ratio_m1, ratio_m2, ratio_m3\n"
       "counterexample.json: emptiness per level, domination per exponent"},
      {"growth-scan", "growth bound |psi(k, X)|^2 <= b exp(c sqrt(rho(X))) on SU(2) samples",
       "samples: default 1000; params: ball (1.5), s_max (30), core_radius (0.1)\n"
       "growth-scan.csv: index, abs_x, in_core, left, right, ratio, rho, gronwall_ratio,\n"
       "                 gronwall_ratio_logk, holder_left, holder_right, pass",
       1000},
      {"properness-scan", "min of rho on spheres |X| = R inside W",
       "samples: directions (default 64); params: radii ([0.5, 1, 2, 4, 8])\n"
       "properness-scan.csv: radius, inside, rejected, min_rho, rho_su2_ray, pass",
       64},
      {"dominate-scan", "max |u| exp(-rho) over windows of rho for polynomials u of degree <= 6",
       "samples: default 400; params: monomials (list, e.g. \"g11*y12^2\"), window_edges, s_max, noise\n"
       "dominate-scan.csv: polynomial, degree, window_lo, window_hi, count, max_ratio",
       400},
      {"report", "collects the JSON artifacts found in --out",
       "report.csv: artifact, command, config_hash, seed, pass"},
  };
  return table;
}

namespace {

const CommandInfo* find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

Json RunConfig::to_json() const {
  const auto* info = find_command(command);
  const int s = samples > 0 ? samples : info ? info->default_samples : 0;
  return {{"command", command},
          {"n", n},
          {"step", step},
          {"samples", s},
          {"seed", seed},
          {"tolerances", {{"residual", tol.residual}, {"newton", tol.newton}, {"kn", tol.kn}}},
          {"params", params}};
}

std::string RunConfig::hash() const { return io::hex(io::fnv1a(to_json().dump())); }

RunConfig apply_config(const Json& j, RunConfig c) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  static const std::set<std::string> keys{"command", "n", "step", "samples", "seed", "out", "tolerances", "params"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw SchemaError("unknown config key '" + k + "'");
  const auto number = [&](const Json& v, const std::string& k) {
    if (!v.is_number()) throw SchemaError("'" + k + "' must be a number");
    return v.get<double>();
  };
  const auto integer = [&](const Json& v, const std::string& k) {
    if (!v.is_number_integer()) throw SchemaError("'" + k + "' must be an integer");
    return v.get<long long>();
  };
  if (j.contains("command")) {
    if (!j["command"].is_string()) throw SchemaError("'command' must be a string");
    const auto cmd = j["command"].get<std::string>();
    if (!c.command.empty() && cmd != c.command)
      throw SchemaError("config is for '" + cmd + "', not '" + c.command + "'");
    c.command = cmd;
  }
  if (j.contains("n")) {
    const auto n = integer(j["n"], "n");
    if (n != 2 && n != 3) throw SchemaError("'n' must be 2 or 3");
    c.n = static_cast<int>(n);
  }
  if (j.contains("step")) {
    const double h = number(j["step"], "step");
    if (!(h > 0.0) || h > defaults::kMaxStep) throw SchemaError("'step' must lie in (0, 1/16]");
    c.step = h;
  }
  if (j.contains("samples")) {
    const auto s = integer(j["samples"], "samples");
    if (s < 1 || s > 1000000) throw SchemaError("'samples' must lie in [1, 1e6]");
    c.samples = static_cast<int>(s);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("'seed' must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string() || j["out"].get<std::string>().empty()) throw SchemaError("'out' must be a path");
    c.out = j["out"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) throw SchemaError("'tolerances' must be an object");
    for (const auto& [k, v] : t.items()) {
      const double x = number(v, "tolerances." + k);
      if (!(x > 0.0) || x >= 1.0) throw SchemaError("tolerances must lie in (0, 1)");
      if (k == "residual") c.tol.residual = x;
      else if (k == "newton") c.tol.newton = x;
      else if (k == "kn") c.tol.kn = x;
      else throw SchemaError("unknown tolerance '" + k + "'");
    }
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw SchemaError("'params' must be an object");
    for (const auto& [k, v] : j["params"].items()) c.params[k] = v;
  }
  return c;
}

namespace {

// ---- plumbing ----------------------------------------------------------------

class Params {
 public:
  Params(const RunConfig& cfg, std::initializer_list<const char*> allowed) : j_(cfg.params), cmd_(cfg.command) {
    for (const auto& [k, v] : j_.items())
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        throw SchemaError(cmd_ + ": unknown parameter '" + k + "'");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const Json& raw(const std::string& k) const { return j_.at(k); }

  double number(const std::string& k, double def, double lo, double hi) const {
    if (!has(k)) return def;
    if (!j_[k].is_number()) throw SchemaError(where(k) + " must be a number");
    const double v = j_[k].get<double>();
    if (!(v >= lo && v <= hi)) throw SchemaError(where(k) + " out of range");
    return v;
  }

  int integer(const std::string& k, int def, int lo, int hi) const {
    if (!has(k)) return def;
    if (!j_[k].is_number_integer()) throw SchemaError(where(k) + " must be an integer");
    const auto v = j_[k].get<long long>();
    if (v < lo || v > hi) throw SchemaError(where(k) + " out of range");
    return static_cast<int>(v);
  }

  std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    if (!j_[k].is_array() || j_[k].empty()) throw SchemaError(where(k) + " must be a nonempty list");
    std::vector<double> out;
    for (const auto& v : j_[k]) {
      if (!v.is_number()) throw SchemaError(where(k) + " must contain numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& k, std::vector<int> def) const {
    if (!has(k)) return def;
    if (!j_[k].is_array() || j_[k].empty()) throw SchemaError(where(k) + " must be a nonempty list");
    std::vector<int> out;
    for (const auto& v : j_[k]) {
      if (!v.is_number_integer()) throw SchemaError(where(k) + " must contain integers");
      out.push_back(v.get<int>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& k, std::vector<std::string> def) const {
    if (!has(k)) return def;
    if (!j_[k].is_array() || j_[k].empty()) throw SchemaError(where(k) + " must be a nonempty list");
    std::vector<std::string> out;
    for (const auto& v : j_[k]) {
      if (!v.is_string()) throw SchemaError(where(k) + " must contain strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  std::string text(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    if (!j_[k].is_string()) throw SchemaError(where(k) + " must be a string");
    return j_[k].get<std::string>();
  }

  std::optional<Matrix> matrix(const std::string& k, int n) const {
    if (!has(k)) return {};
    Matrix m;
    try {
      m = io::matrix_from_json(j_[k], where(k));
    } catch (const InvalidProblem& e) {
      throw SchemaError(e.what());
    }
    if (m.rows() != n || m.cols() != n) throw SchemaError(where(k) + " must be " + std::to_string(n) + " x " + std::to_string(n));
    return m;
  }

  std::optional<Triple> triple(const std::string& k, int n) const {
    if (!has(k)) return {};
    Triple x;
    try {
      x = io::triple_from_json(j_[k], where(k));
    } catch (const InvalidProblem& e) {
      throw SchemaError(e.what());
    }
    for (const auto& m : x)
      if (m.rows() != n || m.cols() != n) throw SchemaError(where(k) + " must hold " + std::to_string(n) + " x " + std::to_string(n) + " matrices");
    return x;
  }

 private:
  std::string where(const std::string& k) const { return cmd_ + ".params." + k; }

  const Json& j_;
  std::string cmd_;
};

struct Run {
  const RunConfig& cfg;
  std::ostream& log;
  io::Stamp stamp;
  fs::path out;
  Json result = Json::object();
  Json checks = Json::array();
  bool pass = true;

  Run(const RunConfig& c, std::ostream& l) : cfg(c), log(l), stamp{c.command, c.hash(), c.seed}, out(c.out) {}

  int samples() const { return cfg.samples > 0 ? cfg.samples : find_command(cfg.command)->default_samples; }

  void check(const std::string& name, double value, double limit, bool ok) {
    checks.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", ok}});
    if (!ok) {
      pass = false;
      log << "FAIL " << name << ": " << io::format_double(value) << " (limit " << io::format_double(limit) << ")\n";
    }
  }
  void below(const std::string& name, double value, double limit) { check(name, value, limit, value < limit); }

  io::CsvWriter csv(std::vector<std::string> columns) const { return io::CsvWriter(stamp, std::move(columns)); }
  void save(const io::CsvWriter& w) const { w.save(out / (cfg.command + ".csv")); }

  int finish() {
    Json j = io::header(stamp);
    j["config"] = cfg.to_json();
    j["pass"] = pass;
    j["checks"] = checks;
    j["result"] = result;
    const fs::path path = out / (cfg.command + ".json");
    io::write_json(path, j);
    log << cfg.command << ": " << (pass ? "pass" : "FAIL") << " -> " << path.string() << "\n";
    return pass ? kExitOk : kExitNumeric;
  }
};

Triple su2_embedded(int n) {
  const Triple t = su2_triple();
  if (n == 2) return t;
  Triple out = zero_triple(n);
  for (int a = 0; a < 3; ++a) out[static_cast<std::size_t>(a)].topLeftCorner(2, 2) = t[static_cast<std::size_t>(a)];
  return out;
}

FlowOptions flow_options(const RunConfig& cfg) {
  FlowOptions o;
  o.step = cfg.step;
  o.residual_tol = cfg.tol.residual;
  return o;
}

MapOptions map_options(const RunConfig& cfg) {
  MapOptions o;
  o.step = cfg.step;
  return o;
}

InverseOptions inverse_options(const RunConfig& cfg) {
  InverseOptions o;
  o.map = map_options(cfg);
  o.tol = cfg.tol.newton;
  return o;
}

double triple_distance(const Triple& a, const Triple& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]).squaredNorm();
  return std::sqrt(s);
}

ModuliPoint random_point(int n, Rng& rng, double radius) {
  for (;;) {
    Triple x = random_triple_in_ball(n, rng, radius);
    if (membership_W(x) != Membership::inside) continue;
    return ModuliPoint::make(random_special_unitary(n, rng), x, false);
  }
}

Json record(const ModuliPoint& p, const CotangentPoint& q) {
  return {{"k", io::to_json_matrix(p.k)}, {"X", io::to_json(p.x)}, {"g", io::to_json_matrix(q.g)}, {"Y", io::to_json_matrix(q.y)}};
}

/// max_t |P^{sX}(t) - s P^X(s t)|.
double scaling_residual(const Triple& x, double s, const FlowOptions& opt) {
  const auto base = integrate_reduced(x, opt);
  const auto sol = integrate_reduced(scaled(x, s), opt);
  if (!base.complete() || !sol.complete()) throw OutsideDomain("X is outside W", base.blowup_time);
  double worst = 0.0;
  for (std::size_t j = 0; j < sol.values.size(); ++j)
    worst = std::max(worst, triple_distance(sol.values[j], scaled(base.at(s * sol.times[j]), s)));
  return worst;
}

/// rho(sX) from the trajectory of X: s^2 int_0^s q(u) du with q the integrand of rho.
double rho_by_scaling(const ReducedSolution& base, double s) {
  const int m = 2 * static_cast<int>(base.values.size() - 1);
  std::vector<double> f(static_cast<std::size_t>(m + 1));
  for (int j = 0; j <= m; ++j) {
    const Triple p = base.at(s * j / m);
    f[static_cast<std::size_t>(j)] = 0.25 * (2 * inner(p[0], p[0]) + inner(p[1], p[1]) + inner(p[2], p[2]));
  }
  return s * s * simpson(f, 1.0 / m);
}

void require_su2(const RunConfig& cfg) {
  if (cfg.n != 2) throw SchemaError(cfg.command + " samples SU(2) only; use --n 2");
}

// ---- commands ------------------------------------------------------------------

int cmd_reduced_flow(Run& r) {
  const Params p(r.cfg, {"X", "scale"});
  const int n = r.cfg.n;
  const double scale = p.number("scale", 1.0, -1e6, 1e6);
  const auto given = p.triple("X", n);
  const Triple x = scaled(given ? *given : su2_embedded(n), scale);
  const auto sol = integrate_reduced(checked_triple(x, 1e-10), flow_options(r.cfg));

  std::vector<std::string> cols{"t"};
  for (int a = 1; a <= 3; ++a)
    for (auto& c : io::matrix_columns("P" + std::to_string(a) + "_", n)) cols.push_back(c);
  auto w = r.csv(cols);
  for (std::size_t j = 0; j < sol.values.size(); ++j) {
    w.cell(sol.times[j]);
    for (const auto& m : sol.values[j]) io::matrix_cells(w, m);
    w.end_row();
  }
  r.save(w);

  r.result["X"] = io::to_json(x);
  r.result["status"] = sol.complete() ? "complete" : "blowup";
  r.result["blowup_time"] = sol.complete() ? Json(nullptr) : Json(sol.blowup_time);
  r.result["sup_norm"] = sol.sup_norm;
  r.result["nodes"] = sol.values.size();
  r.check("complete", sol.complete() ? 1.0 : 0.0, 1.0, sol.complete());
  if (!sol.complete()) {
    r.log << "reduced flow leaves every bounded set near t = " << sol.blowup_time << "\n";
    return r.finish();
  }
  const double res = reduced_residual(sol);
  r.result["residual"] = res;
  r.below("residual", res, r.cfg.tol.residual);
  double drift = 0.0;
  const auto q = [](const Triple& v, int a, int b) { return inner(v[a], v[a]) - inner(v[b], v[b]); };
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (const auto& v : sol.values) drift = std::max(drift, std::abs(q(v, a, b) - q(sol.values.front(), a, b)));
  r.result["conserved_drift"] = drift;
  r.below("conserved_drift", drift, 1e-8 * std::max(1.0, sol.sup_norm * sol.sup_norm));
  if (!given) {
    // X = s T: P(t) = s T / (1 + s t)
    const Triple t = su2_embedded(n);
    double err = 0.0;
    for (std::size_t j = 0; j < sol.values.size(); ++j)
      err = std::max(err, triple_distance(sol.values[j], scaled(t, scale / (1.0 + scale * sol.times[j]))));
    r.result["closed_form_error"] = err;
  }
  return r.finish();
}

int cmd_gauge_fix(Run& r) {
  const Params p(r.cfg, {"A0", "X"});
  const int n = r.cfg.n;
  const Matrix a0 = p.matrix("A0", n).value_or(su2_embedded(n)[0]);
  if (!is_compact(a0, 1e-10) || !is_traceless(a0, 1e-10)) throw InvalidElement("A0 must lie in su(n)");
  const Triple x = p.triple("X", n).value_or(scaled(su2_embedded(n), 0.5));
  const auto opt = flow_options(r.cfg);
  const auto full = integrate_full([&](double) { return a0; }, x, opt);
  const double input_res = nahm_residual(full);
  const auto [gt, sol] = gauge_fix(full, r.cfg.tol.residual);
  const auto red = integrate_reduced(x, opt);
  if (!red.complete()) throw OutsideDomain("X is outside W", red.blowup_time);

  std::vector<std::string> cols{"t"};
  for (auto& c : io::matrix_columns("k", n)) cols.push_back(c);
  auto w = r.csv(cols);
  double dev = 0.0;
  for (std::size_t j = 0; j < gt.k.size(); ++j) {
    w.cell(full.times[j]);
    io::matrix_cells(w, gt.k[j]);
    w.end_row();
    dev = std::max(dev, triple_distance(sol.values[j], red.values[j]));
  }
  r.save(w);
  r.result["A0"] = io::to_json_matrix(a0);
  r.result["X"] = io::to_json(x);
  r.result["k1"] = io::to_json_matrix(gt.final_value());
  r.result["input_residual"] = input_res;
  r.result["deviation"] = dev;
  r.below("input_residual", input_res, r.cfg.tol.residual);
  r.below("deviation_from_reduced_flow", dev, 1e-7);
  const double unit = (gt.final_value().adjoint() * gt.final_value() - identity(n)).norm();
  r.below("k1_unitarity", unit, 1e-10);
  return r.finish();
}

int cmd_psi(Run& r) {
  const Params p(r.cfg, {"k", "X"});
  const int n = r.cfg.n;
  const auto pt = ModuliPoint::make(p.matrix("k", n).value_or(identity(n)), p.triple("X", n).value_or(zero_triple(n)));
  const auto q = psi(pt, map_options(r.cfg));
  r.result["record"] = record(pt, q);
  const double det = std::abs(q.g.determinant() - 1.0);
  r.result["det_residual"] = det;
  r.below("det_g_minus_one", det, 1e-9 * std::max(1.0, q.g.norm()));
  r.below("trace_Y", std::abs(q.y.trace()), 1e-12);
  return r.finish();
}

int cmd_psi_inv(Run& r) {
  const Params p(r.cfg, {"g", "Y"});
  const int n = r.cfg.n;
  const auto q = CotangentPoint::make(p.matrix("g", n).value_or(identity(n)), p.matrix("Y", n).value_or(zeros(n)));
  const auto inv = psi_inverse(q, inverse_options(r.cfg));
  const auto back = psi(inv.point, map_options(r.cfg));
  const double trip = std::max((back.g - q.g).norm(), (back.y - q.y).norm());
  r.result["record"] = record(inv.point, q);
  r.result["residual"] = inv.residual;
  r.result["iterations"] = inv.iterations;
  r.result["round_trip"] = trip;
  r.below("residual", inv.residual, r.cfg.tol.newton);
  r.below("round_trip", trip, 1e-7 * std::max(1.0, q.g.norm()));
  return r.finish();
}

int cmd_potential(Run& r) {
  const Params p(r.cfg, {"X", "scales"});
  const int n = r.cfg.n;
  const auto given = p.triple("X", n);
  const Triple x = checked_triple(given ? *given : su2_embedded(n), 1e-10);
  std::vector<double> scales;
  for (int i = 1; i <= 10; ++i) scales.push_back(0.1 * i);
  scales = p.numbers("scales", scales);
  for (double s : scales)
    if (!(s > 0.0 && s <= 1.0)) throw SchemaError("potential.params.scales must lie in (0, 1]");
  const auto opt = flow_options(r.cfg);
  const auto base = integrate_reduced(x, opt);
  if (!base.complete()) throw OutsideDomain("X is outside W", base.blowup_time);
  const double rho = potential_rho(base);
  auto w = r.csv({"scale", "rho", "rho_from_scaling", "residual"});
  double worst = 0.0;
  for (double s : scales) {
    const double direct = potential_rho(scaled(x, s), map_options(r.cfg));
    const double via = rho_by_scaling(base, s);
    worst = std::max(worst, std::abs(direct - via));
    w.cell(s).cell(direct).cell(via).cell(std::abs(direct - via));
    w.end_row();
  }
  r.save(w);
  r.result["X"] = io::to_json(x);
  r.result["rho"] = rho;
  r.result["max_scaling_residual"] = worst;
  r.check("rho_nonnegative", rho, 0.0, std::isfinite(rho) && rho >= 0.0);
  r.below("scaling_residual", worst, 1e-7);
  if (!given) r.below("su2_anchor", std::abs(rho - 0.25), 1e-8);
  return r.finish();
}

int cmd_moment(Run& r) {
  const Params p(r.cfg, {"k", "X"});
  const int n = r.cfg.n;
  const auto pt = ModuliPoint::make(p.matrix("k", n).value_or(identity(n)),
                                    p.triple("X", n).value_or(scaled(su2_embedded(n), 0.5)));
  const auto opt = map_options(r.cfg);
  const auto mu = moment_hk(pt, opt);
  const auto q = psi(pt, opt);
  const double res = moment_complex_check(pt, opt);
  Json m = Json::object();
  const char* names[3] = {"I", "J", "K"};
  for (int a = 0; a < 3; ++a)
    m[names[a]] = {{"m0", io::to_json_matrix(mu.m[static_cast<std::size_t>(a)].first)},
                   {"m1", io::to_json_matrix(mu.m[static_cast<std::size_t>(a)].second)}};
  r.result["record"] = record(pt, q);
  r.result["mu"] = m;
  r.result["complex_residual"] = res;
  r.below("complex_residual", res, 1e-7);
  return r.finish();
}

int cmd_verify_identities(Run& r) {
  const Params p(r.cfg, {});
  const int n = r.cfg.n, total = r.samples();
  const auto opt = map_options(r.cfg);
  struct Suite {
    std::string name;
    int count;
    double threshold;
    std::function<double(Rng&)> residual;
  };
  const std::vector<Suite> suites{
      {"complex-moment", total, 1e-7,
       [&](Rng& g) { return moment_complex_check(random_point(n, g, 1.0), opt); }},
      {"potential-moment", std::clamp(total / 4, 1, 25), 1e-4,
       [&](Rng& g) {
         const auto pt = random_point(n, g, 0.5);
         Matrix z1 = random_compact(n, g), z2 = random_compact(n, g);
         z1 /= norm(z1);
         z2 /= norm(z2);
         return verify_potential_moment(pt, z1, z2, inverse_options(r.cfg)).residual;
       }},
      {"dpsi-origin", std::max(1, total / 10), 1e-6,
       [&](Rng& g) {
         const auto origin = ModuliPoint::make(identity(n), zero_triple(n));
         std::array<Matrix, 4> v{random_compact(n, g), random_compact(n, g), random_compact(n, g), random_compact(n, g)};
         const auto d = dpsi(origin, v, opt);
         return std::max((d.dg - (v[0] + kI * v[1])).norm(), (d.dy - (v[2] + kI * v[3])).norm());
       }},
      {"scaling-law", std::max(1, total / 10), 1e-7,
       [&](Rng& g) {
         const auto pt = random_point(n, g, 1.0);
         double worst = 0.0;
         for (double s : {0.1, 0.37, 0.5, 0.81, 1.0}) worst = std::max(worst, scaling_residual(pt.x, s, flow_options(r.cfg)));
         return worst;
       }},
      {"chart-roundtrip", std::max(1, total / 4), 1e-8,
       [&](Rng& g) {
         const auto pt = random_point(n, g, 1.0);
         const auto inv = psi_inverse(psi(pt, opt), inverse_options(r.cfg));
         return std::max((inv.point.k - pt.k).norm(), triple_distance(inv.point.x, pt.x));
       }},
  };
  auto w = r.csv({"suite", "samples", "max_residual", "threshold", "pass"});
  Json table = Json::array();
  std::uint64_t stream = 0;
  for (const auto& s : suites) {
    double worst = 0.0;
    for (int i = 0; i < s.count; ++i) {
      Rng rng = make_rng(r.cfg.seed, stream++);
      worst = std::max(worst, s.residual(rng));
    }
    const bool ok = worst < s.threshold;
    w.cell(s.name).cell(s.count).cell(worst).cell(s.threshold).cell(ok);
    w.end_row();
    r.check(s.name, worst, s.threshold, ok);
    r.log << "  " << s.name << ": " << s.count << " samples, max residual " << io::format_double(worst) << "\n";
    table.push_back({{"suite", s.name}, {"samples", s.count}, {"max_residual", worst}, {"threshold", s.threshold}, {"pass", ok}});
  }
  r.save(w);
  r.result["suites"] = table;
  return r.finish();
}

LinearGitProblem problem_from_json(const Json& j, Potential pot) {
  if (!j.is_object()) throw SchemaError("kn-classify.params.problem must be an object");
  for (const auto& [k, v] : j.items())
    if (k != "generators" && k != "weights" && k != "character" && k != "hbar" && k != "shift")
      throw SchemaError("unknown problem key '" + k + "'");
  if (j.contains("generators") == j.contains("weights"))
    throw SchemaError("a problem needs exactly one of 'generators' and 'weights'");
  if (!j.contains("character") || !j["character"].is_array()) throw SchemaError("problem.character must be a list");
  std::vector<CMatrix> gens;
  const bool torus = j.contains("weights");
  if (torus) {
    const auto& w = j["weights"];
    if (!w.is_array() || w.empty()) throw SchemaError("problem.weights must be a nonempty N x r list");
    const auto rank = w[0].is_array() ? w[0].size() : 0;
    if (rank == 0) throw SchemaError("problem.weights rows must be nonempty");
    gens.assign(rank, CMatrix::Zero(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.size())));
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_array() || w[i].size() != rank) throw SchemaError("problem.weights must be rectangular");
      for (std::size_t c = 0; c < rank; ++c) {
        if (!w[i][c].is_number_integer()) throw SchemaError("problem.weights must be integers");
        gens[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = Complex(0.0, w[i][c].get<double>());
      }
    }
  } else {
    if (!j["generators"].is_array() || j["generators"].empty()) throw SchemaError("problem.generators must be a nonempty list");
    for (const auto& g : j["generators"]) {
      try {
        gens.push_back(io::matrix_from_json(g, "problem.generators"));
      } catch (const InvalidProblem& e) {
        throw SchemaError(e.what());
      }
    }
  }
  const auto& ch = j["character"];
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(ch.size()));
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (!ch[i].is_number()) throw SchemaError("problem.character must contain numbers");
    lambda(static_cast<Eigen::Index>(i)) = ch[i].get<double>();
  }
  double hbar = 1.0 / (2.0 * std::numbers::pi);
  if (j.contains("hbar")) {
    if (!j["hbar"].is_number()) throw SchemaError("problem.hbar must be a number");
    hbar = j["hbar"].get<double>();
  }
  std::optional<double> shift;
  if (j.contains("shift")) {
    if (!j["shift"].is_number()) throw SchemaError("problem.shift must be a number");
    shift = j["shift"].get<double>();
  }
  return LinearGitProblem::make(std::move(gens), lambda, hbar, shift, std::move(pot), torus);
}

int cmd_kn_classify(Run& r) {
  const Params p(r.cfg, {"problem", "point", "potential"});
  const auto kind = p.text("potential", "standard");
  Potential pot;
  if (kind == "log_norm") pot = Potential::log_norm();
  else if (kind != "standard") throw SchemaError("kn-classify.params.potential must be standard or log_norm");
  Json pj = Json{{"weights", {{1}, {1}}}, {"character", {1}}};
  if (p.has("problem")) {
    pj = p.raw("problem");
    if (pj.is_string()) pj = io::read_json(pj.get<std::string>());
  }
  const auto prob = problem_from_json(pj, pot);
  CVector point = CVector::Ones(prob.dim);
  if (p.has("point")) {
    try {
      point = io::vector_from_json(p.raw("point"), "kn-classify.params.point");
    } catch (const InvalidProblem& e) {
      throw SchemaError(e.what());
    }
    if (point.size() != prob.dim) throw SchemaError("kn-classify.params.point has the wrong dimension");
  }
  KnOptions opt;
  opt.tol = r.cfg.tol.kn;
  opt.seed = r.cfg.seed;
  const auto res = kn_minimize(prob, point, opt);
  r.result["problem"] = pj;
  r.result["dim"] = prob.dim;
  r.result["rank"] = prob.rank();
  r.result["abelian"] = prob.abelian();
  r.result["point"] = io::to_json(point);
  r.result["verdict"] = to_string(res.verdict);
  r.result["value"] = res.state.value;
  r.result["iterations"] = res.state.iterations;
  r.result["gradient_norm"] = res.state.gradient.size() ? res.state.gradient.norm() : 0.0;
  Json wit = Json::object();
  if (res.verdict == Verdict::semistable) wit["moment_residual"] = res.witness.moment_residual;
  if (res.verdict == Verdict::unstable) {
    wit["direction"] = io::to_json(res.witness.direction);
    wit["slope"] = res.witness.slope;
    wit["escape_time"] = res.witness.escape_time;
  }
  r.result["witness"] = wit;
  r.log << "verdict: " << to_string(res.verdict) << "\n";
  r.check("decided", res.verdict == Verdict::undecided ? 0.0 : 1.0, 1.0, res.verdict != Verdict::undecided);
  return r.finish();
}

int cmd_counterexample(Run& r) {
  namespace cx = counterexample;
  const Params p(r.cfg, {"grid_lo", "grid_hi", "grid_points", "levels", "exponents"});
  const double lo = p.number("grid_lo", 1e-16, 1e-300, 1e300), hi = p.number("grid_hi", 1e16, 1e-300, 1e300);
  const int pts = p.integer("grid_points", 10000, 2, 10000000);
  const auto grid = cx::log_grid(lo, hi, pts);
  const auto levels = p.integers("levels", {1, 2, 3});
  const auto exps = p.integers("exponents", {0, 1, 2, 3});

  auto w = r.csv({"t", "omega", "mu", "ratio_m0", "ratio_m1", "ratio_m2", "ratio_m3"});
  double min_omega = INFINITY, sup_mu = 0.0;
  for (const auto& row : cx::table(grid)) {
    min_omega = std::min(min_omega, row.omega);
    sup_mu = std::max(sup_mu, std::abs(row.mu));
    w.cell(row.t).cell(row.omega).cell(row.mu);
    for (double v : row.ratios) w.cell(v);
    w.end_row();
  }
  r.save(w);
  r.result["min_omega"] = min_omega;
  r.result["sup_abs_mu"] = sup_mu;
  r.check("omega_positive", min_omega, 0.0, min_omega > 0.0);
  r.below("abs_mu_below_two", sup_mu, 2.0);
  r.check("sup_abs_mu", sup_mu, 1.999, sup_mu >= 1.999);

  Json em = Json::array();
  for (int n : levels) {
    if (n == 0) throw SchemaError("counterexample.params.levels must be nonzero");
    const auto e = cx::emptiness_certificate(n, grid);
    em.push_back({{"n", n}, {"empty", e.empty}, {"witness_t", e.witness_t ? Json(*e.witness_t) : Json(nullptr)}});
  }
  r.result["emptiness"] = em;
  const auto e3 = cx::emptiness_certificate(3, grid);
  r.check("empty_at_level_3", e3.empty ? 1.0 : 0.0, 1.0, e3.empty);

  Json dom = Json::array();
  for (int m : exps) {
    if (m < 0) throw SchemaError("counterexample.params.exponents must be nonnegative");
    const auto d = cx::domination_failure(m);
    dom.push_back({{"m", m},
                   {"fails", d.fails},
                   {"witness_radius", d.witness_radius},
                   {"witness_ratio", d.witness_ratio},
                   {"ratio_small_end", d.ratio_small_end},
                   {"ratio_large_end", d.ratio_large_end}});
  }
  r.result["domination"] = dom;
  const auto d3 = cx::domination_failure(3);
  r.check("z3_not_dominated", d3.fails ? 1.0 : 0.0, 1.0, d3.fails && std::isfinite(d3.witness_radius));
  return r.finish();
}

int cmd_growth_scan(Run& r) {
  namespace est = estimates;
  require_su2(r.cfg);
  const Params p(r.cfg, {"ball", "s_max", "core_radius"});
  est::Constants k;
  k.core_radius = p.number("core_radius", k.core_radius, 0.0, 10.0);
  const double ball = p.number("ball", 1.5, 1e-6, 100.0), s_max = p.number("s_max", 30.0, 0.0, 1000.0);
  const auto pts = est::growth_samples(r.cfg.seed, r.samples(), ball, s_max);
  auto rep = est::growth_bound_scan(pts, k, map_options(r.cfg));
  rep.seed = r.cfg.seed;
  auto w = r.csv({"index", "abs_x", "in_core", "left", "right", "ratio", "rho", "gronwall_ratio", "gronwall_ratio_logk",
                  "holder_left", "holder_right", "pass"});
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const auto& s = rep.samples[i];
    w.cell(static_cast<int>(i)).cell(triple_norm(pts[i].x)).cell(s.in_core).cell(s.left).cell(s.right).cell(s.left / s.right);
    for (const auto& [name, v] : s.extra) w.cell(v);
    w.cell(s.pass);
    w.end_row();
  }
  r.save(w);
  Json summary = Json::object();
  for (const auto& [key, v] : rep.summary) summary[key] = v;
  r.result["summary"] = summary;
  r.result["samples_drawn"] = pts.size();
  r.result["max_ratio"] = rep.max_ratio;
  r.check("failures", rep.failures, 0.0, rep.failures == 0);
  return r.finish();
}

int cmd_properness_scan(Run& r) {
  require_su2(r.cfg);
  const Params p(r.cfg, {"radii"});
  const auto radii = p.numbers("radii", {0.5, 1.0, 2.0, 4.0, 8.0});
  for (double x : radii)
    if (!(x >= 0.0)) throw SchemaError("properness-scan.params.radii must be nonnegative");
  const auto rep = estimates::properness_scan(radii, r.cfg.seed, r.samples());
  auto w = r.csv({"radius", "inside", "rejected", "min_rho", "rho_su2_ray", "pass"});
  for (const auto& s : rep.samples) {
    for (const auto& [name, v] : s.extra) w.cell(v);
    w.cell(s.pass);
    w.end_row();
  }
  r.save(w);
  const double beta = rep.summary_value("beta");
  r.result["beta"] = beta;
  r.result["radii_without_samples"] = rep.failures;
  r.check("min_rho_nondecreasing", rep.verdict ? 1.0 : 0.0, 1.0, rep.verdict);
  r.check("beta_finite", beta, 0.0, std::isfinite(beta) && beta > 0.0);
  return r.finish();
}

int cmd_dominate_scan(Run& r) {
  namespace est = estimates;
  require_su2(r.cfg);
  const Params p(r.cfg, {"monomials", "window_edges", "s_max", "noise"});
  std::vector<Polynomial> polys;
  if (p.has("monomials")) {
    for (const auto& m : p.strings("monomials", {})) {
      try {
        polys.push_back(monomial(m));
      } catch (const InvalidProblem& e) {
        throw SchemaError(e.what());
      }
    }
  } else {
    polys = default_monomials();
  }
  est::DominationOptions opt;
  opt.samples = r.samples();
  opt.window_edges = p.numbers("window_edges", opt.window_edges);
  if (!std::is_sorted(opt.window_edges.begin(), opt.window_edges.end()) || opt.window_edges.size() < 4)
    throw SchemaError("dominate-scan.params.window_edges must be increasing with at least four entries");
  opt.s_max = p.number("s_max", opt.s_max, 0.0, 1000.0);
  opt.noise = p.number("noise", opt.noise, 0.0, 1.0);
  const auto [rep, per] = est::domination_scan(polys, r.cfg.seed, opt);
  auto w = r.csv({"polynomial", "degree", "window_lo", "window_hi", "count", "max_ratio"});
  Json list = Json::array();
  for (const auto& d : per) {
    for (const auto& win : d.windows) {
      w.cell(d.name).cell(d.degree).cell(win.lo).cell(win.hi).cell(win.count).cell(win.max_ratio);
      w.end_row();
    }
    list.push_back({{"polynomial", d.name}, {"degree", d.degree}, {"decreasing", d.decreasing}});
    r.check("decreasing " + d.name, d.decreasing ? 1.0 : 0.0, 1.0, d.decreasing);
  }
  r.save(w);
  r.result["polynomials"] = list;
  r.result["samples_drawn"] = rep.summary_value("samples");
  return r.finish();
}

int cmd_report(Run& r) {
  const Params p(r.cfg, {});
  std::vector<fs::path> files;
  if (fs::is_directory(r.out))
    for (const auto& e : fs::directory_iterator(r.out))
      if (e.path().extension() == ".json" && e.path().stem() != "report") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  auto w = r.csv({"artifact", "command", "config_hash", "seed", "pass"});
  Json list = Json::array();
  int found = 0;
  for (const auto& f : files) {
    Json j;
    try {
      j = io::read_json(f);
    } catch (const InvalidProblem&) {
      continue;
    }
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string() ||
        j["schema"].get<std::string>().rfind("nahmkn/", 0) != 0)
      continue;
    ++found;
    const bool ok = j.value("pass", false);
    const auto cmd = j.value("command", std::string());
    w.cell(f.filename().string()).cell(cmd).cell(j.value("config_hash", std::string()));
    w.cell(std::to_string(j.value("seed", std::uint64_t{0}))).cell(ok);
    w.end_row();
    list.push_back({{"artifact", f.filename().string()}, {"command", cmd}, {"config_hash", j["config_hash"]},
                    {"seed", j["seed"]}, {"pass", ok}});
    r.check(f.filename().string(), ok ? 1.0 : 0.0, 1.0, ok);
  }
  r.check("artifacts_found", found, 1.0, found > 0);
  r.save(w);
  r.result["artifacts"] = list;
  return r.finish();
}

const std::map<std::string, std::function<int(Run&)>>& dispatch() {
  static const std::map<std::string, std::function<int(Run&)>> table{
      {"reduced-flow", cmd_reduced_flow},   {"gauge-fix", cmd_gauge_fix},
      {"psi", cmd_psi},                     {"psi-inv", cmd_psi_inv},
      {"potential", cmd_potential},         {"moment", cmd_moment},
      {"verify-identities", cmd_verify_identities},
      {"kn-classify", cmd_kn_classify},     {"counterexample", cmd_counterexample},
      {"growth-scan", cmd_growth_scan},     {"properness-scan", cmd_properness_scan},
      {"dominate-scan", cmd_dominate_scan}, {"report", cmd_report},
  };
  return table;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  const auto it = dispatch().find(cfg.command);
  if (it == dispatch().end()) {
    log << "error: unknown command '" << cfg.command << "'\n";
    return kExitSchema;
  }
  try {
    Run r(cfg, log);
    return it->second(r);
  } catch (const SchemaError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const InvalidProblem& e) {
    log << "invalid input: " << e.what() << "\n";
    return kExitSchema;
  } catch (const InvalidElement& e) {
    log << "invalid input: " << e.what() << "\n";
    return kExitSchema;
  } catch (const RankMismatch& e) {
    log << "invalid input: " << e.what() << "\n";
    return kExitSchema;
  } catch (const StepOutOfRange& e) {
    log << "invalid input: " << e.what() << "\n";
    return kExitSchema;
  } catch (const DomainError& e) {
    log << "invalid input: " << e.what() << "\n";
    return kExitSchema;
  } catch (const OutsideDomain& e) {
    log << "numeric failure: " << e.what() << " (blow-up near t = " << e.blowup_time() << ")\n";
    return kExitNumeric;
  } catch (const NoPreimage& e) {
    log << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumeric;
  } catch (const ResidualViolation& e) {
    log << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNumeric;
  } catch (const Json::exception& e) {
    log << "config error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    log << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"nahmkn: Nahm moduli coordinates, Kempf-Ness classification and growth estimates"};
  app.require_subcommand(1, 1);
  app.footer("exit status: 0 all invariants hold, 1 numeric failure, 2 config/schema error");

  std::string config_path, out;
  std::uint64_t seed = 0;
  int n = 2, samples = 0;
  double step = 0.0;
  struct Flags {
    CLI::Option *config, *seed, *out, *n, *step, *samples;
  };
  std::map<std::string, Flags> flags;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.summary);
    sub->footer(c.artifacts);
    Flags f{};
    f.config = sub->add_option("--config", config_path, "JSON config file; flags override it");
    f.seed = sub->add_option("--seed", seed, "random seed (recorded in every artifact)");
    f.out = sub->add_option("--out", out, "output directory (default: out)");
    f.n = sub->add_option("--n", n, "group rank")->check(CLI::IsMember({2, 3}));
    f.step = sub->add_option("--step", step, "ODE step in (0, 1/16]");
    f.samples = sub->add_option("--samples", samples, "sample count")->check(CLI::Range(1, 1000000));
    flags[c.name] = f;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSchema;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  const Flags& f = flags.at(command);
  RunConfig cfg;
  cfg.command = command;
  try {
    if (f.config->count()) cfg = apply_config(io::read_json(config_path), cfg);
    Json over = Json::object();
    if (f.seed->count()) over["seed"] = seed;
    if (f.out->count()) over["out"] = out;
    if (f.n->count()) over["n"] = n;
    if (f.step->count()) over["step"] = step;
    if (f.samples->count()) over["samples"] = samples;
    cfg = apply_config(over, cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitSchema;
  }
  std::cerr << command << " config_hash=" << cfg.hash() << " seed=" << cfg.seed << "\n";
  return run(cfg, std::cerr);
}

}  // namespace nahmkn::cli
