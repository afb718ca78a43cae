#pragma once

// Experiment runner behind the command-line tool.  A run is described by one
// JSON config document; run_experiment validates it (collecting every
// violation, not just the first), executes the requested computation, writes
// the artifacts into the output directory, and finishes with a manifest
// listing every file produced.  Failures produce a machine-readable
// error.json and a nonzero exit code instead.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "smmslab/errors.hpp"
#include "smmslab/flow.hpp"
#include "smmslab/io.hpp"
#include "smmslab/monotone.hpp"
#include "smmslab/newton.hpp"
#include "smmslab/parallel.hpp"
#include "smmslab/smms.hpp"
#include "smmslab/spectral.hpp"
#include "smmslab/variational.hpp"

namespace smmslab {

inline constexpr const char* package_name = "smms-lab";
inline constexpr const char* package_version = "0.1.0";

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"curvature", "eigen",    "flow",
                                                 "solve",     "gns",      "minimize",
                                                 "soliton",   "criteria"};
  return names;
}

// ============================================================================
// Config validation.  Structural checks only; field sizes and domain
// consistency are verified by the same violation-collecting parsers during
// the run, so both stages report complete lists.
// ============================================================================

namespace detail {

inline bool is_field_ref(const json& j) {
  if (j.is_number() || j.is_string()) return true;
  if (!j.is_array()) return false;
  for (const auto& v : j)
    if (!v.is_number()) return false;
  return true;
}

struct ConfigChecker {
  const json& j;
  std::vector<std::string>& v;

  void field_ref(const char* key) {
    if (j.contains(key) && !is_field_ref(j[key]))
      v.push_back(std::string(key) + ": expected a number, an array of numbers, or a CSV path");
  }
  void number(const char* key, bool required, double lo,
              bool strict = true) {
    if (!j.contains(key)) {
      if (required) v.push_back(std::string(key) + ": required number");
      return;
    }
    if (!j[key].is_number()) {
      v.push_back(std::string(key) + ": must be a number");
      return;
    }
    const double x = j[key].get<double>();
    if (strict ? !(x > lo) : !(x >= lo))
      v.push_back(std::string(key) + ": must be " + (strict ? "> " : ">= ") +
                  format_full(lo));
  }
  void integer(const char* key, bool required, long long lo) {
    if (!j.contains(key)) {
      if (required) v.push_back(std::string(key) + ": required integer");
      return;
    }
    if (!j[key].is_number_integer() || j[key].get<long long>() < lo)
      v.push_back(std::string(key) + ": must be an integer >= " + std::to_string(lo));
  }
  void boolean(const char* key) {
    if (j.contains(key) && !j[key].is_boolean())
      v.push_back(std::string(key) + ": must be true or false");
  }
  void choice(const char* key, const std::vector<std::string>& allowed) {
    if (!j.contains(key)) return;
    if (!j[key].is_string() ||
        std::find(allowed.begin(), allowed.end(), j[key].get<std::string>()) ==
            allowed.end()) {
      std::string msg = std::string(key) + ": must be one of";
      for (const auto& a : allowed) msg += " '" + a + "'";
      v.push_back(msg);
    }
  }
  void int_pair(const char* key, long long lo) {
    if (!j.contains(key)) return;
    const json& a = j[key];
    bool ok = a.is_array() && a.size() == 2;
    if (ok)
      for (const auto& x : a)
        if (!x.is_number_integer() || x.get<long long>() < lo) ok = false;
    if (!ok)
      v.push_back(std::string(key) + ": must be two integers >= " + std::to_string(lo));
  }
  void number_pair(const char* key, double lo) {
    if (!j.contains(key)) return;
    const json& a = j[key];
    bool ok = a.is_array() && a.size() == 2;
    if (ok)
      for (const auto& x : a)
        if (!x.is_number() || !(x.get<double>() > lo)) ok = false;
    if (!ok)
      v.push_back(std::string(key) + ": must be two numbers > " + format_full(lo));
  }
};

}  // namespace detail

inline std::vector<std::string> validate_config(const json& j) {
  std::vector<std::string> v;
  if (!j.is_object()) {
    v.push_back("config: must be a JSON object");
    return v;
  }
  std::string cmd;
  if (j.contains("command") && j["command"].is_string())
    cmd = j["command"].get<std::string>();
  else
    v.push_back("command: required string");
  if (!cmd.empty() && std::find(command_names().begin(), command_names().end(), cmd) ==
                          command_names().end()) {
    v.push_back("command: unknown command '" + cmd + "'");
    cmd.clear();
  }
  detail::ConfigChecker c{j, v};
  c.integer("seed", false, 0);
  if (j.contains("out") && !j["out"].is_string()) v.push_back("out: must be a string");
  if (cmd.empty()) return v;

  std::vector<std::string> known = {"command", "seed", "out"};
  auto require_smms = [&] {
    known.push_back("smms");
    if (!j.contains("smms")) v.push_back("smms: required object");
  };
  if (cmd == "curvature") {
    require_smms();
    known.push_back("w");
    c.field_ref("w");
  } else if (cmd == "eigen") {
    require_smms();
    known.insert(known.end(), {"pencil", "tol"});
    c.choice("pencil", {"pair", "bar"});
    c.number("tol", false, 0.0);
  } else if (cmd == "flow") {
    require_smms();
    known.insert(known.end(), {"normalized", "dt", "t_end", "sample_every", "initial"});
    c.boolean("normalized");
    c.number("dt", true, 0.0);
    c.number("t_end", true, 0.0);
    c.integer("sample_every", false, 1);
    c.field_ref("initial");
  } else if (cmd == "solve") {
    require_smms();
    known.insert(known.end(), {"tol", "max_iter", "epsilon", "delta"});
    c.number("tol", false, 0.0);
    c.integer("max_iter", false, 1);
    c.number("epsilon", false, 0.0);
    c.number("delta", false, 0.0);
    for (const char* key : {"epsilon", "delta"})
      if (j.contains(key) && j[key].is_number() && !(j[key].get<double>() < 1.0))
        v.push_back(std::string(key) + ": must be < 1");
  } else if (cmd == "gns") {
    known.insert(known.end(), {"domain", "epsilon", "x0_offset", "w"});
    if (!j.contains("domain"))
      v.push_back("domain: required object");
    else if (j["domain"].is_object() && j["domain"].value("kind", "") != "halfspace_cylinder")
      v.push_back("domain.kind: the trace quotient needs a halfspace_cylinder domain");
    c.number("epsilon", false, 0.0);
    c.number("x0_offset", false, 0.0, false);
    c.field_ref("w");
  } else if (cmd == "minimize") {
    require_smms();
    known.insert(known.end(), {"tol", "max_iter", "initial"});
    c.number("tol", false, 0.0);
    c.integer("max_iter", false, 1);
    c.field_ref("initial");
  } else if (cmd == "soliton") {
    known.insert(known.end(), {"a", "m", "n", "counts", "extents"});
    if (j.contains("a") && !j["a"].is_number()) v.push_back("a: must be a number");
    c.number("m", false, 0.0);
    c.integer("n", false, 3);
    c.int_pair("counts", 4);
    c.number_pair("extents", 0.0);
  }
  // criteria takes no extra keys.
  detail::reject_unknown_keys(j, known, "config", v);
  return v;
}

// ============================================================================
// Run results and error reporting.
// ============================================================================

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> outputs;  // file names inside the output directory
  json error;                        // "error"/"message" (+"violations") on failure
};

namespace detail {

// Carries the collected violation list out of the deep config parsers so the
// error document can show every problem at once.
struct config_violation_list : invalid_input_error {
  std::vector<std::string> violations;
  explicit config_violation_list(std::vector<std::string> v)
      : invalid_input_error("config validation failed"), violations(std::move(v)) {}
};

inline SmmsBackground parse_background(const json& cfg, const std::string& base_dir) {
  std::vector<std::string> viol;
  try {
    return background_from_json(cfg["smms"], base_dir, viol);
  } catch (const error&) {
    if (!viol.empty()) throw config_violation_list(std::move(viol));
    throw;
  }
}

inline Field parse_field(const json& cfg, const char* key, int expected_size,
                         const std::string& base_dir, double fallback) {
  if (!cfg.contains(key)) return Field(expected_size, fallback);
  std::vector<std::string> viol;
  Field f = field_from_ref(cfg[key], expected_size, key, base_dir, viol);
  if (!viol.empty()) throw config_violation_list(std::move(viol));
  return f;
}

inline const char* error_kind(const error& e) {
  if (dynamic_cast<const hypothesis_violation_error*>(&e)) return "hypothesis_violation";
  if (dynamic_cast<const positivity_error*>(&e)) return "positivity";
  if (dynamic_cast<const step_size_error*>(&e)) return "step_size";
  if (dynamic_cast<const nonconvergence_error*>(&e)) return "nonconvergence";
  if (dynamic_cast<const solver_failure_error*>(&e)) return "solver_failure";
  if (dynamic_cast<const construction_failure_error*>(&e)) return "construction_failure";
  if (dynamic_cast<const boundary_closure_error*>(&e)) return "boundary_closure";
  if (dynamic_cast<const invariant_violation_error*>(&e)) return "invariant_violation";
  if (dynamic_cast<const invalid_domain_error*>(&e)) return "invalid_domain";
  if (dynamic_cast<const invalid_input_error*>(&e)) return "invalid_input";
  return "error";
}

inline RunResult fail(const std::string& out_dir, int code, const std::string& kind,
                      const std::string& message,
                      const std::vector<std::string>& violations = {}) {
  RunResult rr;
  rr.exit_code = code;
  rr.error = {{"error", kind}, {"message", message}};
  if (!violations.empty()) rr.error["violations"] = violations;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!ec) {
    write_json_file((std::filesystem::path(out_dir) / "error.json").string(), rr.error);
    rr.outputs.push_back("error.json");
  }
  return rr;
}

inline json spectral_json(const SpectralResult& r) {
  return {{"lambda1", r.lambda1}, {"iterations", r.iterations}, {"residual", r.residual}};
}

inline json quotient_report_json(const QuotientReport& r) {
  return {{"A_value", r.A_value},
          {"B_value", r.B_value},
          {"Q_value", r.Q_value},
          {"el_interior_residual", r.el_interior_residual},
          {"el_boundary_residual", r.el_boundary_residual},
          {"trial_id", r.trial_id}};
}

inline json soliton_json(const SolitonReport& r) {
  return {{"hessian_residual", r.hessian_residual},
          {"coupling_residual", r.coupling_residual},
          {"boundary_curvature_residual", r.boundary_curvature_residual},
          {"potential_flux_residual", r.potential_flux_residual}};
}

struct Outdir {
  std::filesystem::path dir;
  RunResult& rr;

  std::string at(const std::string& name) const { return (dir / name).string(); }
  void wrote(const std::string& name) const { rr.outputs.push_back(name); }
  void field_csv(const std::string& name, const DiscreteDomain& d,
                 const std::vector<std::string>& cols,
                 const std::vector<const Field*>& fields) const {
    write_field_csv(at(name), d, cols, fields);
    wrote(name);
  }
  void boundary_csv(const std::string& name, const DiscreteDomain& d,
                    const std::vector<std::string>& cols,
                    const std::vector<const BoundaryField*>& fields) const {
    write_boundary_csv(at(name), d, cols, fields);
    wrote(name);
  }
  void csv(const std::string& name, const std::vector<std::string>& cols,
           const std::vector<std::vector<double>>& data) const {
    write_csv(at(name), cols, data);
    wrote(name);
  }
  void json_file(const std::string& name, const json& j) const {
    write_json_file(at(name), j);
    wrote(name);
  }
};

// ----------------------------------------------------------------------------
// Command bodies.  Each receives a validated config, writes its artifacts,
// and leaves output names in the result.
// ----------------------------------------------------------------------------

inline void run_curvature(const json& cfg, const std::string& base_dir, const Outdir& out) {
  SmmsBackground bg = parse_background(cfg, base_dir);
  const DiscreteDomain& d = bg.domain;
  out.field_csv("background_fields.csv", d, {"phi0", "R_g0", "Rm"},
                {&bg.phi0, &bg.R_g0, &bg.Rm});
  out.boundary_csv("boundary_fields.csv", d, {"H_g0", "Hm"}, {&bg.H_g0, &bg.Hm});
  if (cfg.contains("w")) {
    const Field w = parse_field(cfg, "w", bg.node_count(), base_dir, 1.0);
    ConformalData cd = conformal_transform(bg, w);
    out.field_csv("deformed_fields.csv", d, {"w", "phi_new", "R_new", "vol_weight"},
                  {&cd.w, &cd.phi_new, &cd.R_new, &cd.vol_weight});
    out.boundary_csv("deformed_boundary.csv", d, {"H_new", "area_weight"},
                     {&cd.H_new, &cd.area_weight});
  }
}

inline void run_eigen(const json& cfg, const std::string& base_dir, const Outdir& out) {
  SmmsBackground bg = parse_background(cfg, base_dir);
  const std::string pencil = cfg.value("pencil", "pair");
  const double tol = cfg.value("tol", 1e-11);
  const SpectralResult r =
      pencil == "bar" ? first_eigen_barLbarB(bg, tol) : first_eigen_LB(bg, tol);
  json doc = spectral_json(r);
  doc["pencil"] = pencil;
  out.json_file("eigen.json", doc);
  out.field_csv("eigenfunction.csv", bg.domain, {"v"}, {&r.eigenfunction});
}

inline void run_flow(const json& cfg, const std::string& base_dir, const Outdir& out) {
  SmmsBackground bg = parse_background(cfg, base_dir);
  Field w0 = parse_field(cfg, "initial", bg.node_count(), base_dir, 1.0);
  const bool normalized = cfg.value("normalized", true);
  const double dt = cfg["dt"].get<double>();
  const double t_end = cfg["t_end"].get<double>();
  const int sample_every = cfg.value("sample_every", 1);
  FlowState state = make_flow_state(bg, std::move(w0));
  const FlowTrace tr = normalized ? run_normalized(state, t_end, dt, sample_every)
                                  : run_unnormalized(state, t_end, dt, sample_every);
  out.csv("trace.csv",
          {"time", "energy", "energy_normalized", "volume", "average_curvature",
           "min_curvature", "max_curvature", "max_boundary_residual"},
          {tr.times, tr.energy, tr.energy_normalized, tr.volume, tr.average_curvature,
           tr.min_curvature, tr.max_curvature, tr.max_boundary_residual});
  out.field_csv("final_state.csv", bg.domain, {"w"}, {&state.w.w});
}

inline void run_solve(const json& cfg, const std::string& base_dir, const Outdir& out) {
  SmmsBackground bg = parse_background(cfg, base_dir);
  SolverConfig sc;
  sc.tol = cfg.value("tol", 1e-9);
  sc.max_iter = cfg.value("max_iter", 5000);
  sc.epsilon = cfg.value("epsilon", 0.25);
  sc.delta = cfg.value("delta", 0.25);
  const SmallerMetricReport rep = find_smaller_metric(bg, sc);

  // Replay the iteration from the accepted bracket to capture the per-sweep log.
  const LowerSolution lo = build_lower_solution(bg, rep.epsilon);
  const UpperSolution up = build_upper_solution(bg, rep.delta);
  MonotoneTrace tr;
  SolverConfig sc2 = sc;
  sc2.epsilon = rep.epsilon;
  sc2.delta = rep.delta;
  monotone_iterate(bg, sc2, lo.u, up.u, &tr);

  out.field_csv("solution.csv", bg.domain, {"w"}, {&rep.w.w});
  std::vector<double> iters(tr.max_change.size());
  for (std::size_t i = 0; i < iters.size(); ++i) iters[i] = static_cast<double>(i + 1);
  out.csv("iterations.csv", {"iter", "max_change", "residual"},
          {iters, tr.max_change, tr.residuals});
  double wmin = 1.0, wmax = 0.0;
  for (double x : rep.w.w) {
    wmin = std::min(wmin, x);
    wmax = std::max(wmax, x);
  }
  out.json_file("verdict.json",
                {{"hypotheses",
                  {{"boundary_curvature_nonpositive", true},
                   {"lambda1_LB_negative", true},
                   {"lambda1_bar_negative", true}}},
                 {"lambda1_LB", rep.lambda1_LB},
                 {"lambda1_bar", rep.lambda1_bar},
                 {"residual", rep.residual},
                 {"iterations", rep.iterations},
                 {"epsilon", rep.epsilon},
                 {"delta", rep.delta},
                 {"alpha", rep.alpha},
                 {"w_min", wmin},
                 {"w_max", wmax}});
}

inline void run_gns(const json& cfg, const std::string& base_dir, const Outdir& out) {
  std::vector<std::string> viol;
  DiscreteDomain d = domain_from_json(cfg["domain"], viol);
  if (!viol.empty()) throw config_violation_list(std::move(viol));
  const double epsilon = cfg.value("epsilon", 1.0);
  const double x0 = cfg.value("x0_offset", 0.0);
  const double m = d.dim_m;
  const int n = d.dim_n;
  Field w;
  if (cfg.contains("w")) {
    w = field_from_ref(cfg["w"], d.node_count(), "w", base_dir, viol);
    if (!viol.empty()) throw config_violation_list(std::move(viol));
  } else {
    const GnsExtremal ex = gns_extremal(epsilon, x0, m, n);
    w.resize(d.node_count());
    for (int i = 0; i < d.node_count(); ++i)
      w[i] = ex(d.coord_r(i), d.coord_t(i));
  }
  const double q = trace_gns_quotient(d, w, m, n);
  const double lambda = lambda_mn(m, n);
  const double radius = std::min(d.extent_r, d.extent_t);
  out.json_file("gns.json", {{"quotient", q},
                             {"lambda_reference", lambda},
                             {"relative_gap", (q - lambda) / lambda},
                             {"truncation_tail", gns_truncation_tail(m, n, epsilon, radius)},
                             {"epsilon", epsilon},
                             {"x0_offset", x0},
                             {"n", n},
                             {"m", m}});
  BoundaryField trace(d.boundary_nodes.size());
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k)
    trace[k] = w[d.boundary_nodes[k]];
  out.boundary_csv("trace_profile.csv", d, {"w"}, {&trace});
}

inline void run_minimize(const json& cfg, const std::string& base_dir, const Outdir& out) {
  SmmsBackground bg = parse_background(cfg, base_dir);
  Field init = parse_field(cfg, "initial", bg.node_count(), base_dir, 1.0);
  const double tol = cfg.value("tol", 1e-6);
  const int max_iter = cfg.value("max_iter", 5000);
  const MinimizeResult res = minimize_escobar(bg, ConformalFactor(std::move(init)), tol, max_iter);
  json doc = quotient_report_json(res.report);
  doc["lambda_estimate"] = res.Lambda_estimate;
  doc["iterations"] = res.iterations;
  doc["converged"] = res.converged;
  doc["stalled"] = res.stalled;
  doc["floor_was_active"] = res.floor_was_active;
  out.json_file("minimize.json", doc);
  std::vector<double> iters(res.q_history.size());
  for (std::size_t i = 0; i < iters.size(); ++i) iters[i] = static_cast<double>(i);
  out.csv("history.csv", {"iter", "Q"}, {iters, res.q_history});
  out.field_csv("w_star.csv", bg.domain, {"w"}, {&res.w_star.w});
}

// The two Cartesian sections of the product gradient soliton on the half
// space: the potential grows along one tangential axis, the weight along an
// orthogonal one, so each strip section carries one of them and the flat
// grid represents every surviving derivative exactly.
struct SolitonSections {
  double a, m, lambda;
  int n;
  SmmsBackground weight;    // phi0 = a x, f restricted to a constant
  SmmsBackground potential; // phi0 = 0, prescribed R_g0 = lambda, f = x
  Field f_weight, f_potential;
  SolitonReport weight_report, potential_report;
  double curvature_deviation = 0.0;
  double grid_h;
};

inline SolitonSections make_soliton_sections(double a, double m, int n,
                                             int count_r, int count_t,
                                             double extent_r, double extent_t) {
  SolitonSections s{a, m, -((m + 1.0) / m) * a * a, n, {}, {}, {}, {}, {}, {}, 0.0, 0.0};
  auto strip = [&] {
    return build_halfspace_cylinder_domain(count_r, count_t, extent_r, extent_t, 2, m);
  };
  DiscreteDomain dw = strip();
  s.grid_h = std::max(dw.hr, dw.ht);
  const int nn = dw.node_count();
  const int nb = static_cast<int>(dw.boundary_nodes.size());
  Field phi0(nn);
  for (int i = 0; i < nn; ++i) phi0[i] = a * dw.coord_r(i);
  s.weight = make_background(std::move(dw), std::move(phi0), Field(nn, 0.0),
                             BoundaryField(nb, 0.0), n, m);
  s.f_weight = Field(nn, 0.0);
  s.weight_report = check_gradient_soliton(s.weight, s.f_weight, s.lambda);
  for (double r : s.weight.Rm)
    s.curvature_deviation = std::max(s.curvature_deviation, std::abs(r - s.lambda));

  DiscreteDomain dp = strip();
  Field f(nn);
  for (int i = 0; i < nn; ++i) f[i] = dp.coord_r(i);
  s.potential = make_background(std::move(dp), Field(nn, 0.0), Field(nn, s.lambda),
                                BoundaryField(nb, 0.0), n, m);
  s.f_potential = std::move(f);
  s.potential_report = check_gradient_soliton(s.potential, s.f_potential, s.lambda);
  return s;
}

inline void run_soliton(const json& cfg, const std::string&, const Outdir& out) {
  const double a = cfg.value("a", 0.3);
  const double m = cfg.value("m", 1.0);
  const int n = cfg.value("n", 3);
  int cr = 81, ct = 81;
  double er = 2.0, et = 2.0;
  if (cfg.contains("counts")) {
    cr = cfg["counts"][0].get<int>();
    ct = cfg["counts"][1].get<int>();
  }
  if (cfg.contains("extents")) {
    er = cfg["extents"][0].get<double>();
    et = cfg["extents"][1].get<double>();
  }
  const SolitonSections s = make_soliton_sections(a, m, n, cr, ct, er, et);
  out.json_file("soliton.json",
                {{"a", a},
                 {"m", m},
                 {"n", n},
                 {"lambda", s.lambda},
                 {"grid_h", s.grid_h},
                 {"weight_section", soliton_json(s.weight_report)},
                 {"potential_section", soliton_json(s.potential_report)},
                 {"curvature_deviation", s.curvature_deviation}});
  out.field_csv("weight_section.csv", s.weight.domain, {"phi0", "Rm", "f"},
                {&s.weight.phi0, &s.weight.Rm, &s.f_weight});
  out.field_csv("potential_section.csv", s.potential.domain, {"R_g0", "Rm", "f"},
                {&s.potential.R_g0, &s.potential.Rm, &s.f_potential});
}

}  // namespace detail

// ============================================================================
// Entry point.  base_dir anchors relative CSV references in the config.
// The criteria command is dispatched by the launcher, not here: the
// acceptance suite sits on top of this runner.
// ============================================================================

inline RunResult run_experiment(const json& config, const std::string& base_dir = ".") {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> violations = validate_config(config);
  std::string out_dir = "out";
  if (config.is_object() && config.contains("out") && config["out"].is_string())
    out_dir = config["out"].get<std::string>();
  if (!violations.empty())
    return detail::fail(out_dir, 2, "invalid_config", "config validation failed",
                        violations);
  const std::string cmd = config["command"].get<std::string>();
  if (cmd == "criteria")
    return detail::fail(out_dir, 2, "invalid_config",
                        "the criteria command runs through the launcher");

  RunResult rr;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    return detail::fail(".", 1, "io", "cannot create output directory '" + out_dir + "'");
  detail::Outdir out{std::filesystem::path(out_dir), rr};

  try {
    if (cmd == "curvature")
      detail::run_curvature(config, base_dir, out);
    else if (cmd == "eigen")
      detail::run_eigen(config, base_dir, out);
    else if (cmd == "flow")
      detail::run_flow(config, base_dir, out);
    else if (cmd == "solve")
      detail::run_solve(config, base_dir, out);
    else if (cmd == "gns")
      detail::run_gns(config, base_dir, out);
    else if (cmd == "minimize")
      detail::run_minimize(config, base_dir, out);
    else if (cmd == "soliton")
      detail::run_soliton(config, base_dir, out);
  } catch (const detail::config_violation_list& e) {
    return detail::fail(out_dir, 2, "invalid_config", e.what(), e.violations);
  } catch (const error& e) {
    return detail::fail(out_dir, 1, detail::error_kind(e), e.what());
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"command", cmd},
                   {"package", {{"name", package_name}, {"version", package_version}}},
                   {"seed", config.value("seed", 0LL)},
                   {"threads", thread_cap()},
                   {"wall_time_s", wall},
                   {"config", config},
                   {"outputs", rr.outputs}};
  write_json_file(out.at("manifest.json"), manifest);
  rr.outputs.push_back("manifest.json");
  return rr;
}

}  // namespace smmslab
