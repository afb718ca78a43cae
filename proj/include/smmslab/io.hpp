#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smmslab/domain.hpp"
#include "smmslab/errors.hpp"
#include "smmslab/smms.hpp"

namespace smmslab {

using json = nlohmann::json;

// ============================================================================
// Domain and background descriptors.
//
//   domain: {"kind": "interval"|"radial_ball"|"halfspace_cylinder",
//            "n": int, "m": number, "counts": [nr(, nt)], "extents": [r(, t)]}
//   smms:   {"domain": <domain>, "phi0": <field-ref>, "R_g0": <field-ref>,
//            "H_g0": <field-ref>}
//
// A field-ref is a number (constant field), an inline array of node values,
// or a string naming a CSV file (one value per line, header lines skipped)
// resolved against the config file's directory.  phi0/R_g0 default to 0,
// H_g0 to the model geometry's boundary mean curvature.  Validation appends
// every complaint to `violations` instead of stopping at the first.
// ============================================================================

inline json domain_to_json(const DiscreteDomain& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["n"] = d.dim_n;
  j["m"] = d.dim_m;
  if (d.one_dimensional()) {
    j["counts"] = json::array({d.nr});
    j["extents"] = json::array({d.extent_r});
  } else {
    j["counts"] = json::array({d.nr, d.nt});
    j["extents"] = json::array({d.extent_r, d.extent_t});
  }
  return j;
}

namespace detail {

inline bool expect_object(const json& j, const std::string& where,
                          std::vector<std::string>& violations) {
  if (j.is_object()) return true;
  violations.push_back(where + ": expected an object");
  return false;
}

inline void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                                const std::string& where,
                                std::vector<std::string>& violations) {
  for (const auto& kv : j.items()) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || kv.key() == k;
    if (!ok) violations.push_back(where + ": unknown key '" + kv.key() + "'");
  }
}

inline std::vector<double> number_list(const json& j, const std::string& where, int max_len,
                                       std::vector<std::string>& violations) {
  std::vector<double> out;
  if (!j.is_array() || j.empty() || static_cast<int>(j.size()) > max_len) {
    violations.push_back(where + ": expected an array of 1 to " + std::to_string(max_len) +
                         " numbers");
    return out;
  }
  for (const auto& v : j) {
    if (!v.is_number()) {
      violations.push_back(where + ": expected numbers only");
      return {};
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace detail

inline DiscreteDomain domain_from_json(const json& j, std::vector<std::string>& violations) {
  DiscreteDomain bad;
  if (!detail::expect_object(j, "domain", violations)) return bad;
  detail::reject_unknown_keys(j, {"kind", "n", "m", "counts", "extents"}, "domain", violations);
  std::string kind;
  if (j.contains("kind") && j["kind"].is_string())
    kind = j["kind"].get<std::string>();
  else
    violations.push_back("domain.kind: required string");
  int n = 0;
  if (j.contains("n") && j["n"].is_number_integer())
    n = j["n"].get<int>();
  else
    violations.push_back("domain.n: required integer");
  double m = -1.0;
  if (j.contains("m") && j["m"].is_number())
    m = j["m"].get<double>();
  else
    violations.push_back("domain.m: required number");
  std::vector<double> counts, extents;
  if (j.contains("counts"))
    counts = detail::number_list(j["counts"], "domain.counts", 2, violations);
  else
    violations.push_back("domain.counts: required");
  if (j.contains("extents"))
    extents = detail::number_list(j["extents"], "domain.extents", 2, violations);
  else
    violations.push_back("domain.extents: required");

  const bool two_axis = kind == "halfspace_cylinder";
  if (!kind.empty() && kind != "interval" && kind != "radial_ball" &&
      kind != "halfspace_cylinder")
    violations.push_back("domain.kind: must be interval, radial_ball, or halfspace_cylinder");
  if (!counts.empty() && static_cast<int>(counts.size()) != (two_axis ? 2 : 1))
    violations.push_back("domain.counts: needs " + std::string(two_axis ? "2" : "1") +
                         " entries for kind " + kind);
  if (!extents.empty() && static_cast<int>(extents.size()) != (two_axis ? 2 : 1))
    violations.push_back("domain.extents: needs " + std::string(two_axis ? "2" : "1") +
                         " entries for kind " + kind);
  if (kind == "radial_ball" && !extents.empty() && extents[0] != 1.0)
    violations.push_back("domain.extents: the radial ball is the unit ball; extent must be 1");
  if (!violations.empty()) return bad;

  try {
    if (kind == "interval")
      return build_interval_domain(static_cast<int>(counts[0]), extents[0], n, m);
    if (kind == "radial_ball")
      return build_radial_ball_domain(static_cast<int>(counts[0]), n, m);
    return build_halfspace_cylinder_domain(static_cast<int>(counts[0]),
                                           static_cast<int>(counts[1]), extents[0], extents[1],
                                           n, m);
  } catch (const error& e) {
    violations.push_back(std::string("domain: ") + e.what());
    return bad;
  }
}

// ============================================================================
// Field references.
// ============================================================================

inline Field read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input_error("field file not readable: " + path);
  Field out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      out.push_back(v);
    } catch (...) {
      continue;  // header or comment line
    }
  }
  return out;
}

inline Field field_from_ref(const json& j, int expected_size, const std::string& where,
                            const std::string& base_dir,
                            std::vector<std::string>& violations) {
  if (j.is_number()) return Field(expected_size, j.get<double>());
  if (j.is_array()) {
    Field out;
    for (const auto& v : j) {
      if (!v.is_number()) {
        violations.push_back(where + ": inline field must contain numbers only");
        return Field(expected_size, 0.0);
      }
      out.push_back(v.get<double>());
    }
    if (static_cast<int>(out.size()) != expected_size) {
      violations.push_back(where + ": inline field has " + std::to_string(out.size()) +
                           " values, expected " + std::to_string(expected_size));
      return Field(expected_size, 0.0);
    }
    return out;
  }
  if (j.is_string()) {
    const std::filesystem::path p =
        std::filesystem::path(base_dir) / j.get<std::string>();
    try {
      Field out = read_field_csv(p.string());
      if (static_cast<int>(out.size()) != expected_size) {
        violations.push_back(where + ": file '" + p.string() + "' has " +
                             std::to_string(out.size()) + " values, expected " +
                             std::to_string(expected_size));
        return Field(expected_size, 0.0);
      }
      return out;
    } catch (const error& e) {
      violations.push_back(where + ": " + e.what());
      return Field(expected_size, 0.0);
    }
  }
  violations.push_back(where + ": expected a number, an array, or a CSV path");
  return Field(expected_size, 0.0);
}

inline SmmsBackground background_from_json(const json& j,
                                           const std::string& base_dir,
                                           std::vector<std::string>& violations) {
  if (!detail::expect_object(j, "smms", violations)) throw invalid_input_error("smms: not an object");
  detail::reject_unknown_keys(j, {"domain", "phi0", "R_g0", "H_g0"}, "smms", violations);
  if (!j.contains("domain")) {
    violations.push_back("smms.domain: required");
    throw invalid_input_error("smms: no domain");
  }
  DiscreteDomain d = domain_from_json(j["domain"], violations);
  if (!violations.empty()) throw invalid_input_error("smms: invalid domain");
  const int nn = d.node_count();
  const int nb = static_cast<int>(d.boundary_nodes.size());
  Field phi0 = j.contains("phi0")
                   ? field_from_ref(j["phi0"], nn, "smms.phi0", base_dir, violations)
                   : Field(nn, 0.0);
  Field R0 = j.contains("R_g0")
                 ? field_from_ref(j["R_g0"], nn, "smms.R_g0", base_dir, violations)
                 : Field(nn, 0.0);
  BoundaryField H0 = j.contains("H_g0")
                         ? field_from_ref(j["H_g0"], nb, "smms.H_g0", base_dir, violations)
                         : default_boundary_mean_curvature(d);
  if (!violations.empty()) throw invalid_input_error("smms: invalid fields");
  const int n = d.dim_n;
  const double m = d.dim_m;
  return make_background(std::move(d), std::move(phi0), std::move(R0), std::move(H0), n, m);
}

// ============================================================================
// CSV artifacts: fixed column order, full-precision decimal floats, one
// header line.
// ============================================================================

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size())
    throw invalid_input_error("write_csv: column name/data count mismatch");
  for (const auto& c : columns)
    if (c.size() != columns.front().size())
      throw invalid_input_error("write_csv: ragged columns");
  std::ofstream out(path);
  if (!out) throw invalid_input_error("write_csv: cannot open " + path);
  for (std::size_t k = 0; k < names.size(); ++k)
    out << (k ? "," : "") << names[k];
  out << "\n";
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k)
      out << (k ? "," : "") << format_full(columns[k][r]);
    out << "\n";
  }
}

// Node-indexed fields with their grid coordinates in front.
inline void write_field_csv(const std::string& path, const DiscreteDomain& d,
                            const std::vector<std::string>& names,
                            const std::vector<const Field*>& fields) {
  std::vector<std::string> cols_n = {"r"};
  std::vector<std::vector<double>> cols;
  const int nn = d.node_count();
  std::vector<double> rc(nn), tc(nn);
  for (int i = 0; i < nn; ++i) {
    rc[i] = d.coord_r(i);
    tc[i] = d.coord_t(i);
  }
  cols.push_back(std::move(rc));
  if (!d.one_dimensional()) {
    cols_n.push_back("t");
    cols.push_back(std::move(tc));
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    cols_n.push_back(names[k]);
    cols.push_back(*fields[k]);
  }
  write_csv(path, cols_n, cols);
}

inline void write_boundary_csv(const std::string& path, const DiscreteDomain& d,
                               const std::vector<std::string>& names,
                               const std::vector<const BoundaryField*>& fields) {
  std::vector<std::string> cols_n = {"r"};
  std::vector<std::vector<double>> cols;
  const std::size_t nb = d.boundary_nodes.size();
  std::vector<double> rc(nb), tc(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    rc[k] = d.coord_r(d.boundary_nodes[k]);
    tc[k] = d.coord_t(d.boundary_nodes[k]);
  }
  cols.push_back(std::move(rc));
  if (!d.one_dimensional()) {
    cols_n.push_back("t");
    cols.push_back(std::move(tc));
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    cols_n.push_back(names[k]);
    cols.push_back(*fields[k]);
  }
  write_csv(path, cols_n, cols);
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw invalid_input_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace smmslab
