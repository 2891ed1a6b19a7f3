#pragma once

// Checker reports as CSV rows (check, function, psi, v, x, value, verdict)
// and a JSON summary document.

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psilcf/expr.hpp"
#include "psilcf/funclass.hpp"

namespace psilcf::report {

struct CheckRow {
  std::string check;
  std::string function;
  std::string psi;
  double v = std::nan("");
  double x = std::nan("");
  double value = std::nan("");
  std::string verdict;
};

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return expr::format_double(v);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& os, const std::vector<CheckRow>& rows) {
  os << "check,function,psi,v,x,value,verdict\n";
  for (const auto& r : rows) {
    os << csv_field(r.check) << ',' << csv_field(r.function) << ',' << csv_field(r.psi) << ',' << csv_number(r.v)
       << ',' << csv_number(r.x) << ',' << csv_number(r.value) << ',' << r.verdict << '\n';
  }
}

inline std::string to_csv(const std::vector<CheckRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

using funclass::to_string;

/// One row per admissible (v, x) ratio plus one H(x) row per x.
inline std::vector<CheckRow> rows(const funclass::ConvergenceDiagnostic& d, const std::string& check = "psi_lcf") {
  std::vector<CheckRow> out;
  const std::string verdict(to_string(d.verdict));
  for (std::size_t iv = 0; iv < d.v.size(); ++iv)
    for (std::size_t ix = 0; ix < d.x.size(); ++ix)
      if (!std::isnan(d.ratio[iv][ix])) out.push_back({check, d.function, d.psi, d.v[iv], d.x[ix], d.ratio[iv][ix], verdict});
  for (std::size_t ix = 0; ix < d.x.size(); ++ix)
    out.push_back({check + ":sup_deviation", d.function, d.psi, std::nan(""), d.x[ix], d.sup_deviation[ix], verdict});
  return out;
}

inline std::vector<CheckRow> rows(const funclass::ConditionAReport& r, const funclass::ClassKVerdict& k) {
  std::vector<CheckRow> out;
  const std::string verdict(to_string(k.verdict));
  for (std::size_t i = 0; i < r.v.size(); ++i) {
    out.push_back({"condition_A:a_hat", "", r.psi, r.v[i], std::nan(""), r.a_hat[i], verdict});
    out.push_back({"condition_A:upper_sup", "", r.psi, r.v[i], std::nan(""), r.upper_sup[i], verdict});
  }
  return out;
}

inline std::vector<CheckRow> rows(const funclass::ClassK1Report& r, const std::string& psi) {
  std::vector<CheckRow> out;
  const std::string verdict(to_string(r.verdict));
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    out.push_back({"class_K1:alpha_hat", "", psi, std::nan(""), r.x[i], r.alpha_hat[i], verdict});
    out.push_back({"class_K1:residual", "", psi, std::nan(""), r.x[i], r.residual[i], verdict});
  }
  return out;
}

inline std::vector<CheckRow> rows(const funclass::UpperPowerReport& r) {
  std::vector<CheckRow> out;
  const std::string verdict(to_string(r.verdict));
  for (std::size_t i = 0; i < r.p.size(); ++i)
    out.push_back({"upper_power:c_hat", r.function, "", r.p[i], std::nan(""), r.c_hat[i], verdict});
  return out;
}

inline nlohmann::json summary(const funclass::ConvergenceDiagnostic& d) {
  nlohmann::json sup = nlohmann::json::array();
  for (double h : d.sup_deviation) sup.push_back(std::isnan(h) ? nlohmann::json(nullptr) : nlohmann::json(h));
  return {{"check", "psi_lcf"}, {"function", d.function}, {"psi", d.psi},         {"tol", d.tol},
          {"v_window", {d.v1, d.v2}}, {"x", d.x},           {"sup_deviation", sup}, {"verdict", to_string(d.verdict)},
          {"reason", d.reason}};
}

inline nlohmann::json summary(const funclass::ConditionAReport& r, const funclass::ClassKVerdict& k) {
  return {{"check", "class_K"},
          {"psi", r.psi},
          {"vmax", r.vmax},
          {"partial_integral", r.partial_integral},
          {"tail_value", k.tail_value},
          {"insufficient_domain", r.insufficient_domain},
          {"duality_holds", r.duality_holds},
          {"heuristic", k.heuristic},
          {"verdict", to_string(k.verdict)},
          {"reason", k.reason}};
}

inline nlohmann::json summary(const funclass::ClassK1Report& r, const std::string& psi) {
  return {{"check", "class_K1"},   {"psi", psi},
          {"alpha", r.alpha},      {"theta_increasing", r.theta_increasing},
          {"verdict", to_string(r.verdict)}, {"reason", r.reason}};
}

inline nlohmann::json summary(const funclass::UpperPowerReport& r) {
  return {{"check", "upper_power"}, {"function", r.function}, {"p", r.p},
          {"c_hat", r.c_hat},       {"min_c", r.min_c},       {"lcf_pass", r.lcf_pass},
          {"verdict", to_string(r.verdict)}, {"reason", r.reason}};
}

}  // namespace psilcf::report
