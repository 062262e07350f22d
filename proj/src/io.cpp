#include "smbsde/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "smbsde/errors.hpp"

namespace smbsde::io {

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw InputError("field '" + field + "': " + what);
}

const Json& require(const Json& doc, const std::string& key, const std::string& where = "") {
  if (!doc.is_object() || !doc.contains(key)) field_error(where + key, "missing");
  return doc.at(key);
}

double number(const Json& v, const std::string& field) {
  if (!v.is_number()) field_error(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(field, "not finite");
  return x;
}

int integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) field_error(field, "expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const Json& v, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

const Json& array_of(const Json& v, std::size_t size, const std::string& field) {
  if (!v.is_array()) field_error(field, "expected an array");
  if (v.size() != size) {
    field_error(field, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

void check_schema(const Json& doc) {
  if (!doc.is_object()) throw InputError("document root must be an object");
  const int version = integer(require(doc, "schema_version"), "schema_version");
  if (version != kSchemaVersion) {
    field_error("schema_version", "unsupported version " + std::to_string(version));
  }
}

std::vector<double> parse_pi_row(const Json& v, int durations, const std::string& field) {
  std::vector<double> row(durations, 0.0);
  if (v.is_object()) {
    if (v.contains("geometric")) {
      const double d = number(v.at("geometric"), field + ".geometric");
      if (d <= 0.0 || d > 1.0) field_error(field + ".geometric", "must lie in (0, 1]");
      for (int m = 1; m <= durations; ++m) row[m - 1] = d * std::pow(1.0 - d, m - 1);
      return row;
    }
    if (v.contains("deterministic")) {
      const int m = integer(v.at("deterministic"), field + ".deterministic");
      if (m < 1) field_error(field + ".deterministic", "must be a positive integer");
      if (m <= durations) row[m - 1] = 1.0;
      return row;
    }
    field_error(field, "expected an array, {\"geometric\": d} or {\"deterministic\": m}");
  }
  const auto values = numbers(v, field);
  if (static_cast<int>(values.size()) > durations) {
    field_error(field, "more than horizon+1 durations");
  }
  std::copy(values.begin(), values.end(), row.begin());
  return row;
}

std::vector<std::vector<double>> parse_jump_block(const Json& v, int n, int durations,
                                                  const std::string& field) {
  if (!v.is_array() || v.empty()) field_error(field, "expected a non-empty array");
  if (!v[0].is_array()) {
    const auto row = numbers(array_of(v, n, field), field);
    return std::vector<std::vector<double>>(durations, row);
  }
  array_of(v, durations, field);
  std::vector<std::vector<double>> out;
  for (int m = 0; m < durations; ++m) {
    const std::string f = field + "[" + std::to_string(m) + "]";
    out.push_back(numbers(array_of(v[m], n, f), f));
  }
  return out;
}

// Per-control scalar coefficient at (time, flat state).
std::vector<Matrix> parse_scalar_family(const Json& v, const LatticeSystem& sys, int nu,
                                        const std::string& field) {
  const int t = sys.horizon();
  const int d = sys.dim();
  std::vector<Matrix> out(t, Matrix::Zero(d, nu));
  auto per_control = [&](const Json& c, const std::string& f) {
    if (c.is_number()) return std::vector<double>(nu, number(c, f));
    return numbers(array_of(c, nu, f), f);
  };
  if (!v.is_object() || v.size() != 1) {
    field_error(field, "expected one of constant, state-scaled, table");
  }
  if (v.contains("constant")) {
    const auto c = per_control(v.at("constant"), field + ".constant");
    for (auto& m : out) {
      for (int u = 0; u < nu; ++u) m.col(u).setConstant(c[u]);
    }
  } else if (v.contains("state-scaled")) {
    const Json& s = v.at("state-scaled");
    const std::string f = field + ".state-scaled";
    const auto scale = per_control(require(s, "scale", f + "."), f + ".scale");
    const auto by_state = numbers(array_of(require(s, "by_state", f + "."), sys.n_states(),
                                           f + ".by_state"), f + ".by_state");
    for (auto& m : out) {
      for (int r = 0; r < d; ++r) {
        for (int u = 0; u < nu; ++u) m(r, u) = scale[u] * by_state[sys.label(r).state];
      }
    }
  } else if (v.contains("table")) {
    const std::string f = field + ".table";
    const Json& tab = array_of(v.at("table"), t, f);
    for (int k = 0; k < t; ++k) {
      const std::string fk = f + "[" + std::to_string(k) + "]";
      array_of(tab[k], d, fk);
      for (int r = 0; r < d; ++r) {
        const std::string fr = fk + "[" + std::to_string(r) + "]";
        const auto row = per_control(tab[k][r], fr);
        for (int u = 0; u < nu; ++u) out[k](r, u) = row[u];
      }
    }
  } else {
    field_error(field, "unknown family (expected constant, state-scaled or table)");
  }
  return out;
}

std::vector<std::vector<Matrix>> parse_beta_family(const Json& v, const LatticeSystem& sys,
                                                   int nu, const std::string& field) {
  const int t = sys.horizon();
  const int d = sys.dim();
  std::vector<std::vector<Matrix>> out(t, std::vector<Matrix>(nu, Matrix::Zero(d, d)));
  if (!v.is_object() || v.size() != 1) {
    field_error(field, "expected one of constant, state-scaled, table");
  }
  if (v.contains("constant")) {
    if (number(v.at("constant"), field + ".constant") != 0.0) {
      field_error(field + ".constant", "only 0 is meaningful for a row-valued coefficient");
    }
  } else if (v.contains("state-scaled")) {
    const Json& s = v.at("state-scaled");
    const std::string f = field + ".state-scaled";
    const Json& sc = require(s, "scale", f + ".");
    const auto scale = sc.is_number() ? std::vector<double>(nu, number(sc, f + ".scale"))
                                      : numbers(array_of(sc, nu, f + ".scale"), f + ".scale");
    const auto by_state = numbers(array_of(require(s, "by_state", f + "."), sys.n_states(),
                                           f + ".by_state"), f + ".by_state");
    RowVector row(d);
    for (int c = 0; c < d; ++c) row(c) = by_state[sys.label(c).state];
    for (auto& per_u : out) {
      for (int u = 0; u < nu; ++u) {
        for (int r = 0; r < d; ++r) per_u[u].row(r) = scale[u] * row;
      }
    }
  } else if (v.contains("table")) {
    const std::string f = field + ".table";
    const Json& tab = array_of(v.at("table"), t, f);
    for (int k = 0; k < t; ++k) {
      const std::string fk = f + "[" + std::to_string(k) + "]";
      array_of(tab[k], nu, fk);
      for (int u = 0; u < nu; ++u) {
        const std::string fu = fk + "[" + std::to_string(u) + "]";
        array_of(tab[k][u], d, fu);
        for (int r = 0; r < d; ++r) {
          const std::string fr = fu + "[" + std::to_string(r) + "]";
          const auto row = numbers(array_of(tab[k][u][r], d, fr), fr);
          for (int c = 0; c < d; ++c) out[k][u](r, c) = row[c];
        }
      }
    }
  } else {
    field_error(field, "unknown family (expected constant, state-scaled or table)");
  }
  return out;
}

}  // namespace

Json parse_document(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << source << ':' << line << ':' << col << ": JSON syntax error: " << e.what();
    throw InputError(os.str());
  }
}

Json read_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_document(buf.str(), path.string());
}

SemiMarkovModel parse_model(const Json& doc) {
  check_schema(doc);
  SemiMarkovModel m;
  m.n_states = integer(require(doc, "n_states"), "n_states");
  m.horizon = integer(require(doc, "horizon"), "horizon");
  if (m.n_states < 1) field_error("n_states", "must be positive");
  if (m.horizon < 1) field_error("horizon", "must be positive");
  const int n = m.n_states;
  const int durations = m.durations();

  const Json& pi = array_of(require(doc, "pi"), n, "pi");
  for (int i = 0; i < n; ++i) {
    m.pi.push_back(parse_pi_row(pi[i], durations, "pi[" + std::to_string(i) + "]"));
  }
  const Json& jump = array_of(require(doc, "jump"), n, "jump");
  for (int i = 0; i < n; ++i) {
    m.jump.push_back(parse_jump_block(jump[i], n, durations, "jump[" + std::to_string(i) + "]"));
  }
  const Json& x0 = require(doc, "x0");
  if (x0.is_number_integer()) {
    const int s = x0.get<int>();
    if (s < 1 || s > n) field_error("x0", "state index must lie in 1..n_states");
    m.x0.assign(n, 0.0);
    m.x0[s - 1] = 1.0;
  } else {
    m.x0 = numbers(array_of(x0, n, "x0"), "x0");
  }
  return m;
}

SemiMarkovModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_document(path));
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + what);
  }
}

ControlProblem parse_problem(const Json& doc, const LatticeSystem& sys) {
  check_schema(doc);
  ControlProblem prob;
  if (doc.contains("controls")) {
    const Json& c = doc.at("controls");
    if (!c.is_array() || c.empty()) field_error("controls", "expected a non-empty array");
    for (std::size_t u = 0; u < c.size(); ++u) {
      const std::string f = "controls[" + std::to_string(u) + "]";
      prob.controls.push_back(c[u].is_number() ? std::vector<double>{number(c[u], f)}
                                               : numbers(c[u], f));
    }
  } else {
    prob.controls = {{0.0}};
  }
  const int nu = prob.n_controls();
  prob.alpha = parse_scalar_family(require(doc, "alpha"), sys, nu, "alpha");
  prob.g = parse_scalar_family(require(doc, "g"), sys, nu, "g");
  prob.beta = parse_beta_family(require(doc, "beta"), sys, nu, "beta");

  const Json& term = require(doc, "terminal");
  const int d = sys.dim();
  prob.terminal = Vector::Zero(d);
  if (term.is_object() && term.contains("by_state")) {
    const auto v = numbers(array_of(term.at("by_state"), sys.n_states(), "terminal.by_state"),
                           "terminal.by_state");
    for (int r = 0; r < d; ++r) prob.terminal(r) = v[sys.label(r).state];
  } else if (term.is_object() && term.contains("by_lattice")) {
    const auto v = numbers(array_of(term.at("by_lattice"), d, "terminal.by_lattice"),
                           "terminal.by_lattice");
    for (int r = 0; r < d; ++r) prob.terminal(r) = v[r];
  } else {
    field_error("terminal", "expected {\"by_state\": [N]} or {\"by_lattice\": [D]}");
  }

  double p = 0.0;
  double l = 0.0;
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      for (int u = 0; u < nu; ++u) {
        p = std::max(p, std::abs(prob.alpha[k](r, u)));
        l = std::max(l, prob.beta[k][u].row(r).norm());
      }
    }
  }
  prob.p_bound = p;
  prob.l_bound = l;
  if (doc.contains("bounds")) {
    const Json& b = doc.at("bounds");
    if (b.contains("p")) prob.p_bound = number(b.at("p"), "bounds.p");
    if (b.contains("l")) prob.l_bound = number(b.at("l"), "bounds.l");
  }
  validate_problem(sys, prob);
  return prob;
}

ControlProblem load_problem(const std::filesystem::path& path, const LatticeSystem& sys) {
  try {
    return parse_problem(read_document(path), sys);
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw InputError(path.string() + ": " + what);
  }
}

std::string format17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format17(m(i, j));
    }
    os << '\n';
  }
}

void write_solution_csv(std::ostream& os, const LatticeSystem& sys, const BsdeSolution& sol) {
  os << "time,state,sojourn,flat,y\n";
  for (int k = 0; k <= sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      const auto lab = sys.label(r);
      os << k << ',' << lab.state + 1 << ',' << lab.sojourn << ',' << r << ','
         << format17(sol.y[k](r)) << '\n';
    }
  }
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Json to_json(const std::vector<Violation>& violations) {
  Json out = Json::array();
  for (const auto& v : violations) {
    out.push_back({{"field", v.field}, {"indices", v.indices}, {"message", v.message}});
  }
  return out;
}

Json to_json(const ConditionReport& rep) {
  return {{"lhs", rep.lhs},
          {"margin", rep.margin},
          {"pass", rep.pass},
          {"all_pass", rep.all_pass},
          {"binding_time", rep.binding_time},
          {"min_margin", rep.min_margin}};
}

Json to_json(const ChainPath& path) {
  Json states = Json::array();
  for (int s : path.states) states.push_back(s + 1);
  return {{"states", states}, {"sojourns", path.sojourns}, {"jump_times", path.jump_times}};
}

Json to_json(const LatticeSystem& sys, const BsdeSolution& sol) {
  Json rows = Json::array();
  for (int k = 0; k <= sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      const auto lab = sys.label(r);
      Json entry = {{"time", k}, {"state", lab.state + 1}, {"sojourn", lab.sojourn},
                    {"flat", r}, {"y", sol.y[k](r)}};
      if (k < sys.horizon()) {
        Json z = Json::object();
        for (int s : sys.successors(r)) z[std::to_string(s)] = sol.z[k](r, s);
        entry["z"] = z;
      }
      rows.push_back(entry);
    }
  }
  return rows;
}

Json to_json(const LatticeSystem& sys, const PolicyTable& policy) {
  Json rows = Json::array();
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      const auto lab = sys.label(r);
      rows.push_back({{"time", k}, {"state", lab.state + 1}, {"sojourn", lab.sojourn},
                      {"control", policy.at(k, r)}});
    }
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace smbsde::io
