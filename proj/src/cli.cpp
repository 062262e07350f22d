#include "smbsde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "smbsde/bsde.hpp"
#include "smbsde/conditions.hpp"
#include "smbsde/control.hpp"
#include "smbsde/duality.hpp"
#include "smbsde/errors.hpp"
#include "smbsde/instances.hpp"
#include "smbsde/io.hpp"
#include "smbsde/lattice.hpp"
#include "smbsde/log.hpp"

#ifndef SMBSDE_DATA_DIR
#define SMBSDE_DATA_DIR "data"
#endif

namespace smbsde::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kDualityTol = 1e-9;
constexpr double kPositivityTol = 1e-10;
constexpr double kComparisonTol = 1e-10;
constexpr double kControlTol = 1e-9;
constexpr double kExactTol = 1e-12;
constexpr int kSelectionTrials = 40;

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
};

Json meta(const RunConfig& cfg, const std::string& convention) {
  Json m;
  m["tool"] = "smbsde";
  m["version"] = kVersion;
  m["command"] = cfg.command;
  m["schema_version"] = io::kSchemaVersion;
  m["convention"] = convention;
  m["psi_form"] = "covariance";
  m["rank_tol"] = numkit::kDefaultRankTol;
  m["tolerances"] = {{"duality", cfg.tol.value_or(kDualityTol)},
                     {"positivity", kPositivityTol},
                     {"comparison", kComparisonTol},
                     {"control", cfg.tol.value_or(kControlTol)},
                     {"probability", kProbabilityTol}};
  if (cfg.seed) m["seed"] = *cfg.seed;
  if (cfg.mc_paths) m["mc_paths"] = *cfg.mc_paths;
  return m;
}

Json margins(const LatticeSystem& sys, double l, double omega2) {
  return {{"positivity", io::to_json(check_positivity_condition(sys, l))},
          {"comparison", io::to_json(check_comparison_condition(sys, omega2))},
          {"l", l},
          {"omega2", omega2}};
}

void emit(const Context& ctx, const std::string& file, const Json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (ctx.cfg.out.empty()) {
    ctx.out << text;
  } else {
    io::write_text(fs::path(ctx.cfg.out) / file, text);
  }
}

void emit_artifact(const Context& ctx, const std::string& file, const std::string& text) {
  if (!ctx.cfg.out.empty()) io::write_text(fs::path(ctx.cfg.out) / file, text);
}

void require_flag(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw InputError(command + " requires " + flag);
}

SemiMarkovModel load_valid_model(const RunConfig& cfg) {
  require_flag(cfg.model, "--model", cfg.command);
  SemiMarkovModel model = io::load_model(cfg.model);
  require_valid(model);
  return model;
}

std::optional<DualConvention> fixed_convention(const RunConfig& cfg) {
  if (cfg.convention == "auto") return std::nullopt;
  auto c = parse_convention(cfg.convention);
  if (!c) throw InputError("unknown convention '" + cfg.convention + "'");
  return c;
}

LinearDriver single_driver(const ControlProblem& prob, const LatticeSystem& sys) {
  if (prob.n_controls() != 1) {
    throw InputError("a linear BSDE problem must have exactly one control");
  }
  PolicyTable zero;
  zero.choice.assign(sys.horizon(), std::vector<int>(sys.dim(), 0));
  return policy_driver(prob, sys, zero);
}

Json evidence_json(const ConventionEvidence& ev) {
  Json res = Json::object();
  for (auto c : kAllConventions) {
    const auto i = static_cast<std::size_t>(c);
    res[std::string(to_string(c))] = {{"agreements", ev.agreements[i]},
                                      {"max_residual", ev.max_residual[i]}};
  }
  Json agreeing = Json::array();
  for (auto c : ev.agreeing) agreeing.push_back(std::string(to_string(c)));
  return {{"trials", ev.trials.size()},
          {"agree_tol", ev.agree_tol},
          {"informative", ev.informative},
          {"per_convention", res},
          {"agreeing", agreeing},
          {"selected", ev.selected ? Json(std::string(to_string(*ev.selected))) : Json(nullptr)},
          {"diagnostic", ev.diagnostic}};
}

// ---------------------------------------------------------------- commands

int cmd_validate(const Context& ctx) {
  require_flag(ctx.cfg.model, "--model", ctx.cfg.command);
  const SemiMarkovModel model = io::load_model(ctx.cfg.model);
  const auto violations = validate_model(model);
  Json doc;
  doc["meta"] = meta(ctx.cfg, "n/a");
  doc["violations"] = io::to_json(violations);
  emit(ctx, "validation.json", doc);
  for (const auto& v : violations) {
    ctx.err << v.field;
    for (int i : v.indices) ctx.err << '[' << i << ']';
    ctx.err << ": " << v.message << '\n';
  }
  return violations.empty() ? kOk : kFailure;
}

int cmd_simulate(const Context& ctx) {
  if (!ctx.cfg.seed) throw InputError("simulate requires --seed");
  const SemiMarkovModel model = load_valid_model(ctx.cfg);
  const SojournQuantities sq = sojourn_quantities(model);
  const int paths = ctx.cfg.mc_paths.value_or(1);
  if (paths < 1) throw InputError("--mc-paths must be positive");
  std::mt19937_64 rng(*ctx.cfg.seed);

  std::ostringstream csv;
  csv << "path,time,state,sojourn\n";
  Json sample = Json::array();
  std::vector<long long> jumps_at(model.horizon + 1, 0);
  for (int p = 0; p < paths; ++p) {
    const ChainPath path = simulate(model, sq, model.horizon, rng);
    for (int k = 0; k <= model.horizon; ++k) {
      csv << p << ',' << k << ',' << path.states[k] + 1 << ',' << path.sojourns[k] << '\n';
    }
    for (int tj : path.jump_times) ++jumps_at[tj];
    if (p < 10) sample.push_back(io::to_json(path));
  }
  Json doc;
  doc["meta"] = meta(ctx.cfg, "n/a");
  doc["paths"] = paths;
  doc["first_paths"] = sample;
  doc["jump_counts_by_time"] = jumps_at;
  emit(ctx, "simulation.json", doc);
  emit_artifact(ctx, "paths.csv", csv.str());
  return kOk;
}

int cmd_build_lattice(const Context& ctx) {
  const LatticeSystem sys = build_lattice(load_valid_model(ctx.cfg));
  const LambdaConstants lam = lambda_constants(sys);

  Json reach = Json::array();
  for (int k = 0; k <= sys.horizon(); ++k) {
    Json row = Json::array();
    for (int r : sys.reachable_at(k)) {
      const auto lab = sys.label(r);
      row.push_back({{"flat", r}, {"state", lab.state + 1}, {"sojourn", lab.sojourn},
                     {"probability", sys.distribution_at(k)(r)}});
    }
    reach.push_back(row);
  }
  double penrose = 0.0;
  Json states = Json::array();
  for (int r = 0; r < sys.dim(); ++r) {
    if (!sys.is_live(r)) continue;
    const double res = numkit::penrose_residuals(sys.psi(r), sys.psi_pinv(r)).max() /
                       (1.0 + numkit::frobenius(sys.psi(r)));
    penrose = std::max(penrose, res);
    states.push_back({{"flat", r},
                      {"psi_frobenius", numkit::frobenius(sys.psi(r))},
                      {"pinv_frobenius", numkit::frobenius(sys.psi_pinv(r))},
                      {"lambda", lambda_at(sys, r)}});
    std::ostringstream cov, psi, pinv;
    io::write_matrix_csv(cov, sys.covariance(r));
    io::write_matrix_csv(psi, psi_matrix(sys, r));
    io::write_matrix_csv(pinv, sys.psi_pinv(r));
    emit_artifact(ctx, "cov_" + std::to_string(r) + ".csv", cov.str());
    emit_artifact(ctx, "psi_printed_" + std::to_string(r) + ".csv", psi.str());
    emit_artifact(ctx, "pinv_" + std::to_string(r) + ".csv", pinv.str());
  }
  std::ostringstream c;
  io::write_matrix_csv(c, sys.transition());
  emit_artifact(ctx, "C.csv", c.str());

  Json doc;
  doc["meta"] = meta(ctx.cfg, "n/a");
  doc["dim"] = sys.dim();
  doc["reachable"] = reach;
  doc["live_states"] = states;
  doc["lambda"] = {{"per_time", lam.per_time}, {"global", lam.global},
                   {"indefinite_states", lam.indefinite_states}};
  doc["positivity_threshold"] = positivity_threshold(sys);
  doc["comparison_threshold"] = comparison_threshold(sys);
  doc["max_penrose_residual"] = penrose;
  emit(ctx, "lattice.json", doc);
  return kOk;
}

int cmd_solve_bsde(const Context& ctx) {
  const LatticeSystem sys = build_lattice(load_valid_model(ctx.cfg));
  require_flag(ctx.cfg.problem, "--problem", ctx.cfg.command);
  const ControlProblem prob = io::load_problem(ctx.cfg.problem, sys);
  const LinearDriver drv = single_driver(prob, sys);
  const DriverSpec spec = DriverSpec::linear(drv);
  const BsdeSolution sol = solve_bsde(sys, spec, prob.terminal);
  const auto lip = lipschitz_bounds(sys, spec);

  Json doc;
  doc["meta"] = meta(ctx.cfg, std::string(to_string(kDefaultConvention)));
  doc["meta"]["margins"] = margins(sys, prob.l_bound, lip ? lip->omega2 : 0.0);
  doc["solution"] = io::to_json(sys, sol);
  std::ostringstream csv;
  io::write_solution_csv(csv, sys, sol);
  if (ctx.cfg.out.empty()) {
    ctx.out << csv.str();
  } else {
    emit(ctx, "solution.json", doc);
    emit_artifact(ctx, "solution.csv", csv.str());
  }
  return kOk;
}

int cmd_solve_control(const Context& ctx) {
  const LatticeSystem sys = build_lattice(load_valid_model(ctx.cfg));
  require_flag(ctx.cfg.problem, "--problem", ctx.cfg.command);
  const ControlProblem prob = io::load_problem(ctx.cfg.problem, sys);
  ControlOptions opts;
  opts.override_hypotheses = ctx.cfg.override_hypotheses;
  const ControlSolution solved = solve_control(prob, sys, opts);
  const double tol = ctx.cfg.tol.value_or(kControlTol);

  Json oracle;
  int status = kOk;
  if (policy_count(prob, sys) <= kPolicyGuard) {
    const BruteForceResult bf = brute_force_value(prob, sys);
    double residual = 0.0;
    double excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= sys.horizon(); ++k) {
      for (int r : sys.reachable_at(k)) {
        excess = std::max(excess, bf.max_y[k](r) - solved.solution.y[k](r));
        if (k == 0) residual = std::max(residual, std::abs(bf.max_y[0](r) - solved.solution.y[0](r)));
      }
    }
    oracle = {{"policies", bf.policies}, {"y0_residual", residual}, {"max_excess", excess},
              {"tol", tol}, {"pass", residual <= tol}};
    if (residual > tol) {
      ctx.err << "solve-control: brute-force value differs by " << residual << '\n';
      status = kInvariant;
    }
  } else {
    oracle = {{"skipped", "policy count exceeds guard"}, {"policies", policy_count(prob, sys)}};
  }

  Json doc;
  doc["meta"] = meta(ctx.cfg, std::string(to_string(kDefaultConvention)));
  doc["meta"]["margins"] = {
      {"positivity", io::to_json(solved.hypotheses.positivity)},
      {"comparison", io::to_json(solved.hypotheses.comparison)},
      {"l", solved.hypotheses.l},
      {"lambda", solved.hypotheses.lambda}};
  doc["warnings"] = solved.warnings;
  doc["solution"] = io::to_json(sys, solved.solution);
  doc["policy"] = io::to_json(sys, solved.policy);
  doc["brute_force"] = oracle;
  emit(ctx, "control.json", doc);
  if (!ctx.cfg.out.empty()) {
    std::ostringstream csv;
    io::write_solution_csv(csv, sys, solved.solution);
    emit_artifact(ctx, "solution.csv", csv.str());
  }
  return status;
}

struct DualityCheck {
  double residual = 0.0;
  double min_v = std::numeric_limits<double>::infinity();
  bool positivity_checked = false;
  bool exact = true;
  bool pass = true;
};

// dual_value against solve_bsde at every start time.
DualityCheck check_duality(const LatticeSystem& sys, const LinearDriver& drv, const Vector& xi,
                           DualConvention conv, const RunConfig& cfg) {
  DualityCheck out;
  const double tol = cfg.tol.value_or(kDualityTol);
  const BsdeSolution sol = solve_bsde(sys, DriverSpec::linear(drv), xi);
  for (int i = 0; i < sys.horizon(); ++i) {
    const DualSde sde = DualSde::from(drv, conv, i);
    DualValueOptions opts;
    if (!enumeration_affordable(sys, i)) {
      if (!cfg.mc_paths) throw InputError("horizon too long for enumeration; pass --mc-paths");
      opts = {true, cfg.seed.value_or(0), *cfg.mc_paths};
      out.exact = false;
    }
    const DualValue dv = dual_value(sys, sde, drv.g, xi, opts);
    for (int r : sys.reachable_at(i)) {
      const double diff = std::abs(dv.value(r) - sol.y[i](r));
      out.residual = std::max(out.residual, diff);
      if (diff > tol + (dv.exact ? 0.0 : 4.0 * dv.std_error(r))) out.pass = false;
    }
    if (opts.monte_carlo) continue;
    const VBoundsReport vb = check_V_bounds(sys, sde);
    out.positivity_checked = out.positivity_checked || vb.positivity_condition;
    if (vb.positivity_condition) out.min_v = std::min(out.min_v, vb.min_v);
  }
  return out;
}

int cmd_verify_duality(const Context& ctx) {
  const LatticeSystem sys = build_lattice(load_valid_model(ctx.cfg));
  const std::uint64_t seed = ctx.cfg.seed.value_or(0);
  Json doc;
  ConventionEvidence ev;
  DualConvention conv = kDefaultConvention;
  if (auto fixed = fixed_convention(ctx.cfg)) {
    conv = *fixed;
  } else {
    try {
      conv = select_convention(sys, kSelectionTrials, seed, &ev);
    } catch (const ConventionSelectionError& e) {
      doc["meta"] = meta(ctx.cfg, "none");
      doc["evidence"] = evidence_json(e.evidence);
      emit(ctx, "duality.json", doc);
      ctx.err << e.what() << '\n';
      return kInvariant;
    }
  }

  std::vector<std::pair<LinearDriver, Vector>> cases;
  if (!ctx.cfg.problem.empty()) {
    const ControlProblem prob = io::load_problem(ctx.cfg.problem, sys);
    cases.emplace_back(single_driver(prob, sys), prob.terminal);
  } else {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 20; ++i) {
      const LinearInstance inst = random_linear_instance(sys, rng);
      cases.emplace_back(inst.driver, inst.terminal);
    }
  }

  Json rows = Json::array();
  bool pass = true;
  for (const auto& [drv, xi] : cases) {
    const DualityCheck chk = check_duality(sys, drv, xi, conv, ctx.cfg);
    pass = pass && chk.pass;
    rows.push_back({{"residual", chk.residual},
                    {"exact", chk.exact},
                    {"min_v", chk.positivity_checked ? Json(chk.min_v) : Json(nullptr)},
                    {"pass", chk.pass}});
  }
  doc["meta"] = meta(ctx.cfg, std::string(to_string(conv)));
  if (!ev.trials.empty()) doc["evidence"] = evidence_json(ev);
  doc["instances"] = rows;
  doc["pass"] = pass;
  emit(ctx, "duality.json", doc);
  if (!pass) ctx.err << "verify-duality: residual above tolerance\n";
  return pass ? kOk : kInvariant;
}

// ---------------------------------------------------------------- verify-all

struct Row {
  std::string target;
  std::string property;
  double value;
  double tolerance;
  bool pass;
};

void model_properties(const std::string& name, const LatticeSystem& sys, const RunConfig& cfg,
                      std::vector<Row>& rows) {
  const int t = sys.horizon();
  const int n = sys.n_states();
  const std::uint64_t seed = cfg.seed.value_or(0);

  double mart = 0.0;
  double colsum = 0.0;
  bool cardinality = true;
  for (int k = 0; k <= t; ++k) {
    if (static_cast<int>(sys.reachable_at(k).size()) > (k + 1) * n) cardinality = false;
    if (k == t) break;
    for (int r : sys.reachable_at(k)) {
      Vector acc = Vector::Zero(sys.dim());
      double mass = 0.0;
      for (int s : sys.successors(r)) {
        acc += sys.transition()(s, r) * lattice_increment(sys, r, s);
        mass += sys.transition()(s, r);
      }
      mart = std::max(mart, acc.cwiseAbs().maxCoeff());
      colsum = std::max(colsum, std::abs(mass - 1.0));
    }
  }
  rows.push_back({name, "martingale residual", mart, kExactTol, mart <= kExactTol});
  rows.push_back({name, "column sum deviation", colsum, kExactTol, colsum <= kExactTol});
  rows.push_back({name, "cardinality |R_k| <= (k+1)N", cardinality ? 0.0 : 1.0, 0.0, cardinality});

  double penrose = 0.0;
  for (int r = 0; r < sys.dim(); ++r) {
    if (!sys.is_live(r)) continue;
    penrose = std::max(penrose, numkit::penrose_residuals(sys.psi(r), sys.psi_pinv(r)).max() /
                                    (1.0 + numkit::frobenius(sys.psi(r))));
  }
  rows.push_back({name, "Penrose residual", penrose, 1e-9, penrose <= 1e-9});

  DualConvention conv = kDefaultConvention;
  if (auto fixed = fixed_convention(cfg)) {
    conv = *fixed;
  } else if (enumeration_affordable(sys, 0)) {
    try {
      conv = select_convention(sys, kSelectionTrials, seed);
      rows.push_back({name, "convention selection", 0.0, 0.0, true});
    } catch (const ConventionSelectionError& e) {
      rows.push_back({name, "convention selection", 1.0, 0.0, false});
    }
  }

  std::mt19937_64 rng(seed);
  if (enumeration_affordable(sys, 0)) {
    double dual = 0.0;
    double min_v = std::numeric_limits<double>::infinity();
    bool dual_pass = true;
    for (int i = 0; i < 10; ++i) {
      const LinearInstance inst = random_linear_instance(sys, rng);
      try {
        const DualityCheck chk = check_duality(sys, inst.driver, inst.terminal, conv, cfg);
        dual = std::max(dual, chk.residual);
        dual_pass = dual_pass && chk.pass;
        if (chk.positivity_checked) min_v = std::min(min_v, chk.min_v);
      } catch (const PositivityViolation& e) {
        min_v = std::min(min_v, e.report.min_v);
      }
    }
    rows.push_back({name, "duality residual (" + std::string(to_string(conv)) + ")", dual,
                    cfg.tol.value_or(kDualityTol), dual_pass});
    if (std::isfinite(min_v)) {
      rows.push_back({name, "min V under positivity inequality", min_v, -kPositivityTol,
                      min_v >= -kPositivityTol});
    }
  }

  InstanceBounds cmp;
  cmp.respect_comparison = true;
  int violations = 0;
  int with_hypotheses = 0;
  for (int i = 0; i < 10; ++i) {
    LinearInstance a = random_linear_instance(sys, rng, cmp);
    LinearDriver d2 = a.driver;
    Vector xi2 = a.terminal;
    for (int k = 0; k < t; ++k) {
      for (int r : sys.reachable_at(k)) d2.g[k](r) += uniform01(rng);
    }
    for (int s : sys.reachable_at(t)) xi2(s) += uniform01(rng);
    const ComparisonReport rep = check_comparison(sys, DriverSpec::linear(a.driver),
                                                  DriverSpec::linear(d2), a.terminal, xi2);
    if (rep.hypotheses_hold()) {
      ++with_hypotheses;
      violations += rep.violations;
    }
  }
  rows.push_back({name, "comparison violations (" + std::to_string(with_hypotheses) + " pairs)",
                  static_cast<double>(violations), 0.0, violations == 0});

  int discrepancies = 0;
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) {
      for (int trial = 0; trial < 10; ++trial) {
        RowVector z1 = random_row(sys.dim(), 1.0, rng);
        RowVector z2 = z1;
        if (trial % 2 == 0) {
          z2.array() += 2.0 * uniform01(rng) - 1.0;
          for (int c = 0; c < sys.dim(); ++c) {
            if (!(sys.transition()(c, r) > 0.0)) z2(c) += uniform01(rng);
          }
        } else {
          z2 = random_row(sys.dim(), 1.0, rng);
        }
        const RowVector diff = z1 - z2;
        const bool seminorm_zero =
            diff.dot(diff * sys.covariance(r)) <= 1e-14 * (1.0 + diff.squaredNorm());
        const bool pathwise = z_equivalent(sys, r, z1, z2);
        const bool canonical =
            (z_canonical(sys, r, z1) - z_canonical(sys, r, z2)).cwiseAbs().maxCoeff() <= 1e-12;
        if (seminorm_zero != pathwise || pathwise != canonical) ++discrepancies;
      }
    }
  }
  rows.push_back({name, "Z-equivalence discrepancies", static_cast<double>(discrepancies), 0.0,
                  discrepancies == 0});
}

void problem_properties(const std::string& name, const LatticeSystem& sys,
                        const ControlProblem& prob, const RunConfig& cfg, std::vector<Row>& rows) {
  ControlOptions opts;
  opts.override_hypotheses = true;
  const ControlSolution solved = solve_control(prob, sys, opts);
  rows.push_back({name, solved.hypotheses.ok() ? "control hypotheses hold" : "control hypotheses fail (overridden)",
                  solved.hypotheses.positivity.min_margin, 0.0, true});
  if (policy_count(prob, sys) > kPolicyGuard) {
    rows.push_back({name, "brute-force oracle (skipped: guard)", 0.0, 0.0, true});
    return;
  }
  const BruteForceResult bf = brute_force_value(prob, sys);
  double residual = 0.0;
  double excess = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      excess = std::max(excess, bf.max_y[k](r) - solved.solution.y[k](r));
      if (k == 0) residual = std::max(residual, std::abs(bf.max_y[0](r) - solved.solution.y[0](r)));
    }
  }
  const double tol = cfg.tol.value_or(kControlTol);
  rows.push_back({name, "Y0 vs brute force", residual, tol, residual <= tol});
  rows.push_back({name, "max_u Y^u - Y", excess, 1e-10, excess <= 1e-10});
}

std::vector<fs::path> sorted_json(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_verify_all(const Context& ctx) {
  std::vector<Row> rows;
  std::vector<std::pair<fs::path, fs::path>> problems;  // (problem, model)

  std::vector<fs::path> models;
  if (!ctx.cfg.model.empty()) {
    models.push_back(ctx.cfg.model);
    if (!ctx.cfg.problem.empty()) problems.emplace_back(ctx.cfg.problem, ctx.cfg.model);
  } else {
    const fs::path data = ctx.cfg.data.empty() ? fs::path(SMBSDE_DATA_DIR) : fs::path(ctx.cfg.data);
    models = sorted_json(data / "models");
    for (const auto& p : sorted_json(data / "problems")) {
      const Json doc = io::read_document(p);
      if (!doc.contains("model") || !doc.at("model").is_string()) {
        throw InputError(p.string() + ": field 'model': bundled problems must name their model");
      }
      problems.emplace_back(p, p.parent_path() / doc.at("model").get<std::string>());
    }
    if (models.empty()) throw InputError("verify-all: no models under " + (data / "models").string());
  }

  for (const auto& m : models) {
    const SemiMarkovModel model = io::load_model(m);
    const auto violations = validate_model(model);
    rows.push_back({m.stem().string(), "model violations", static_cast<double>(violations.size()),
                    0.0, violations.empty()});
    if (!violations.empty()) continue;
    model_properties(m.stem().string(), build_lattice(model), ctx.cfg, rows);
  }
  for (const auto& [p, m] : problems) {
    const SemiMarkovModel model = io::load_model(m);
    require_valid(model);
    const LatticeSystem sys = build_lattice(model);
    problem_properties(p.stem().string(), sys, io::load_problem(p, sys), ctx.cfg, rows);
  }

  bool pass = true;
  Json table = Json::array();
  ctx.out << std::left << std::setw(18) << "target" << std::setw(44) << "property"
          << std::setw(14) << "value" << std::setw(10) << "tol" << "status\n";
  for (const auto& r : rows) {
    pass = pass && r.pass;
    table.push_back({{"target", r.target}, {"property", r.property}, {"value", r.value},
                     {"tolerance", r.tolerance}, {"pass", r.pass}});
    std::ostringstream v, t;
    v << std::setprecision(3) << r.value;
    t << std::setprecision(2) << r.tolerance;
    ctx.out << std::setw(18) << r.target << std::setw(44) << r.property << std::setw(14)
            << v.str() << std::setw(10) << t.str() << (r.pass ? "ok" : "FAIL") << '\n';
  }
  if (!ctx.cfg.out.empty()) {
    Json doc;
    doc["meta"] = meta(ctx.cfg, ctx.cfg.convention);
    doc["rows"] = table;
    doc["pass"] = pass;
    emit(ctx, "summary.json", doc);
  }
  return pass ? kOk : kInvariant;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const Context ctx{config, out, err};
  try {
    if (config.command == "validate") return cmd_validate(ctx);
    if (config.command == "simulate") return cmd_simulate(ctx);
    if (config.command == "build-lattice") return cmd_build_lattice(ctx);
    if (config.command == "solve-bsde") return cmd_solve_bsde(ctx);
    if (config.command == "solve-control") return cmd_solve_control(ctx);
    if (config.command == "verify-duality") return cmd_verify_duality(ctx);
    if (config.command == "verify-all") return cmd_verify_all(ctx);
    err << "unknown command '" << config.command << "'\n";
    return kFailure;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Control of BSDEs driven by semi-Markov chain noise"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::uint64_t seed = 0;
  int mc_paths = 0;
  double tol = 0.0;

  const std::map<std::string, std::string> help = {
      {"validate", "check a model document"},
      {"simulate", "sample chain paths"},
      {"build-lattice", "write C, noise geometry and reachable sets"},
      {"solve-bsde", "solve a linear BSDE"},
      {"solve-control", "solve the control problem and check it by enumeration"},
      {"verify-duality", "compare the dual representation with the backward solve"},
      {"verify-all", "run every property check on the bundled data"}};
  for (const auto& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--model", cfg.model, "model document (JSON)");
    sub->add_option("--problem", cfg.problem, "problem document (JSON)");
    sub->add_option("--out", cfg.out, "directory for artifacts");
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--mc-paths", mc_paths, "Monte Carlo path count")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "override verification tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--convention", cfg.convention, "dual SDE reading")
        ->check(CLI::IsMember({"auto", "implicit", "shifted", "predictable"}));
    sub->add_flag("--override-hypotheses", cfg.override_hypotheses,
                  "downgrade hypothesis failures to warnings");
    if (name == "verify-all") sub->add_option("--data", cfg.data, "bundled data directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--mc-paths")) cfg.mc_paths = mc_paths;
    if (sub->count("--tol")) cfg.tol = tol;
  }
  return run(cfg, std::cout, std::cerr);
}

}  // namespace smbsde::cli
