#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "smbsde/errors.hpp"
#include "smbsde/io.hpp"

using namespace smbsde;
using io::Json;

namespace {

const std::string kData = SMBSDE_TEST_DATA;

Json model_doc() {
  return Json::parse(R"({
    "schema_version": 1, "n_states": 2, "horizon": 3,
    "pi": [{"geometric": 0.5}, [0.2, 0.8]],
    "jump": [[0, 1], [[1, 0], [1, 0], [1, 0], [1, 0]]],
    "x0": 2 })");
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ParseModel, Families) {
  const auto m = io::parse_model(model_doc());
  EXPECT_EQ(m.n_states, 2);
  EXPECT_EQ(m.horizon, 3);
  ASSERT_EQ(m.pi[0].size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(m.pi[0][k], 0.5 * std::pow(0.5, k), 1e-15);
  EXPECT_EQ(m.pi[1], (std::vector<double>{0.2, 0.8, 0.0, 0.0}));
  EXPECT_EQ(m.jump[0][3], (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(m.jump[1][2], (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(m.x0, (std::vector<double>{0.0, 1.0}));

  Json doc = model_doc();
  doc["pi"][0] = Json{{"deterministic", 2}};
  doc["x0"] = {0.25, 0.75};
  const auto d = io::parse_model(doc);
  EXPECT_EQ(d.pi[0], (std::vector<double>{0.0, 1.0, 0.0, 0.0}));
  EXPECT_EQ(d.x0, (std::vector<double>{0.25, 0.75}));
}

TEST(ParseModel, FieldErrorsNameTheField) {
  Json doc = model_doc();
  doc.erase("horizon");
  EXPECT_NE(error_of([&] { io::parse_model(doc); }).find("'horizon'"), std::string::npos);

  doc = model_doc();
  doc["x0"] = 3;
  EXPECT_NE(error_of([&] { io::parse_model(doc); }).find("'x0'"), std::string::npos);

  doc = model_doc();
  doc["pi"][0] = Json{{"weird", 1}};
  EXPECT_NE(error_of([&] { io::parse_model(doc); }).find("pi"), std::string::npos);

  doc = model_doc();
  doc["schema_version"] = 7;
  EXPECT_THROW(io::parse_model(doc), InputError);

  doc = model_doc();
  doc["pi"][1] = {1, 2, 3, 4, 5, 6};
  EXPECT_THROW(io::parse_model(doc), InputError);

  EXPECT_THROW(io::parse_model(Json::array()), InputError);
}

TEST(ParseDocument, SyntaxErrorsCarryLineAndColumn) {
  const std::string msg = error_of([] { io::parse_document("{\n  \"a\": 1,\n  \"b\": ]\n}", "m.json"); });
  EXPECT_EQ(msg.rfind("m.json:3:", 0), 0u) << msg;
  EXPECT_THROW(io::read_document(kData + "/does/not/exist.json"), InputError);
}

TEST(ParseProblem, ConstantAndStateScaled) {
  const auto sys = build_lattice(io::load_model(kData + "/models/control2.json"));
  const auto prob = io::load_problem(kData + "/problems/control_full.json", sys);
  EXPECT_EQ(prob.n_controls(), 3);
  EXPECT_DOUBLE_EQ(prob.p_bound, 0.3);
  EXPECT_DOUBLE_EQ(prob.l_bound, 0.06);
  for (int k = 0; k < sys.horizon(); ++k) {
    for (int r : sys.reachable_at(k)) {
      const int st = sys.label(r).state;
      EXPECT_EQ(prob.alpha[k](r, 2), 0.3);
      EXPECT_DOUBLE_EQ(prob.g[k](r, 0), 0.1 * (st == 0 ? 1.0 : 0.5));
      for (int c = 0; c < sys.dim(); ++c) {
        const double by = sys.label(c).state == 0 ? 1.0 : -0.5;
        EXPECT_DOUBLE_EQ(prob.beta[k][0](r, c), 0.03 * by);
        EXPECT_EQ(prob.beta[k][1](r, c), 0.0);
      }
    }
  }
  for (int s : sys.reachable_at(sys.horizon())) {
    EXPECT_EQ(prob.terminal(s), sys.label(s).state == 0 ? 1.0 : -0.5);
  }
}

TEST(ParseProblem, TablesAndDefaultBounds) {
  const auto sys = build_lattice(io::parse_model(model_doc()));
  const int t = sys.horizon();
  const int d = sys.dim();
  Json alpha = Json::array();
  Json beta = Json::array();
  for (int k = 0; k < t; ++k) {
    Json ak = Json::array();
    Json bk = Json::array();
    for (int r = 0; r < d; ++r) ak.push_back(Json::array({0.01 * r}));
    Json rows = Json::array();
    for (int r = 0; r < d; ++r) rows.push_back(std::vector<double>(d, r == 0 ? 0.02 : 0.0));
    bk.push_back(rows);
    alpha.push_back(ak);
    beta.push_back(bk);
  }
  Json doc = {{"schema_version", 1},
              {"alpha", {{"table", alpha}}},
              {"beta", {{"table", beta}}},
              {"g", {{"constant", 0.5}}},
              {"terminal", {{"by_lattice", std::vector<double>(d, 1.0)}}}};
  const auto prob = io::parse_problem(doc, sys);
  EXPECT_EQ(prob.n_controls(), 1);
  EXPECT_EQ(prob.alpha[1](3, 0), 0.03);
  EXPECT_EQ(prob.g[2](1, 0), 0.5);
  // Default bounds are the maxima over the reachable set.
  double amax = 0.0;
  double bmax = 0.0;
  for (int k = 0; k < t; ++k) {
    for (int r : sys.reachable_at(k)) {
      amax = std::max(amax, 0.01 * r);
      bmax = std::max(bmax, r == 0 ? 0.02 * std::sqrt(d) : 0.0);
    }
  }
  EXPECT_NEAR(prob.p_bound, amax, 1e-15);
  EXPECT_NEAR(prob.l_bound, bmax, 1e-15);

  doc["bounds"] = {{"p", 0.001}, {"l", 1.0}};
  if (amax > 0.001) EXPECT_THROW(io::parse_problem(doc, sys), InputError);
  doc.erase("bounds");
  doc["alpha"] = {{"table", Json::array()}};
  EXPECT_NE(error_of([&] { io::parse_problem(doc, sys); }).find("alpha"), std::string::npos);
  doc["alpha"] = {{"constant", 0}};
  doc["terminal"] = {{"by_state", {1.0}}};
  EXPECT_NE(error_of([&] { io::parse_problem(doc, sys); }).find("terminal"), std::string::npos);
}

TEST(Format17, RoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(io::format17(x)), x);
  }
}

TEST(Csv, MatrixAndSolution) {
  Matrix m(2, 2);
  m << 1, 0.5, -2, 1e-20;
  std::ostringstream os;
  io::write_matrix_csv(os, m);
  EXPECT_EQ(os.str(), "1,0.5\n-2,9.9999999999999995e-21\n");

  const auto sys = build_lattice(io::load_model(kData + "/models/geometric2.json"));
  BsdeSolution sol;
  sol.y.assign(sys.horizon() + 1, Vector::Zero(sys.dim()));
  sol.z.assign(sys.horizon(), ZField::Zero(sys.dim(), sys.dim()));
  std::ostringstream csv;
  io::write_solution_csv(csv, sys, sol);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "time,state,sojourn,flat,y");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  int expected = 0;
  for (int k = 0; k <= sys.horizon(); ++k) expected += static_cast<int>(sys.reachable_at(k).size());
  EXPECT_EQ(rows, expected);
}
