#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "smbsde/bsde.hpp"
#include "smbsde/conditions.hpp"
#include "smbsde/control.hpp"
#include "smbsde/lattice.hpp"
#include "smbsde/smc_core.hpp"

namespace smbsde::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Parses JSON text; syntax errors become InputError naming source:line:col.
Json parse_document(const std::string& text, const std::string& source);
Json read_document(const std::filesystem::path& path);

/// Model document:
///   { "schema_version": 1, "n_states": N, "horizon": T,
///     "pi":   per state, an array over m = 1.. (zero padded to T+1) or
///             {"geometric": d} or {"deterministic": m},
///     "jump": per state, [m][j] rows for m = 1..T+1 or one [j] row for all m,
///     "x0":   distribution [N] or a 1-based state index }
SemiMarkovModel parse_model(const Json& doc);
SemiMarkovModel load_model(const std::filesystem::path& path);

/// Problem document (linear BSDE or control problem):
///   { "schema_version": 1,
///     "controls": [[...], ...]        optional, default one control,
///     "bounds": {"p": .., "l": ..}    optional, default = table maxima,
///     "alpha", "g":  {"constant": c | [c_u]}
///                    {"state-scaled": {"scale": [c_u], "by_state": [N]}}
///                    {"table": [k][flat][u]},
///     "beta":        {"constant": 0}
///                    {"state-scaled": {"scale": [c_u], "by_state": [N]}}
///                    {"table": [k][u][flat][D]},
///     "terminal":    {"by_state": [N]} or {"by_lattice": [D]} }
/// In the state-scaled beta family the row at state (l, h) is
/// scale_u * by_state[l'] for every coordinate (l', h').
ControlProblem parse_problem(const Json& doc, const LatticeSystem& sys);
ControlProblem load_problem(const std::filesystem::path& path, const LatticeSystem& sys);

/// Round-trip formatting with 17 significant digits.
std::string format17(double x);

void write_matrix_csv(std::ostream& os, const Matrix& m);
/// Columns: time, state, sojourn, flat, y.
void write_solution_csv(std::ostream& os, const LatticeSystem& sys, const BsdeSolution& sol);

Json to_json(const std::vector<Violation>& violations);
Json to_json(const ConditionReport& rep);
Json to_json(const ChainPath& path);
Json to_json(const LatticeSystem& sys, const BsdeSolution& sol);
Json to_json(const LatticeSystem& sys, const PolicyTable& policy);
Json matrix_json(const Matrix& m);
Json vector_json(const Vector& v);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace smbsde::io
