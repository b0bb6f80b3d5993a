#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kf/semantics.hpp"
#include "kf/syntax.hpp"

namespace kf {

// A finite extra-axiom set over a signature. A model of the theory is a
// discrete linear model in which every axiom is globally true; the S4.3.1
// schemata are not stored because every lasso frame validates them.
struct Theory {
  Signature sig;
  std::vector<FormulaPtr> axioms;

  static Theory from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

constexpr uint64_t kAutoBound = ~0ull;

// Countermodel search limits. kAutoBound resolves per call to the
// completeness bound for the propositional fragment, capped by
// KF_MAX_BOUND_CAP.
struct SearchBounds {
  uint64_t max_prefix = kAutoBound;
  uint64_t max_loop = kAutoBound;
  uint64_t max_domain = 2;
};

struct OracleOptions {
  // Strict: an Exhausted verdict is a hard error for boolean consumers.
  bool strict = true;
  // Accept "no countermodel found" as Valid even when the bounds do not
  // provably cover the fragment (first-order input, capped bounds).
  bool assume_bound_complete = false;
  uint64_t bound_cap = 1ull << 20;

  static OracleOptions from_env();
};

enum class VerdictKind : uint8_t { Valid, Countermodel, Exhausted };

struct Verdict {
  VerdictKind kind = VerdictKind::Exhausted;
  std::optional<LassoModel> witness;
  std::optional<Pos> position;  // failing (entails) / satisfying (satisfiable) position

  nlohmann::ordered_json to_json() const;
};

enum class SatKind : uint8_t { Satisfiable, Unsatisfiable, Exhausted };

struct SatVerdict {
  SatKind kind = SatKind::Exhausted;
  std::optional<LassoModel> witness;
  std::optional<Pos> position;

  nlohmann::ordered_json to_json() const;
};

// Decides T ⊨_L f: whether f holds at every position of every discrete
// linear model of T. Countermodel verdicts carry a re-validated witness
// lasso and failing position (the smallest such lasso in the deterministic
// search order). Valid is only reported when the search is exhaustive at
// bounds covering the propositional completeness threshold.
Verdict entails_linear(const Theory& t, const FormulaPtr& f, const SearchBounds& b = {},
                       const OracleOptions& opts = OracleOptions::from_env());

// Dual: is there a model of T with a position satisfying f?
SatVerdict satisfiable_linear(const Theory& t, const FormulaPtr& f, const SearchBounds& b = {},
                              const OracleOptions& opts = OracleOptions::from_env());

// Verdict-only fast path used by consistency checks; never mines a witness.
VerdictKind entails_linear_decision(const Theory& t, const FormulaPtr& f,
                                    const SearchBounds& b = {},
                                    const OracleOptions& opts = OracleOptions::from_env());

// ---------------------------------------------------------------------------
// Axiom schemata of S4.3.1
// ---------------------------------------------------------------------------

enum class Schema : uint8_t { T, Four, D2, N1 };

std::string to_string(Schema s);
// Instance builders; D2 takes two parameter formulas, the rest ignore psi.
FormulaPtr schema_instance(Schema s, const FormulaPtr& phi, const FormulaPtr& psi = nullptr);

struct SchemaInstance {
  Schema schema;
  FormulaPtr phi;
  FormulaPtr psi;  // D2 only
};

struct SchemataReport {
  struct Row {
    SchemaInstance instance;
    std::vector<int8_t> truth_by_position;
    bool all_true = true;
  };
  std::vector<Row> rows;
  bool all_true = true;
};

SchemataReport check_schemata(const LassoModel& m, const std::vector<SchemaInstance>& instances);

// Effective bounds the oracle would use for this input (for reporting).
struct ResolvedBounds {
  uint64_t max_prefix = 0;
  uint64_t max_loop = 0;
  uint64_t max_domain = 1;
  bool covers_completeness = false;  // meaningful for propositional input
  bool propositional = false;
};

ResolvedBounds resolve_bounds(const Theory& t, const FormulaPtr& f, const SearchBounds& b,
                              const OracleOptions& opts);

}  // namespace kf
