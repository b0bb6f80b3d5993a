#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "kf/oracle.hpp"
#include "kf/semantics.hpp"
#include "kf/syntax.hpp"

namespace kf {

// Linear finite Kripke diagram: an ordered list of finite sentence sets with
// a relation squeezed between the successor pairs and the full upper
// triangle. World ids are stable across splicing; positions are not.
struct LinearFKD {
  struct World {
    uint64_t id = 0;
    std::vector<FormulaPtr> sentences;  // insertion order, no duplicates

    bool contains(const FormulaPtr& f) const;
  };

  std::vector<World> worlds;
  std::set<std::pair<uint32_t, uint32_t>> relation;
  uint64_t next_world_id = 0;

  void validate() const;
  std::optional<uint32_t> position_of(uint64_t world_id) const;

  static LinearFKD single_empty_world();
  static LinearFKD from_json(const nlohmann::json& j, const Signature& sig);
  nlohmann::ordered_json to_json() const;
  std::string to_dot() const;
};

// D + {f ∈ w_i}: insert a sentence into one world; idempotent.
LinearFKD add_sentence(const LinearFKD& d, uint32_t i, const FormulaPtr& f);

// D + {w_i}: splice a fresh empty world into position i (0 ≤ i ≤ count),
// keeping all successor pairs plus the shifted images of old pairs.
LinearFKD splice_world(const LinearFKD& d, uint32_t i);

// Ψ^D: nested diamond encoding built by downward induction from the last
// world. Reflexive relation pairs are dropped; skipping pairs contribute
// their own diamond conjunct; an empty diagram represents `true`, which
// needs the signature to spell.
FormulaPtr representing_formula(const LinearFKD& d, const Signature& sig);

// Semantically equivalent over reflexive transitive frames, but linear in
// the number of nonempty worlds: empty worlds and skip edges fold away.
FormulaPtr collapsed_representing_formula(const LinearFKD& d, const Signature& sig);

// D is T-consistent iff some discrete linear model of T witnesses it,
// iff ¬Ψ^D is not linearly valid under T; this runs the latter test.
bool is_T_consistent(const LinearFKD& d, const Theory& t, const SearchBounds& b = {},
                     const OracleOptions& opts = OracleOptions::from_env());

// Order-preserving truth-preserving assignment of FKD worlds into lasso
// positions. Positions range over the prefix plus world_count+1 unrollings
// of the loop; loop positions repeat truth values, so that horizon is
// exhaustive.
struct WitnessMap {
  // world_id -> virtual position (prefix index, or prefix_len + k for the
  // k-th unrolled loop slot).
  std::map<uint64_t, uint32_t> assignment;

  static Pos to_model_pos(const LassoModel& m, uint32_t virtual_pos);
  nlohmann::ordered_json to_json(const LassoModel& m) const;
};

std::optional<WitnessMap> find_witness(const LinearFKD& d, const LassoModel& m);

}  // namespace kf
