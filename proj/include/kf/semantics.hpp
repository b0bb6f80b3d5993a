#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kf/syntax.hpp"

namespace kf {

// A fact is a ground atom over domain element names.
struct GroundAtom {
  std::string pred;
  std::vector<std::string> elems;
  auto operator<=>(const GroundAtom&) const = default;
};

GroundAtom parse_fact(std::string_view text);
std::string print_fact(const GroundAtom& a);

struct WorldFacts {
  std::set<GroundAtom> facts;
  bool holds(const GroundAtom& a) const { return facts.count(a) > 0; }
};

// ---------------------------------------------------------------------------
// General finite Kripke model (arbitrary digraph; used for falsification
// experiments, not only linear frames).
// ---------------------------------------------------------------------------

struct KripkeModel {
  std::vector<WorldFacts> worlds;
  std::vector<std::vector<uint32_t>> successors;  // adjacency by world index
  std::vector<std::string> domain;
  std::map<std::string, std::string> constants;  // constant name -> element

  void validate() const;
  std::string to_dot() const;
};

bool eval(const KripkeModel& m, uint32_t world, const FormulaPtr& f);
bool global_truth(const KripkeModel& m, const FormulaPtr& f);

// ---------------------------------------------------------------------------
// Lasso models: the finite presentation of discrete linear ω-models.
// Positions are the prefix worlds followed by the loop repeated forever,
// accessibility is ≤ on positions.
// ---------------------------------------------------------------------------

struct Pos {
  enum class Part : uint8_t { Prefix, Loop };
  Part part = Part::Prefix;
  uint32_t index = 0;

  static Pos prefix(uint32_t i) { return {Part::Prefix, i}; }
  static Pos loop(uint32_t i) { return {Part::Loop, i}; }
  bool operator==(const Pos&) const = default;
};

std::string to_string(const Pos& p);

struct LassoModel {
  std::vector<WorldFacts> prefix;
  std::vector<WorldFacts> loop;  // nonempty
  std::vector<std::string> domain;
  std::map<std::string, std::string> constants;

  void validate() const;
  uint32_t position_count() const {
    return static_cast<uint32_t>(prefix.size() + loop.size());
  }
  std::vector<Pos> all_positions() const;
  const WorldFacts& at(const Pos& p) const;

  static LassoModel from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  std::string to_dot() const;
};

bool eval_lasso(const LassoModel& m, const Pos& p, const FormulaPtr& f);
bool global_truth(const LassoModel& m, const FormulaPtr& f);

// Memoizing evaluator for sweeps over many formulas/positions of one model.
class LassoEvaluator {
 public:
  explicit LassoEvaluator(const LassoModel& m);
  bool eval(const Pos& p, const FormulaPtr& f);
  bool global(const FormulaPtr& f);

 private:
  const LassoModel& m_;
  std::unordered_map<FormulaPtr, std::vector<int8_t>, FormulaHash, FormulaEq> memo_;
  const std::vector<int8_t>& row(const FormulaPtr& f);
  uint32_t flat(const Pos& p) const;
};

// Finite reflexive-transitive model consisting of the prefix followed by
// `steps` copies of the loop, ordered by position, with the final copy
// closed into a cluster (its worlds see each other). Evaluation on the
// result agrees with eval_lasso at every position, for every sentence.
KripkeModel unroll(const LassoModel& m, uint32_t steps);

}  // namespace kf
