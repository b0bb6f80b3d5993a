#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kf/errors.hpp"

#include "json.hpp"

namespace kf {

// ---------------------------------------------------------------------------
// Signature
// ---------------------------------------------------------------------------

struct Predicate {
  std::string name;
  uint32_t arity = 0;
};

// A fixed vocabulary: predicates, base constants, and the countable Henkin
// constant pool "<prefix>0", "<prefix>1", ...  The three name groups must be
// pairwise disjoint.
struct Signature {
  std::vector<Predicate> predicates;
  std::vector<std::string> base_constants;
  std::string henkin_prefix = "c";

  void validate() const;
  const Predicate* find_predicate(std::string_view name) const;
  bool is_base_constant(std::string_view name) const;
  std::optional<uint64_t> henkin_index(std::string_view name) const;
  std::string henkin_name(uint64_t k) const;
  bool is_constant(std::string_view name) const;

  static Signature from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

// ---------------------------------------------------------------------------
// Formula AST
// ---------------------------------------------------------------------------

struct Term {
  enum class Sort : uint8_t { Var, Const };
  Sort sort;
  std::string name;

  static Term var(std::string n) { return {Sort::Var, std::move(n)}; }
  static Term constant(std::string n) { return {Sort::Const, std::move(n)}; }
  bool operator==(const Term& o) const { return sort == o.sort && name == o.name; }
};

int compare(const Term& a, const Term& b);

enum class Kind : uint8_t { Atom, Not, And, Exists, Dia, Box };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable node. The core has exactly six kinds; Or/Implies/Forall/Top/Bot
// are expanded away by the factory helpers and the parser.
class Formula {
 public:
  Kind kind;
  std::string label;       // Atom: predicate name; Exists: bound variable
  std::vector<Term> args;  // Atom only
  FormulaPtr left, right;  // And: both; Not/Exists/Dia/Box: left only

  static FormulaPtr atom(std::string pred, std::vector<Term> args = {});
  static FormulaPtr not_(FormulaPtr f);
  static FormulaPtr and_(FormulaPtr a, FormulaPtr b);
  static FormulaPtr exists(std::string var, FormulaPtr body);
  static FormulaPtr dia(FormulaPtr f);
  static FormulaPtr box(FormulaPtr f);

  // Derived connectives; these build core nodes directly.
  static FormulaPtr or_(FormulaPtr a, FormulaPtr b);
  static FormulaPtr implies(FormulaPtr a, FormulaPtr b);
  static FormulaPtr forall(std::string var, FormulaPtr body);

  size_t hash() const { return hash_; }
  uint32_t node_count() const { return nodes_; }
  uint32_t modal_depth() const { return modal_depth_; }

 private:
  friend FormulaPtr make_node(Formula&& f);
  size_t hash_ = 0;
  uint32_t nodes_ = 0;
  uint32_t modal_depth_ = 0;
};

bool equal(const FormulaPtr& a, const FormulaPtr& b);
// Total order used for canonical bucket sorting: kind rank first, then
// payload, then children. Name comparison is shortlex so c2 < c10.
int compare(const FormulaPtr& a, const FormulaPtr& b);

struct FormulaHash {
  size_t operator()(const FormulaPtr& f) const { return f->hash(); }
};
struct FormulaEq {
  bool operator()(const FormulaPtr& a, const FormulaPtr& b) const { return equal(a, b); }
};
struct FormulaLess {
  bool operator()(const FormulaPtr& a, const FormulaPtr& b) const { return compare(a, b) < 0; }
};

// The canonical truth/falsity sentences over a signature, built from its
// first atomic sentence: true = ~(a & ~a), false = a & ~a. Requires at least
// one predicate.
FormulaPtr top_sentence(const Signature& sig);
FormulaPtr bot_sentence(const Signature& sig);

// ---------------------------------------------------------------------------
// Printing and parsing
// ---------------------------------------------------------------------------

std::string print(const FormulaPtr& f);
std::string print_full(const FormulaPtr& f);  // fully parenthesized

// ASCII grammar, precedence low to high: ->, |, &, prefix ~ [] <> exists/forall.
// Quantifier bodies extend maximally to the right. ◇ and □ are accepted as
// aliases for <> and [].
FormulaPtr parse(std::string_view text, const Signature& sig);

// ---------------------------------------------------------------------------
// Structural helpers
// ---------------------------------------------------------------------------

std::set<std::string> free_vars(const FormulaPtr& f);
bool is_sentence(const FormulaPtr& f);
// Capture-avoiding; replacement is a term, and only constants are ever
// substituted in this artifact, so no renaming can actually trigger.
FormulaPtr substitute(const FormulaPtr& f, const std::string& var, const Term& replacement);
// Renames bound variables to the canonical depth-indexed pool x0, x1, ...
FormulaPtr alpha_normalize(const FormulaPtr& f);

// Subformulas closed under single negation, sorted canonically.
std::vector<FormulaPtr> subsentences(const FormulaPtr& f);
std::vector<FormulaPtr> subsentences(const std::vector<FormulaPtr>& fs);

// ---------------------------------------------------------------------------
// Sentence enumeration and the stage schedule
// ---------------------------------------------------------------------------

// Size metric the enumeration buckets by: one per node, one per term, except
// Henkin constant c_k costs k+1 (so each bucket is finite) and a quantifier
// costs 2 (its variable name is the depth-canonical one).
uint64_t enum_size(const FormulaPtr& f, const Signature& sig);

// Deterministic size-then-lexicographic enumeration of all sentences over
// L ∪ C, with depth-canonical bound variables. nth() is total; index_of()
// inverts it for canonical sentences.
class SentenceEnumerator {
 public:
  explicit SentenceEnumerator(Signature sig);

  FormulaPtr nth(uint64_t e) const;
  std::optional<uint64_t> index_of(const FormulaPtr& sentence) const;
  const Signature& signature() const { return sig_; }
  uint64_t count_up_to_size(uint64_t size) const;

 private:
  const std::vector<FormulaPtr>& bucket(uint64_t size) const;
  std::vector<FormulaPtr> generate(uint64_t size, uint32_t depth) const;
  void term_tuples(uint64_t budget, uint32_t depth, uint32_t arity,
                   std::vector<Term>& acc, std::vector<std::vector<Term>>& out) const;

  Signature sig_;
  mutable std::vector<std::vector<FormulaPtr>> buckets_;  // buckets_[s] = sentences of size s+1
};

struct SchedulePair {
  uint64_t i = 0;
  uint64_t e = 0;
  bool operator==(const SchedulePair&) const = default;
};

uint64_t cantor_pair(uint64_t a, uint64_t b);
std::pair<uint64_t, uint64_t> cantor_unpair(uint64_t n);

// Stage schedule: Cantor-unpair n into (m, k), unpair m into (i, e), drop k.
// Hits every pair infinitely often.
SchedulePair pair_schedule(uint64_t n);

}  // namespace kf
