#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "kf/fkd.hpp"
#include "kf/oracle.hpp"
#include "kf/syntax.hpp"

namespace kf {

enum class Placement : uint8_t { Paper, Conservative };

struct RunFlags {
  Placement placement = Placement::Paper;
  uint32_t append_every = 4;  // append an empty world every K-th skipped stage
};

enum class Branch : uint8_t { Skip, Negate, Exists, Dia, Add };

std::string to_string(Branch b);
std::string to_string(Placement p);

struct StageRecord {
  uint64_t n = 0;
  uint64_t i = 0;
  uint64_t e = 0;
  std::string phi;  // empty for skips
  Branch branch = Branch::Skip;
  bool appended = false;
  std::optional<uint32_t> candidate;          // Dia branch: index chosen
  std::vector<std::string> verdicts;          // oracle verdicts in test order
  std::optional<uint32_t> splice_at;
  uint64_t worlds_after = 0;

  nlohmann::ordered_json to_json() const;
};

// Dia-branch candidate: where the witness sentence lands.
struct DiaCandidate {
  enum class Action : uint8_t { Here, Splice, Existing, Append };
  Action action = Action::Here;
  uint32_t target = 0;  // position for Splice/Existing; world count for Append
};

class ConstructionState {
 public:
  static ConstructionState init(const Theory& t, const SearchBounds& b = {},
                                const OracleOptions& opts = OracleOptions::from_env(),
                                const RunFlags& flags = {});

  StageRecord step_inplace();
  // Replays a recorded stage without consulting the oracle.
  void replay(const StageRecord& rec);
  void replay_skips(uint64_t count, uint64_t appended);

  uint64_t stage() const { return stage_; }
  uint64_t world_count() const { return fkd_.worlds.size() + zone_.size(); }
  uint64_t materialized_count() const { return fkd_.worlds.size(); }
  uint64_t next_henkin() const { return next_henkin_; }
  const Theory& theory() const { return theory_; }
  const RunFlags& flags() const { return flags_; }
  const SearchBounds& bounds() const { return bounds_; }
  const OracleOptions& options() const { return opts_; }
  const SentenceEnumerator& enumerator() const { return *enumerator_; }

  bool world_exists(uint64_t position) const { return position < world_count(); }
  std::optional<uint64_t> world_id_at(uint64_t position) const;
  // Decided outcome for (world at position, sentence index): true = added
  // positively, false = negation added.
  std::optional<bool> decided(uint64_t position, uint64_t e) const;
  // (world_id, sentence index, outcome) for every decided pair.
  std::vector<std::tuple<uint64_t, uint64_t, bool>> decided_pairs() const;

  // Fully materialized copy of the current diagram.
  LinearFKD snapshot() const;
  // Per-world count of position changes caused by interior splices.
  std::unordered_map<uint64_t, uint32_t> position_changes() const;

 private:
  friend class ConstructedModel;

  Theory theory_;
  SearchBounds bounds_;
  OracleOptions opts_;
  RunFlags flags_;
  std::shared_ptr<SentenceEnumerator> enumerator_;

  LinearFKD fkd_;  // materialized worlds
  // Trailing empty worlds, kept virtual: (reserved id, splice epoch at entry).
  std::deque<std::pair<uint64_t, uint32_t>> zone_;
  uint32_t splice_epoch_ = 0;
  uint64_t next_id_ = 0;
  uint64_t stage_ = 0;
  uint64_t noop_count_ = 0;
  uint64_t next_henkin_ = 0;

  struct PairHash {
    size_t operator()(const std::pair<uint64_t, uint64_t>& p) const {
      return std::hash<uint64_t>{}(p.first * 0x9e3779b97f4a7c15ull + p.second);
    }
  };
  std::unordered_map<std::pair<uint64_t, uint64_t>, bool, PairHash> decided_;
  std::unordered_map<uint64_t, uint32_t> position_changes_;

  bool live(uint64_t i, uint64_t e) const;
  void materialize_to(uint64_t position);
  void note_henkin_usage(const FormulaPtr& f);
  void add_to_world(uint32_t position, const FormulaPtr& f);
  void apply_splice(uint32_t position);
  uint64_t dia_candidate_count(uint64_t i) const;
  DiaCandidate dia_candidate_at(uint64_t i, uint64_t idx) const;
  FormulaPtr candidate_psi(uint64_t i, const FormulaPtr& phi, const FormulaPtr& theta,
                           const std::optional<DiaCandidate>& cand) const;
  void apply_dia_candidate(uint64_t i, const FormulaPtr& theta, const DiaCandidate& cand,
                           StageRecord& rec);
  bool consistent_with(const FormulaPtr& psi) const;
};

// Value-semantics step, the operation surface used by tests.
ConstructionState step(const ConstructionState& s);

struct RunResult {
  ConstructionState state;
  std::vector<StageRecord> trace;
};

RunResult run(const Theory& t, uint64_t stages, const SearchBounds& b = {},
              const OracleOptions& opts = OracleOptions::from_env(), const RunFlags& flags = {});

// ---------------------------------------------------------------------------
// The constructed decidable model: a queryable handle over the stage
// machine. Truth queries locate the sentence in the enumeration and drive
// every pair (i' ≤ i, e' ≤ e) to a decision before answering, so later
// stages cannot shift the answer's world.
// ---------------------------------------------------------------------------

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_stage(const StageRecord& rec) = 0;
  virtual void on_skips(uint64_t from, uint64_t count, uint64_t appended) = 0;
};

class ConstructedModel {
 public:
  explicit ConstructedModel(ConstructionState state) : state_(std::move(state)) {}

  bool query_truth(uint64_t world, const FormulaPtr& f, TraceSink* sink = nullptr);
  static bool accessible(uint64_t i, uint64_t j) { return i <= j; }

  const ConstructionState& state() const { return state_; }
  ConstructionState& state() { return state_; }

 private:
  void drive_until_decided(uint64_t i, uint64_t e, TraceSink* sink);
  ConstructionState state_;
};

}  // namespace kf
