#include "kf/henkin.hpp"

#include <algorithm>

namespace kf {

std::string to_string(Branch b) {
  switch (b) {
    case Branch::Skip: return "skip";
    case Branch::Negate: return "negate";
    case Branch::Exists: return "exists";
    case Branch::Dia: return "dia";
    case Branch::Add: return "add";
  }
  return "?";
}

std::string to_string(Placement p) {
  return p == Placement::Paper ? "paper" : "conservative";
}

nlohmann::ordered_json StageRecord::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["record"] = "stage";
  j["n"] = n;
  j["i"] = i;
  j["e"] = e;
  j["branch"] = to_string(branch);
  if (branch == Branch::Skip) {
    j["appended"] = appended;
  } else {
    j["phi"] = phi;
    if (candidate) j["candidate"] = *candidate;
    if (!verdicts.empty()) j["verdicts"] = verdicts;
    if (splice_at) j["splice_at"] = *splice_at;
  }
  j["worlds"] = worlds_after;
  return j;
}

// ---------------------------------------------------------------------------
// ConstructionState
// ---------------------------------------------------------------------------

ConstructionState ConstructionState::init(const Theory& t, const SearchBounds& b,
                                          const OracleOptions& opts, const RunFlags& flags) {
  ConstructionState s;
  s.theory_ = t;
  s.bounds_ = b;
  s.opts_ = opts;
  s.flags_ = flags;
  s.enumerator_ = std::make_shared<SentenceEnumerator>(t.sig);
  s.fkd_ = LinearFKD::single_empty_world();
  s.next_id_ = 1;
  for (const auto& ax : t.axioms) s.note_henkin_usage(ax);

  if (!t.axioms.empty()) {
    FormulaPtr conj = t.axioms.front();
    for (size_t k = 1; k < t.axioms.size(); ++k) conj = Formula::and_(conj, t.axioms[k]);
    VerdictKind v = entails_linear_decision(t, Formula::not_(conj), b, opts);
    if (v == VerdictKind::Valid)
      throw InconsistentTheory("theory has no discrete linear model within bounds");
    if (v == VerdictKind::Exhausted && opts.strict)
      throw OracleExhausted("theory consistency pre-check exhausted its bounds");
  }
  return s;
}

std::optional<uint64_t> ConstructionState::world_id_at(uint64_t position) const {
  if (position < fkd_.worlds.size()) return fkd_.worlds[position].id;
  if (position < world_count()) return zone_[position - fkd_.worlds.size()].first;
  return std::nullopt;
}

std::optional<bool> ConstructionState::decided(uint64_t position, uint64_t e) const {
  auto id = world_id_at(position);
  if (!id) return std::nullopt;
  auto it = decided_.find({*id, e});
  if (it == decided_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::tuple<uint64_t, uint64_t, bool>> ConstructionState::decided_pairs() const {
  std::vector<std::tuple<uint64_t, uint64_t, bool>> out;
  out.reserve(decided_.size());
  for (const auto& [key, positive] : decided_) out.emplace_back(key.first, key.second, positive);
  std::sort(out.begin(), out.end());
  return out;
}

bool ConstructionState::live(uint64_t i, uint64_t e) const {
  if (i >= world_count()) return false;
  if (i < fkd_.worlds.size() && decided_.count({fkd_.worlds[i].id, e})) return false;
  return true;
}

void ConstructionState::materialize_to(uint64_t position) {
  while (fkd_.worlds.size() <= position && !zone_.empty()) {
    auto [id, entry_epoch] = zone_.front();
    zone_.pop_front();
    if (splice_epoch_ > entry_epoch) position_changes_[id] += splice_epoch_ - entry_epoch;
    fkd_.worlds.push_back({id, {}});
    if (fkd_.worlds.size() >= 2)
      fkd_.relation.insert({static_cast<uint32_t>(fkd_.worlds.size() - 2),
                            static_cast<uint32_t>(fkd_.worlds.size() - 1)});
  }
}

void ConstructionState::note_henkin_usage(const FormulaPtr& f) {
  if (f->kind == Kind::Atom) {
    for (const auto& t : f->args)
      if (t.sort == Term::Sort::Const)
        if (auto k = theory_.sig.henkin_index(t.name))
          next_henkin_ = std::max(next_henkin_, *k + 1);
    return;
  }
  if (f->left) note_henkin_usage(f->left);
  if (f->right) note_henkin_usage(f->right);
}

void ConstructionState::add_to_world(uint32_t position, const FormulaPtr& f) {
  materialize_to(position);
  auto& w = fkd_.worlds[position];
  if (!w.contains(f)) w.sentences.push_back(f);
  note_henkin_usage(f);
}

void ConstructionState::apply_splice(uint32_t position) {
  fkd_.next_world_id = next_id_;
  for (uint32_t q = position; q < fkd_.worlds.size(); ++q)
    position_changes_[fkd_.worlds[q].id] += 1;
  splice_epoch_ += 1;  // zone residents all shift; settled on materialization
  fkd_ = splice_world(fkd_, position);
  next_id_ = fkd_.next_world_id;
}

std::unordered_map<uint64_t, uint32_t> ConstructionState::position_changes() const {
  std::unordered_map<uint64_t, uint32_t> out = position_changes_;
  for (const auto& [id, entry_epoch] : zone_)
    if (splice_epoch_ > entry_epoch) out[id] += splice_epoch_ - entry_epoch;
  return out;
}

uint64_t ConstructionState::dia_candidate_count(uint64_t i) const {
  uint64_t p = world_count() - 1;
  return 2 + 2 * (p - i);  // theta-here, (splice, existing) per target, append
}

// Candidate order. Paper placement: theta into w_i, then per target position
// splice-then-existing, then the final append. Conservative placement:
// existing worlds first, append next, interior splices last.
DiaCandidate ConstructionState::dia_candidate_at(uint64_t i, uint64_t idx) const {
  uint64_t p = world_count() - 1;
  uint64_t span = p - i;
  if (idx == 0) return {DiaCandidate::Action::Here, static_cast<uint32_t>(i)};
  if (flags_.placement == Placement::Paper) {
    if (idx <= 2 * span) {
      uint64_t k = idx - 1;
      uint32_t t = static_cast<uint32_t>(i + 1 + k / 2);
      return {k % 2 == 0 ? DiaCandidate::Action::Splice : DiaCandidate::Action::Existing, t};
    }
    return {DiaCandidate::Action::Append, static_cast<uint32_t>(p + 1)};
  }
  if (idx <= span)
    return {DiaCandidate::Action::Existing, static_cast<uint32_t>(i + idx)};
  if (idx == span + 1) return {DiaCandidate::Action::Append, static_cast<uint32_t>(p + 1)};
  return {DiaCandidate::Action::Splice, static_cast<uint32_t>(i + (idx - span - 1))};
}

// Collapsed representing formula of the candidate diagram, assembled without
// copying the FKD. Zone worlds are empty and fold away.
FormulaPtr ConstructionState::candidate_psi(uint64_t i, const FormulaPtr& phi,
                                            const FormulaPtr& theta,
                                            const std::optional<DiaCandidate>& cand) const {
  struct Slot {
    const std::vector<FormulaPtr>* base = nullptr;
    std::vector<FormulaPtr> extra;
  };
  // Build slots in position order: materialized worlds, with the candidate's
  // new world inserted at its target position when it lies in range.
  std::vector<Slot> slots;
  uint64_t m = fkd_.worlds.size();
  auto push_new_world = [&]() {
    Slot s;
    s.extra.push_back(theta);
    slots.push_back(std::move(s));
  };
  for (uint64_t q = 0; q <= m; ++q) {
    if (cand && cand->action == DiaCandidate::Action::Splice && cand->target == q)
      push_new_world();
    if (q == m) break;
    Slot s;
    s.base = &fkd_.worlds[q].sentences;
    if (q == i) s.extra.push_back(phi);
    if (cand && cand->action == DiaCandidate::Action::Here && q == i) s.extra.push_back(theta);
    if (cand && cand->action == DiaCandidate::Action::Existing && cand->target == q)
      s.extra.push_back(theta);
    slots.push_back(std::move(s));
  }
  // Targets beyond the materialized range land among empty zone worlds;
  // content-wise that is a trailing theta-world.
  if (cand &&
      ((cand->action == DiaCandidate::Action::Splice && cand->target > m) ||
       (cand->action == DiaCandidate::Action::Existing && cand->target >= m) ||
       cand->action == DiaCandidate::Action::Append))
    push_new_world();

  FormulaPtr acc;
  const Signature& sig = theory_.sig;
  for (size_t q = slots.size(); q-- > 0;) {
    const Slot& s = slots[q];
    size_t content = (s.base ? s.base->size() : 0) + s.extra.size();
    if (content == 0) continue;
    std::vector<FormulaPtr> parts;
    parts.reserve(content + 1);
    if (s.base) parts.insert(parts.end(), s.base->begin(), s.base->end());
    parts.insert(parts.end(), s.extra.begin(), s.extra.end());
    if (acc) parts.push_back(Formula::dia(acc));
    FormulaPtr conj = parts.back();
    for (size_t k = parts.size() - 1; k-- > 0;) conj = Formula::and_(parts[k], conj);
    acc = conj;
  }
  return acc ? acc : top_sentence(sig);
}

bool ConstructionState::consistent_with(const FormulaPtr& psi) const {
  VerdictKind v = entails_linear_decision(theory_, Formula::not_(psi), bounds_, opts_);
  if (v == VerdictKind::Exhausted) {
    if (opts_.strict) throw OracleExhausted("stage consistency test exhausted its bounds");
    return false;
  }
  return v == VerdictKind::Countermodel;
}

void ConstructionState::apply_dia_candidate(uint64_t i, const FormulaPtr& theta,
                                            const DiaCandidate& cand, StageRecord& rec) {
  switch (cand.action) {
    case DiaCandidate::Action::Here:
      add_to_world(static_cast<uint32_t>(i), theta);
      break;
    case DiaCandidate::Action::Splice: {
      uint32_t t = cand.target;
      if (t > fkd_.worlds.size()) materialize_to(t - 1);
      apply_splice(t);
      add_to_world(t, theta);
      rec.splice_at = t;
      break;
    }
    case DiaCandidate::Action::Existing:
      add_to_world(cand.target, theta);
      break;
    case DiaCandidate::Action::Append: {
      uint32_t t = static_cast<uint32_t>(world_count());
      materialize_to(t - 1);
      apply_splice(t);
      add_to_world(t, theta);
      rec.splice_at = t;
      break;
    }
  }
}

StageRecord ConstructionState::step_inplace() {
  StageRecord rec;
  rec.n = stage_;
  SchedulePair pe = pair_schedule(stage_);
  rec.i = pe.i;
  rec.e = pe.e;

  if (!live(pe.i, pe.e)) {
    rec.branch = Branch::Skip;
    noop_count_ += 1;
    if (noop_count_ % flags_.append_every == 0) {
      zone_.push_back({next_id_++, splice_epoch_});
      rec.appended = true;
    }
    stage_ += 1;
    rec.worlds_after = world_count();
    return rec;
  }

  materialize_to(pe.i);
  uint64_t wid = fkd_.worlds[pe.i].id;
  FormulaPtr phi = enumerator_->nth(pe.e);
  rec.phi = print(phi);

  FormulaPtr with_phi = candidate_psi(pe.i, phi, nullptr, std::nullopt);
  bool ok = consistent_with(with_phi);
  rec.verdicts.push_back(ok ? "countermodel" : "valid");

  if (!ok) {
    rec.branch = Branch::Negate;
    add_to_world(static_cast<uint32_t>(pe.i), Formula::not_(phi));
    decided_[{wid, pe.e}] = false;
  } else if (phi->kind == Kind::Exists) {
    rec.branch = Branch::Exists;
    FormulaPtr witness =
        substitute(phi->left, phi->label, Term::constant(theory_.sig.henkin_name(next_henkin_)));
    next_henkin_ += 1;
    add_to_world(static_cast<uint32_t>(pe.i), phi);
    add_to_world(static_cast<uint32_t>(pe.i), witness);
    decided_[{wid, pe.e}] = true;
  } else if (phi->kind == Kind::Dia) {
    rec.branch = Branch::Dia;
    FormulaPtr theta = phi->left;
    uint64_t count = dia_candidate_count(pe.i);
    bool placed = false;
    for (uint64_t c = 0; c < count; ++c) {
      DiaCandidate cand = dia_candidate_at(pe.i, c);
      FormulaPtr psi = candidate_psi(pe.i, phi, theta, cand);
      bool good = consistent_with(psi);
      rec.verdicts.push_back(good ? "countermodel" : "valid");
      if (good) {
        rec.candidate = static_cast<uint32_t>(c);
        add_to_world(static_cast<uint32_t>(pe.i), phi);
        apply_dia_candidate(pe.i, theta, cand, rec);
        decided_[{wid, pe.e}] = true;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw EvalError("internal: no diamond candidate was consistent at stage " +
                      std::to_string(stage_));
  } else {
    rec.branch = Branch::Add;
    add_to_world(static_cast<uint32_t>(pe.i), phi);
    decided_[{wid, pe.e}] = true;
  }

  stage_ += 1;
  rec.worlds_after = world_count();
  return rec;
}

void ConstructionState::replay(const StageRecord& rec) {
  if (rec.n != stage_) throw JsonError("trace replay out of order");
  if (rec.branch == Branch::Skip) {
    noop_count_ += 1;
    if (rec.appended != (noop_count_ % flags_.append_every == 0))
      throw JsonError("trace replay diverged on an append");
    if (rec.appended) zone_.push_back({next_id_++, splice_epoch_});
    stage_ += 1;
    return;
  }
  SchedulePair pe = pair_schedule(stage_);
  materialize_to(pe.i);
  uint64_t wid = fkd_.worlds[pe.i].id;
  FormulaPtr phi = enumerator_->nth(pe.e);
  StageRecord scratch;
  switch (rec.branch) {
    case Branch::Negate:
      add_to_world(static_cast<uint32_t>(pe.i), Formula::not_(phi));
      decided_[{wid, pe.e}] = false;
      break;
    case Branch::Exists: {
      FormulaPtr witness =
          substitute(phi->left, phi->label, Term::constant(theory_.sig.henkin_name(next_henkin_)));
      next_henkin_ += 1;
      add_to_world(static_cast<uint32_t>(pe.i), phi);
      add_to_world(static_cast<uint32_t>(pe.i), witness);
      decided_[{wid, pe.e}] = true;
      break;
    }
    case Branch::Dia: {
      if (!rec.candidate) throw JsonError("dia stage record lacks a candidate index");
      if (*rec.candidate >= dia_candidate_count(pe.i))
        throw JsonError("candidate index out of range");
      add_to_world(static_cast<uint32_t>(pe.i), phi);
      apply_dia_candidate(pe.i, phi->left, dia_candidate_at(pe.i, *rec.candidate), scratch);
      decided_[{wid, pe.e}] = true;
      break;
    }
    case Branch::Add:
      add_to_world(static_cast<uint32_t>(pe.i), phi);
      decided_[{wid, pe.e}] = true;
      break;
    case Branch::Skip: break;
  }
  stage_ += 1;
}

void ConstructionState::replay_skips(uint64_t count, uint64_t appended) {
  uint64_t appends = 0;
  for (uint64_t k = 0; k < count; ++k) {
    noop_count_ += 1;
    if (noop_count_ % flags_.append_every == 0) {
      zone_.push_back({next_id_++, splice_epoch_});
      ++appends;
    }
  }
  stage_ += count;
  if (appends != appended) throw JsonError("trace replay diverged on skip appends");
}

LinearFKD ConstructionState::snapshot() const {
  LinearFKD d = fkd_;
  for (const auto& [id, entry_epoch] : zone_) {
    d.worlds.push_back({id, {}});
    if (d.worlds.size() >= 2)
      d.relation.insert({static_cast<uint32_t>(d.worlds.size() - 2),
                         static_cast<uint32_t>(d.worlds.size() - 1)});
  }
  d.next_world_id = next_id_;
  return d;
}

ConstructionState step(const ConstructionState& s) {
  ConstructionState out = s;
  out.step_inplace();
  return out;
}

RunResult run(const Theory& t, uint64_t stages, const SearchBounds& b, const OracleOptions& opts,
              const RunFlags& flags) {
  RunResult r{ConstructionState::init(t, b, opts, flags), {}};
  r.trace.reserve(stages);
  for (uint64_t n = 0; n < stages; ++n) r.trace.push_back(r.state.step_inplace());
  return r;
}

// ---------------------------------------------------------------------------
// ConstructedModel
// ---------------------------------------------------------------------------

void ConstructedModel::drive_until_decided(uint64_t i, uint64_t e, TraceSink* sink) {
  uint64_t skip_from = state_.stage();
  uint64_t skips = 0;
  uint64_t appends = 0;
  auto flush = [&]() {
    if (skips && sink) sink->on_skips(skip_from, skips, appends);
    skips = 0;
    appends = 0;
  };
  while (true) {
    if (i < state_.materialized_count())
      if (state_.decided(i, e)) break;
    SchedulePair pe = pair_schedule(state_.stage());
    if (!state_.live(pe.i, pe.e)) {
      // Inline the skip branch; the record is run-length compressed.
      state_.noop_count_ += 1;
      if (state_.noop_count_ % state_.flags_.append_every == 0) {
        state_.zone_.push_back({state_.next_id_++, state_.splice_epoch_});
        ++appends;
      }
      state_.stage_ += 1;
      ++skips;
      continue;
    }
    flush();
    StageRecord rec = state_.step_inplace();
    if (sink) sink->on_stage(rec);
    skip_from = state_.stage();
  }
  flush();
}

bool ConstructedModel::query_truth(uint64_t world, const FormulaPtr& f, TraceSink* sink) {
  auto e = state_.enumerator_->index_of(f);
  if (!e) throw EvalError("formula is not a sentence over the construction's language");
  // Conservative stabilization: decide every earlier pair that could still
  // splice below the queried world before reading the answer.
  for (uint64_t i2 = 0; i2 <= world; ++i2)
    for (uint64_t e2 = 0; e2 <= *e; ++e2) drive_until_decided(i2, e2, sink);
  auto v = state_.decided(world, *e);
  if (!v) throw EvalError("internal: queried pair is undecided after driving");
  return *v;
}

}  // namespace kf
