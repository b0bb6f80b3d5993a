#include "kf/fkd.hpp"

#include <algorithm>
#include <sstream>

namespace kf {

bool LinearFKD::World::contains(const FormulaPtr& f) const {
  for (const auto& s : sentences)
    if (equal(s, f)) return true;
  return false;
}

void LinearFKD::validate() const {
  uint32_t n = static_cast<uint32_t>(worlds.size());
  std::set<uint64_t> ids;
  for (const auto& w : worlds)
    if (!ids.insert(w.id).second) throw JsonError("duplicate world id in FKD");
  for (uint32_t i = 0; i + 1 < n; ++i)
    if (!relation.count({i, i + 1})) throw JsonError("FKD relation is missing a successor pair");
  for (const auto& [i, j] : relation)
    if (i > j || j >= n) throw JsonError("FKD relation pair outside the upper triangle");
}

std::optional<uint32_t> LinearFKD::position_of(uint64_t world_id) const {
  for (uint32_t i = 0; i < worlds.size(); ++i)
    if (worlds[i].id == world_id) return i;
  return std::nullopt;
}

LinearFKD LinearFKD::single_empty_world() {
  LinearFKD d;
  d.worlds.push_back({0, {}});
  d.next_world_id = 1;
  return d;
}

LinearFKD add_sentence(const LinearFKD& d, uint32_t i, const FormulaPtr& f) {
  if (i >= d.worlds.size()) throw EvalError("add_sentence: position out of range");
  LinearFKD out = d;
  if (!out.worlds[i].contains(f)) out.worlds[i].sentences.push_back(f);
  return out;
}

LinearFKD splice_world(const LinearFKD& d, uint32_t i) {
  uint32_t n = static_cast<uint32_t>(d.worlds.size());
  if (i > n) throw EvalError("splice_world: position out of range");
  LinearFKD out;
  out.next_world_id = d.next_world_id + 1;
  out.worlds.reserve(n + 1);
  for (uint32_t k = 0; k < i; ++k) out.worlds.push_back(d.worlds[k]);
  out.worlds.push_back({d.next_world_id, {}});
  for (uint32_t k = i; k < n; ++k) out.worlds.push_back(d.worlds[k]);
  auto shift = [i](uint32_t k) { return k >= i ? k + 1 : k; };
  for (uint32_t k = 0; k + 1 <= n; ++k) out.relation.insert({k, k + 1});
  for (const auto& [a, b] : d.relation) out.relation.insert({shift(a), shift(b)});
  return out;
}

namespace {

FormulaPtr conjoin(const std::vector<FormulaPtr>& parts, const Signature& sig) {
  if (parts.empty()) return top_sentence(sig);
  FormulaPtr acc = parts.back();
  for (size_t k = parts.size() - 1; k-- > 0;) acc = Formula::and_(parts[k], acc);
  return acc;
}

}  // namespace

FormulaPtr representing_formula(const LinearFKD& d, const Signature& sig) {
  if (d.worlds.empty()) return top_sentence(sig);
  uint32_t n = static_cast<uint32_t>(d.worlds.size());
  std::vector<FormulaPtr> psi(n);
  for (uint32_t i = n; i-- > 0;) {
    std::vector<FormulaPtr> parts = d.worlds[i].sentences;
    for (const auto& [a, b] : d.relation)
      if (a == i && b > i) parts.push_back(Formula::dia(psi[b]));
    psi[i] = conjoin(parts, sig);
  }
  return psi[0];
}

FormulaPtr collapsed_representing_formula(const LinearFKD& d, const Signature& sig) {
  // Over reflexive transitive frames every skip edge is entailed by the
  // successor chain, nested diamonds over empty worlds flatten to one, and
  // trailing ◇true conjuncts drop, so only the chain of nonempty worlds
  // matters (with a single leading diamond when the diagram starts empty).
  FormulaPtr acc;
  size_t first_content = d.worlds.size();
  for (size_t i = d.worlds.size(); i-- > 0;) {
    const auto& w = d.worlds[i];
    if (w.sentences.empty()) continue;
    first_content = i;
    std::vector<FormulaPtr> parts = w.sentences;
    if (acc) parts.push_back(Formula::dia(acc));
    acc = conjoin(parts, sig);
  }
  if (!acc) return top_sentence(sig);
  return first_content > 0 ? Formula::dia(acc) : acc;
}

bool is_T_consistent(const LinearFKD& d, const Theory& t, const SearchBounds& b,
                     const OracleOptions& opts) {
  FormulaPtr psi = collapsed_representing_formula(d, t.sig);
  VerdictKind v = entails_linear_decision(t, Formula::not_(psi), b, opts);
  switch (v) {
    case VerdictKind::Countermodel: return true;
    case VerdictKind::Valid: return false;
    case VerdictKind::Exhausted:
      if (opts.strict) throw OracleExhausted("consistency check exhausted its bounds");
      return false;  // treated as Valid: no witnessing model found
  }
  return false;
}

Pos WitnessMap::to_model_pos(const LassoModel& m, uint32_t virtual_pos) {
  uint32_t P = static_cast<uint32_t>(m.prefix.size());
  uint32_t L = static_cast<uint32_t>(m.loop.size());
  if (virtual_pos < P) return Pos::prefix(virtual_pos);
  return Pos::loop((virtual_pos - P) % L);
}

nlohmann::ordered_json WitnessMap::to_json(const LassoModel& m) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [id, vp] : assignment) {
    Pos p = to_model_pos(m, vp);
    j[std::to_string(id)] = {{"part", p.part == Pos::Part::Prefix ? "prefix" : "loop"},
                             {"index", p.index},
                             {"virtual", vp}};
  }
  return j;
}

std::optional<WitnessMap> find_witness(const LinearFKD& d, const LassoModel& m) {
  uint32_t n = static_cast<uint32_t>(d.worlds.size());
  if (n == 0) return WitnessMap{};
  uint32_t P = static_cast<uint32_t>(m.prefix.size());
  uint32_t L = static_cast<uint32_t>(m.loop.size());
  uint32_t horizon = P + L * (n + 1);

  // Truth of each world's sentence set at each virtual position.
  LassoEvaluator ev(m);
  std::vector<std::vector<char>> ok(n, std::vector<char>(horizon, 1));
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t q = 0; q < horizon; ++q) {
      Pos p = WitnessMap::to_model_pos(m, q);
      for (const auto& s : d.worlds[i].sentences)
        if (!ev.eval(p, s)) {
          ok[i][q] = 0;
          break;
        }
    }

  // The successor pairs chain every world, so the relation constraints
  // amount to a non-decreasing assignment; the greedy leftmost choice is the
  // lexicographically least witness and exists iff any does.
  WitnessMap w;
  uint32_t at = 0;
  for (uint32_t i = 0; i < n; ++i) {
    while (at < horizon && !ok[i][at]) ++at;
    if (at >= horizon) return std::nullopt;
    w.assignment[d.worlds[i].id] = at;
  }
  return w;
}

// ---------------------------------------------------------------------------
// JSON / DOT
// ---------------------------------------------------------------------------

LinearFKD LinearFKD::from_json(const nlohmann::json& j, const Signature& sig) {
  LinearFKD d;
  uint64_t max_id = 0;
  for (const auto& w : j.at("worlds")) {
    World world;
    world.id = w.at("id").get<uint64_t>();
    max_id = std::max(max_id, world.id + 1);
    if (w.contains("sentences"))
      for (const auto& s : w.at("sentences")) {
        FormulaPtr f = parse(s.get<std::string>(), sig);
        if (!world.contains(f)) world.sentences.push_back(f);
      }
    d.worlds.push_back(std::move(world));
  }
  for (uint32_t i = 0; i + 1 < d.worlds.size(); ++i) d.relation.insert({i, i + 1});
  if (j.contains("relation"))
    for (const auto& pr : j.at("relation"))
      d.relation.insert({pr.at(0).get<uint32_t>(), pr.at(1).get<uint32_t>()});
  d.next_world_id = max_id;
  d.validate();
  return d;
}

nlohmann::ordered_json LinearFKD::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["worlds"] = nlohmann::ordered_json::array();
  for (const auto& w : worlds) {
    nlohmann::ordered_json sentences = nlohmann::ordered_json::array();
    for (const auto& s : w.sentences) sentences.push_back(print(s));
    j["worlds"].push_back({{"id", w.id}, {"sentences", sentences}});
  }
  j["relation"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : relation) j["relation"].push_back({a, b});
  return j;
}

std::string LinearFKD::to_dot() const {
  std::ostringstream os;
  os << "digraph fkd {\n  rankdir=LR;\n";
  for (uint32_t i = 0; i < worlds.size(); ++i) {
    os << "  w" << i << " [shape=box,label=\"w" << i << " (id " << worlds[i].id << ")";
    for (const auto& s : worlds[i].sentences) os << "\\n" << print(s);
    os << "\"];\n";
  }
  for (const auto& [a, b] : relation) os << "  w" << a << " -> w" << b << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace kf
