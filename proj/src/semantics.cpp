#include "kf/semantics.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace kf {

GroundAtom parse_fact(std::string_view text) {
  auto lp = text.find('(');
  if (lp == std::string_view::npos) return {std::string(text), {}};
  if (text.back() != ')') throw JsonError("malformed fact: " + std::string(text));
  GroundAtom a;
  a.pred = std::string(text.substr(0, lp));
  std::string_view inner = text.substr(lp + 1, text.size() - lp - 2);
  size_t start = 0;
  while (start <= inner.size() && !inner.empty()) {
    size_t comma = inner.find(',', start);
    std::string_view piece =
        comma == std::string_view::npos ? inner.substr(start) : inner.substr(start, comma - start);
    size_t b = piece.find_first_not_of(" \t");
    size_t e = piece.find_last_not_of(" \t");
    if (b == std::string_view::npos) throw JsonError("malformed fact: " + std::string(text));
    a.elems.emplace_back(piece.substr(b, e - b + 1));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return a;
}

std::string print_fact(const GroundAtom& a) {
  if (a.elems.empty()) return a.pred;
  std::string out = a.pred + "(";
  for (size_t i = 0; i < a.elems.size(); ++i) {
    if (i) out += ",";
    out += a.elems[i];
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Shared evaluation core
// ---------------------------------------------------------------------------

namespace {

std::string resolve_const(const std::map<std::string, std::string>& constants,
                          const std::vector<std::string>& domain, const std::string& name) {
  auto it = constants.find(name);
  if (it != constants.end()) return it->second;
  // L^M expansion: domain elements name themselves
  if (std::find(domain.begin(), domain.end(), name) != domain.end()) return name;
  throw EvalError("unknown constant '" + name + "'");
}

template <typename Model>
GroundAtom ground_atom(const Model& m, const FormulaPtr& f) {
  GroundAtom a;
  a.pred = f->label;
  for (const auto& t : f->args) {
    if (t.sort == Term::Sort::Var) throw EvalError("free variable '" + t.name + "' in evaluation");
    a.elems.push_back(resolve_const(m.constants, m.domain, t.name));
  }
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// KripkeModel
// ---------------------------------------------------------------------------

void KripkeModel::validate() const {
  if (worlds.empty()) throw JsonError("model must have at least one world");
  if (domain.empty()) throw JsonError("model domain must be nonempty");
  if (successors.size() != worlds.size()) throw JsonError("malformed successor table");
  for (const auto& [c, d] : constants)
    if (std::find(domain.begin(), domain.end(), d) == domain.end())
      throw JsonError("constant '" + c + "' maps outside the domain");
}

namespace {

struct KripkeEvaluator {
  const KripkeModel& m;
  std::unordered_map<FormulaPtr, std::vector<int8_t>, FormulaHash, FormulaEq> memo;

  const std::vector<int8_t>& row(const FormulaPtr& f) {
    auto it = memo.find(f);
    if (it != memo.end()) return it->second;
    std::vector<int8_t> vals(m.worlds.size(), 0);
    switch (f->kind) {
      case Kind::Atom: {
        GroundAtom a = ground_atom(m, f);
        for (size_t w = 0; w < m.worlds.size(); ++w) vals[w] = m.worlds[w].holds(a);
        break;
      }
      case Kind::Not: {
        const auto& sub = row(f->left);
        for (size_t w = 0; w < vals.size(); ++w) vals[w] = !sub[w];
        break;
      }
      case Kind::And: {
        const auto& a = row(f->left);
        const auto& b = row(f->right);
        for (size_t w = 0; w < vals.size(); ++w) vals[w] = a[w] && b[w];
        break;
      }
      case Kind::Exists: {
        for (const auto& d : m.domain) {
          const auto& sub = row(substitute(f->left, f->label, Term::constant(d)));
          for (size_t w = 0; w < vals.size(); ++w) vals[w] = vals[w] || sub[w];
        }
        break;
      }
      case Kind::Dia: {
        const auto& sub = row(f->left);
        for (size_t w = 0; w < vals.size(); ++w) {
          for (uint32_t s : m.successors[w])
            if (sub[s]) {
              vals[w] = 1;
              break;
            }
        }
        break;
      }
      case Kind::Box: {
        const auto& sub = row(f->left);
        for (size_t w = 0; w < vals.size(); ++w) {
          vals[w] = 1;
          for (uint32_t s : m.successors[w])
            if (!sub[s]) {
              vals[w] = 0;
              break;
            }
        }
        break;
      }
    }
    return memo.emplace(f, std::move(vals)).first->second;
  }
};

}  // namespace

bool eval(const KripkeModel& m, uint32_t world, const FormulaPtr& f) {
  if (world >= m.worlds.size()) throw EvalError("world index out of range");
  KripkeEvaluator ev{m, {}};
  return ev.row(f)[world];
}

bool global_truth(const KripkeModel& m, const FormulaPtr& f) {
  KripkeEvaluator ev{m, {}};
  const auto& r = ev.row(f);
  return std::all_of(r.begin(), r.end(), [](int8_t v) { return v != 0; });
}

std::string KripkeModel::to_dot() const {
  std::ostringstream os;
  os << "digraph model {\n  rankdir=LR;\n";
  for (size_t w = 0; w < worlds.size(); ++w) {
    os << "  w" << w << " [shape=box,label=\"w" << w;
    for (const auto& a : worlds[w].facts) os << "\\n" << print_fact(a);
    os << "\"];\n";
  }
  for (size_t w = 0; w < worlds.size(); ++w)
    for (uint32_t s : successors[w]) os << "  w" << w << " -> w" << s << ";\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// LassoModel
// ---------------------------------------------------------------------------

std::string to_string(const Pos& p) {
  return (p.part == Pos::Part::Prefix ? "prefix:" : "loop:") + std::to_string(p.index);
}

void LassoModel::validate() const {
  if (loop.empty()) throw JsonError("lasso loop must be nonempty");
  if (domain.empty()) throw JsonError("lasso domain must be nonempty");
  for (const auto& [c, d] : constants)
    if (std::find(domain.begin(), domain.end(), d) == domain.end())
      throw JsonError("constant '" + c + "' maps outside the domain");
}

std::vector<Pos> LassoModel::all_positions() const {
  std::vector<Pos> out;
  for (uint32_t i = 0; i < prefix.size(); ++i) out.push_back(Pos::prefix(i));
  for (uint32_t i = 0; i < loop.size(); ++i) out.push_back(Pos::loop(i));
  return out;
}

const WorldFacts& LassoModel::at(const Pos& p) const {
  if (p.part == Pos::Part::Prefix) return prefix.at(p.index);
  return loop.at(p.index);
}

LassoEvaluator::LassoEvaluator(const LassoModel& m) : m_(m) {}

uint32_t LassoEvaluator::flat(const Pos& p) const {
  return p.part == Pos::Part::Prefix ? p.index
                                     : static_cast<uint32_t>(m_.prefix.size()) + p.index;
}

const std::vector<int8_t>& LassoEvaluator::row(const FormulaPtr& f) {
  auto it = memo_.find(f);
  if (it != memo_.end()) return it->second;
  const uint32_t P = static_cast<uint32_t>(m_.prefix.size());
  const uint32_t L = static_cast<uint32_t>(m_.loop.size());
  std::vector<int8_t> vals(P + L, 0);
  switch (f->kind) {
    case Kind::Atom: {
      GroundAtom a = ground_atom(m_, f);
      for (uint32_t q = 0; q < P; ++q) vals[q] = m_.prefix[q].holds(a);
      for (uint32_t q = 0; q < L; ++q) vals[P + q] = m_.loop[q].holds(a);
      break;
    }
    case Kind::Not: {
      const auto& sub = row(f->left);
      for (size_t q = 0; q < vals.size(); ++q) vals[q] = !sub[q];
      break;
    }
    case Kind::And: {
      const auto& a = row(f->left);
      const auto& b = row(f->right);
      for (size_t q = 0; q < vals.size(); ++q) vals[q] = a[q] && b[q];
      break;
    }
    case Kind::Exists: {
      for (const auto& d : m_.domain) {
        const auto& sub = row(substitute(f->left, f->label, Term::constant(d)));
        for (size_t q = 0; q < vals.size(); ++q) vals[q] = vals[q] || sub[q];
      }
      break;
    }
    case Kind::Dia: {
      // Loop positions recur cofinally, so a diamond anywhere sees every loop
      // world; a prefix position additionally sees later prefix positions.
      const auto& sub = row(f->left);
      int8_t in_loop = 0;
      for (uint32_t q = 0; q < L; ++q) in_loop = in_loop || sub[P + q];
      for (uint32_t q = 0; q < L; ++q) vals[P + q] = in_loop;
      int8_t suffix = in_loop;
      for (uint32_t q = P; q-- > 0;) {
        suffix = suffix || sub[q];
        vals[q] = suffix;
      }
      break;
    }
    case Kind::Box: {
      const auto& sub = row(f->left);
      int8_t in_loop = 1;
      for (uint32_t q = 0; q < L; ++q) in_loop = in_loop && sub[P + q];
      for (uint32_t q = 0; q < L; ++q) vals[P + q] = in_loop;
      int8_t suffix = in_loop;
      for (uint32_t q = P; q-- > 0;) {
        suffix = suffix && sub[q];
        vals[q] = suffix;
      }
      break;
    }
  }
  return memo_.emplace(f, std::move(vals)).first->second;
}

bool LassoEvaluator::eval(const Pos& p, const FormulaPtr& f) { return row(f)[flat(p)]; }

bool LassoEvaluator::global(const FormulaPtr& f) {
  const auto& r = row(f);
  return std::all_of(r.begin(), r.end(), [](int8_t v) { return v != 0; });
}

bool eval_lasso(const LassoModel& m, const Pos& p, const FormulaPtr& f) {
  LassoEvaluator ev(m);
  return ev.eval(p, f);
}

bool global_truth(const LassoModel& m, const FormulaPtr& f) {
  LassoEvaluator ev(m);
  return ev.global(f);
}

KripkeModel unroll(const LassoModel& m, uint32_t steps) {
  if (steps < 1) throw EvalError("unroll requires steps >= 1");
  KripkeModel k;
  k.domain = m.domain;
  k.constants = m.constants;
  k.worlds = m.prefix;
  for (uint32_t s = 0; s < steps; ++s)
    for (const auto& w : m.loop) k.worlds.push_back(w);
  uint32_t n = static_cast<uint32_t>(k.worlds.size());
  uint32_t final_copy = n - static_cast<uint32_t>(m.loop.size());
  // Reflexive transitive order on positions, with the final loop copy closed
  // into a cluster. A plain chain cannot match the ω-semantics: its last
  // world satisfies every []g with g true there, so ◇[]g becomes true even
  // when the loop falsifies g infinitely often. With the cluster, every
  // position's modal future projects onto exactly the positions eval_lasso
  // ranges over, and agreement is exact at all positions for all sentences.
  k.successors.resize(n);
  for (uint32_t a = 0; a < n; ++a)
    for (uint32_t b = std::min(a, final_copy); b < n; ++b)
      if (b >= a || b >= final_copy) k.successors[a].push_back(b);
  return k;
}

// ---------------------------------------------------------------------------
// JSON / DOT
// ---------------------------------------------------------------------------

namespace {

std::vector<WorldFacts> worlds_from_json(const nlohmann::json& arr) {
  std::vector<WorldFacts> out;
  for (const auto& w : arr) {
    WorldFacts wf;
    if (w.contains("facts"))
      for (const auto& f : w.at("facts")) wf.facts.insert(parse_fact(f.get<std::string>()));
    out.push_back(std::move(wf));
  }
  return out;
}

nlohmann::ordered_json worlds_to_json(const std::vector<WorldFacts>& ws) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& w : ws) {
    nlohmann::ordered_json facts = nlohmann::ordered_json::array();
    for (const auto& a : w.facts) facts.push_back(print_fact(a));
    arr.push_back({{"facts", facts}});
  }
  return arr;
}

}  // namespace

LassoModel LassoModel::from_json(const nlohmann::json& j) {
  LassoModel m;
  if (j.contains("prefix")) m.prefix = worlds_from_json(j.at("prefix"));
  m.loop = worlds_from_json(j.at("loop"));
  if (j.contains("domain"))
    for (const auto& d : j.at("domain")) m.domain.push_back(d.get<std::string>());
  if (m.domain.empty()) m.domain = {"d0"};
  if (j.contains("constants"))
    for (const auto& [k, v] : j.at("constants").items()) m.constants[k] = v.get<std::string>();
  m.validate();
  return m;
}

nlohmann::ordered_json LassoModel::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["prefix"] = worlds_to_json(prefix);
  j["loop"] = worlds_to_json(loop);
  j["domain"] = domain;
  j["constants"] = constants;
  return j;
}

std::string LassoModel::to_dot() const {
  std::ostringstream os;
  os << "digraph lasso {\n  rankdir=LR;\n";
  auto label = [&](const WorldFacts& w, const std::string& name, const std::string& id) {
    os << "  " << id << " [shape=box,label=\"" << name;
    for (const auto& a : w.facts) os << "\\n" << print_fact(a);
    os << "\"];\n";
  };
  for (size_t i = 0; i < prefix.size(); ++i) label(prefix[i], "p" + std::to_string(i), "p" + std::to_string(i));
  for (size_t i = 0; i < loop.size(); ++i) label(loop[i], "l" + std::to_string(i), "l" + std::to_string(i));
  for (size_t i = 0; i + 1 < prefix.size(); ++i)
    os << "  p" << i << " -> p" << i + 1 << ";\n";
  if (!prefix.empty()) os << "  p" << prefix.size() - 1 << " -> l0;\n";
  for (size_t i = 0; i + 1 < loop.size(); ++i) os << "  l" << i << " -> l" << i + 1 << ";\n";
  os << "  l" << loop.size() - 1 << " -> l0 [style=dashed];\n";
  os << "}\n";
  return os.str();
}

}  // namespace kf
