#include "kf/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_set>

namespace kf {

// ---------------------------------------------------------------------------
// Signature
// ---------------------------------------------------------------------------

void Signature::validate() const {
  std::set<std::string> seen;
  auto claim = [&](const std::string& n, const char* what) {
    if (n.empty()) throw SignatureError(std::string(what) + " with empty name");
    if (n == "true" || n == "false" || n == "exists" || n == "forall")
      throw SignatureError("reserved word used as " + std::string(what) + ": " + n);
    if (!seen.insert(n).second) throw SignatureError("duplicate symbol: " + n);
  };
  for (const auto& p : predicates) claim(p.name, "predicate");
  for (const auto& c : base_constants) {
    claim(c, "constant");
    if (henkin_index(c)) throw SignatureError("constant collides with Henkin pool: " + c);
  }
  for (const auto& p : predicates)
    if (henkin_index(p.name)) throw SignatureError("predicate collides with Henkin pool: " + p.name);
}

const Predicate* Signature::find_predicate(std::string_view name) const {
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

bool Signature::is_base_constant(std::string_view name) const {
  return std::find(base_constants.begin(), base_constants.end(), name) != base_constants.end();
}

std::optional<uint64_t> Signature::henkin_index(std::string_view name) const {
  if (name.size() <= henkin_prefix.size()) return std::nullopt;
  if (name.substr(0, henkin_prefix.size()) != henkin_prefix) return std::nullopt;
  std::string_view digits = name.substr(henkin_prefix.size());
  uint64_t k = 0;
  for (char ch : digits) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return std::nullopt;
    k = k * 10 + static_cast<uint64_t>(ch - '0');
  }
  if (digits.size() > 1 && digits[0] == '0') return std::nullopt;  // no leading zeros
  return k;
}

std::string Signature::henkin_name(uint64_t k) const { return henkin_prefix + std::to_string(k); }

bool Signature::is_constant(std::string_view name) const {
  return is_base_constant(name) || henkin_index(name).has_value();
}

Signature Signature::from_json(const nlohmann::json& j) {
  Signature sig;
  if (!j.is_object()) throw JsonError("signature: expected object");
  if (j.contains("predicates")) {
    for (const auto& p : j.at("predicates")) {
      sig.predicates.push_back({p.at("name").get<std::string>(), p.at("arity").get<uint32_t>()});
    }
  }
  if (j.contains("constants"))
    for (const auto& c : j.at("constants")) sig.base_constants.push_back(c.get<std::string>());
  if (j.contains("henkin_prefix")) sig.henkin_prefix = j.at("henkin_prefix").get<std::string>();
  sig.validate();
  return sig;
}

nlohmann::ordered_json Signature::to_json() const {
  nlohmann::ordered_json j;
  j["predicates"] = nlohmann::ordered_json::array();
  for (const auto& p : predicates) j["predicates"].push_back({{"name", p.name}, {"arity", p.arity}});
  j["constants"] = base_constants;
  j["henkin_prefix"] = henkin_prefix;
  return j;
}

// ---------------------------------------------------------------------------
// Formula construction
// ---------------------------------------------------------------------------

namespace {

size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)); }

size_t hash_string(const std::string& s) { return std::hash<std::string>{}(s); }

}  // namespace

FormulaPtr make_node(Formula&& f) {
  size_t h = static_cast<size_t>(f.kind);
  uint32_t nodes = 1;
  uint32_t depth = 0;
  h = mix(h, hash_string(f.label));
  for (const auto& t : f.args) {
    h = mix(h, static_cast<size_t>(t.sort));
    h = mix(h, hash_string(t.name));
    nodes += 1;
  }
  if (f.left) {
    h = mix(h, f.left->hash());
    nodes += f.left->node_count();
    depth = std::max(depth, f.left->modal_depth());
  }
  if (f.right) {
    h = mix(h, f.right->hash());
    nodes += f.right->node_count();
    depth = std::max(depth, f.right->modal_depth());
  }
  if (f.kind == Kind::Dia || f.kind == Kind::Box) depth += 1;
  f.hash_ = h;
  f.nodes_ = nodes;
  f.modal_depth_ = depth;
  return std::make_shared<const Formula>(std::move(f));
}

FormulaPtr Formula::atom(std::string pred, std::vector<Term> args) {
  Formula f;
  f.kind = Kind::Atom;
  f.label = std::move(pred);
  f.args = std::move(args);
  return make_node(std::move(f));
}

FormulaPtr Formula::not_(FormulaPtr x) {
  Formula f;
  f.kind = Kind::Not;
  f.left = std::move(x);
  return make_node(std::move(f));
}

FormulaPtr Formula::and_(FormulaPtr a, FormulaPtr b) {
  Formula f;
  f.kind = Kind::And;
  f.left = std::move(a);
  f.right = std::move(b);
  return make_node(std::move(f));
}

FormulaPtr Formula::exists(std::string var, FormulaPtr body) {
  Formula f;
  f.kind = Kind::Exists;
  f.label = std::move(var);
  f.left = std::move(body);
  return make_node(std::move(f));
}

FormulaPtr Formula::dia(FormulaPtr x) {
  Formula f;
  f.kind = Kind::Dia;
  f.left = std::move(x);
  return make_node(std::move(f));
}

FormulaPtr Formula::box(FormulaPtr x) {
  Formula f;
  f.kind = Kind::Box;
  f.left = std::move(x);
  return make_node(std::move(f));
}

FormulaPtr Formula::or_(FormulaPtr a, FormulaPtr b) {
  return not_(and_(not_(std::move(a)), not_(std::move(b))));
}

FormulaPtr Formula::implies(FormulaPtr a, FormulaPtr b) {
  return not_(and_(std::move(a), not_(std::move(b))));
}

FormulaPtr Formula::forall(std::string var, FormulaPtr body) {
  return not_(exists(std::move(var), not_(std::move(body))));
}

FormulaPtr top_sentence(const Signature& sig) {
  return Formula::not_(bot_sentence(sig));
}

FormulaPtr bot_sentence(const Signature& sig) {
  if (sig.predicates.empty())
    throw SignatureError("true/false need at least one predicate in the signature");
  const Predicate& p = sig.predicates.front();
  std::string cname = sig.base_constants.empty() ? sig.henkin_name(0) : sig.base_constants.front();
  std::vector<Term> args(p.arity, Term::constant(cname));
  FormulaPtr a = Formula::atom(p.name, args);
  return Formula::and_(a, Formula::not_(a));
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

int shortlex(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return a.compare(b);
}

}  // namespace

int compare(const Term& a, const Term& b) {
  if (a.sort != b.sort) return a.sort == Term::Sort::Var ? -1 : 1;
  return shortlex(a.name, b.name);
}

bool equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash() != b->hash()) return false;
  return compare(a, b) == 0;
}

int compare(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (int c = shortlex(a->label, b->label)) return c;
  if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (int c = compare(a->args[i], b->args[i])) return c;
  bool la = a->left != nullptr, lb = b->left != nullptr;
  if (la != lb) return la ? 1 : -1;
  if (la)
    if (int c = compare(a->left, b->left)) return c;
  bool ra = a->right != nullptr, rb = b->right != nullptr;
  if (ra != rb) return ra ? 1 : -1;
  if (ra)
    if (int c = compare(a->right, b->right)) return c;
  return 0;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

// Precedence levels: Exists scopes like an implication tail (1), And is 3,
// prefix operators 4, atoms 5.
int level_of(const FormulaPtr& f) {
  switch (f->kind) {
    case Kind::Atom: return 5;
    case Kind::Exists: return 1;
    case Kind::And: return 3;
    default: return 4;
  }
}

void print_rec(const FormulaPtr& f, int context, bool full, std::string& out) {
  int lvl = level_of(f);
  bool parens = full ? f->kind != Kind::Atom : lvl < context;
  if (parens) out += '(';
  switch (f->kind) {
    case Kind::Atom: {
      out += f->label;
      if (!f->args.empty()) {
        out += '(';
        for (size_t i = 0; i < f->args.size(); ++i) {
          if (i) out += ',';
          out += f->args[i].name;
        }
        out += ')';
      }
      break;
    }
    case Kind::Not:
      out += '~';
      print_rec(f->left, 4, full, out);
      break;
    case Kind::Dia:
      out += "<>";
      print_rec(f->left, 4, full, out);
      break;
    case Kind::Box:
      out += "[]";
      print_rec(f->left, 4, full, out);
      break;
    case Kind::And:
      print_rec(f->left, 3, full, out);
      out += " & ";
      print_rec(f->right, 4, full, out);
      break;
    case Kind::Exists:
      out += "exists ";
      out += f->label;
      out += ". ";
      print_rec(f->left, 1, full, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string print(const FormulaPtr& f) {
  std::string out;
  print_rec(f, 0, false, out);
  return out;
}

std::string print_full(const FormulaPtr& f) {
  std::string out;
  print_rec(f, 0, true, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

enum class Tok : uint8_t {
  Ident, LPar, RPar, Comma, Dot, Not, And, Or, Implies, Dia, Box,
  Exists, Forall, True, False, End
};

struct Token {
  Tok kind;
  std::string text;
  size_t offset;
};

struct Lexer {
  std::string_view src;
  size_t pos = 0;

  Token next() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    size_t at = pos;
    if (pos >= src.size()) return {Tok::End, "", at};
    char c = src[pos];
    auto take = [&](size_t n, Tok k) {
      pos += n;
      return Token{k, std::string(src.substr(at, n)), at};
    };
    if (c == '(') return take(1, Tok::LPar);
    if (c == ')') return take(1, Tok::RPar);
    if (c == ',') return take(1, Tok::Comma);
    if (c == '.') return take(1, Tok::Dot);
    if (c == '~') return take(1, Tok::Not);
    if (c == '&') return take(1, Tok::And);
    if (c == '|') return take(1, Tok::Or);
    if (src.substr(pos, 2) == "->") return take(2, Tok::Implies);
    if (src.substr(pos, 2) == "<>") return take(2, Tok::Dia);
    if (src.substr(pos, 2) == "[]") return take(2, Tok::Box);
    if (src.substr(pos, 3) == "◇") return take(3, Tok::Dia);  // ◇
    if (src.substr(pos, 3) == "□") return take(3, Tok::Box);  // □
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t end = pos;
      while (end < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[end])) || src[end] == '_'))
        ++end;
      std::string word(src.substr(pos, end - pos));
      pos = end;
      if (word == "exists") return {Tok::Exists, word, at};
      if (word == "forall") return {Tok::Forall, word, at};
      if (word == "true") return {Tok::True, word, at};
      if (word == "false") return {Tok::False, word, at};
      return {Tok::Ident, word, at};
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", at);
  }
};

struct Parser {
  const Signature& sig;
  std::vector<Token> toks;
  size_t idx = 0;
  std::vector<std::string> scope = {};

  const Token& peek() const { return toks[idx]; }
  Token eat() { return toks[idx++]; }

  [[noreturn]] void fail(const std::string& msg, const Token& t) {
    throw ParseError(msg, t.offset);
  }

  FormulaPtr parse_formula() { return parse_implies(); }

  FormulaPtr parse_implies() {
    FormulaPtr lhs = parse_or();
    if (peek().kind == Tok::Implies) {
      eat();
      FormulaPtr rhs = parse_implies();  // right associative
      return Formula::implies(lhs, rhs);
    }
    return lhs;
  }

  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (peek().kind == Tok::Or) {
      eat();
      f = Formula::or_(f, parse_and());
    }
    return f;
  }

  FormulaPtr parse_and() {
    FormulaPtr f = parse_unary();
    while (peek().kind == Tok::And) {
      eat();
      f = Formula::and_(f, parse_unary());
    }
    return f;
  }

  FormulaPtr parse_unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Not: eat(); return Formula::not_(parse_unary());
      case Tok::Dia: eat(); return Formula::dia(parse_unary());
      case Tok::Box: eat(); return Formula::box(parse_unary());
      case Tok::Exists:
      case Tok::Forall: {
        bool uni = t.kind == Tok::Forall;
        eat();
        Token v = eat();
        if (v.kind != Tok::Ident) fail("expected variable name", v);
        Token dot = eat();
        if (dot.kind != Tok::Dot) fail("expected '.' after quantified variable", dot);
        scope.push_back(v.text);
        FormulaPtr body = parse_implies();
        scope.pop_back();
        return uni ? Formula::forall(v.text, body) : Formula::exists(v.text, body);
      }
      default: return parse_primary();
    }
  }

  FormulaPtr parse_primary() {
    Token t = eat();
    switch (t.kind) {
      case Tok::LPar: {
        FormulaPtr f = parse_formula();
        Token r = eat();
        if (r.kind != Tok::RPar) fail("expected ')'", r);
        return f;
      }
      case Tok::True: return top_sentence(sig);
      case Tok::False: return bot_sentence(sig);
      case Tok::Ident: return parse_atom(t);
      case Tok::End: fail("syntax error: unexpected end of input", t);
      default: fail("syntax error: unexpected token '" + t.text + "'", t);
    }
  }

  FormulaPtr parse_atom(const Token& head) {
    const Predicate* p = sig.find_predicate(head.text);
    std::vector<Term> args;
    if (peek().kind == Tok::LPar) {
      eat();
      while (true) {
        Token a = eat();
        if (a.kind != Tok::Ident) fail("expected term", a);
        args.push_back(resolve_term(a));
        Token sep = eat();
        if (sep.kind == Tok::RPar) break;
        if (sep.kind != Tok::Comma) fail("expected ',' or ')'", sep);
      }
    }
    if (!p) fail("unknown predicate '" + head.text + "'", head);
    if (args.size() != p->arity)
      fail("arity mismatch for '" + head.text + "': expected " + std::to_string(p->arity) +
               " argument(s), got " + std::to_string(args.size()),
           head);
    return Formula::atom(head.text, std::move(args));
  }

  Term resolve_term(const Token& t) {
    if (std::find(scope.begin(), scope.end(), t.text) != scope.end()) return Term::var(t.text);
    if (sig.is_constant(t.text)) return Term::constant(t.text);
    fail("unknown symbol '" + t.text + "'", t);
  }
};

}  // namespace

FormulaPtr parse(std::string_view text, const Signature& sig) {
  Lexer lex{text};
  std::vector<Token> toks;
  do {
    toks.push_back(lex.next());
  } while (toks.back().kind != Tok::End);
  Parser p{sig, std::move(toks)};
  FormulaPtr f = p.parse_formula();
  if (p.peek().kind != Tok::End) p.fail("syntax error: trailing input", p.peek());
  return f;
}

// ---------------------------------------------------------------------------
// Structural helpers
// ---------------------------------------------------------------------------

namespace {

void free_vars_rec(const FormulaPtr& f, std::vector<std::string>& bound,
                   std::set<std::string>& out) {
  switch (f->kind) {
    case Kind::Atom:
      for (const auto& t : f->args)
        if (t.sort == Term::Sort::Var &&
            std::find(bound.begin(), bound.end(), t.name) == bound.end())
          out.insert(t.name);
      break;
    case Kind::Exists:
      bound.push_back(f->label);
      free_vars_rec(f->left, bound, out);
      bound.pop_back();
      break;
    case Kind::And:
      free_vars_rec(f->left, bound, out);
      free_vars_rec(f->right, bound, out);
      break;
    default:
      if (f->left) free_vars_rec(f->left, bound, out);
      break;
  }
}

}  // namespace

std::set<std::string> free_vars(const FormulaPtr& f) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  free_vars_rec(f, bound, out);
  return out;
}

bool is_sentence(const FormulaPtr& f) { return free_vars(f).empty(); }

FormulaPtr substitute(const FormulaPtr& f, const std::string& var, const Term& repl) {
  switch (f->kind) {
    case Kind::Atom: {
      bool touched = false;
      for (const auto& t : f->args)
        if (t.sort == Term::Sort::Var && t.name == var) touched = true;
      if (!touched) return f;
      std::vector<Term> args = f->args;
      for (auto& t : args)
        if (t.sort == Term::Sort::Var && t.name == var) t = repl;
      return Formula::atom(f->label, std::move(args));
    }
    case Kind::Exists: {
      if (f->label == var) return f;  // shadowed
      FormulaPtr body = substitute(f->left, var, repl);
      if (body.get() == f->left.get()) return f;
      return Formula::exists(f->label, body);
    }
    case Kind::Not: {
      FormulaPtr b = substitute(f->left, var, repl);
      return b.get() == f->left.get() ? f : Formula::not_(b);
    }
    case Kind::Dia: {
      FormulaPtr b = substitute(f->left, var, repl);
      return b.get() == f->left.get() ? f : Formula::dia(b);
    }
    case Kind::Box: {
      FormulaPtr b = substitute(f->left, var, repl);
      return b.get() == f->left.get() ? f : Formula::box(b);
    }
    case Kind::And: {
      FormulaPtr a = substitute(f->left, var, repl);
      FormulaPtr b = substitute(f->right, var, repl);
      if (a.get() == f->left.get() && b.get() == f->right.get()) return f;
      return Formula::and_(a, b);
    }
  }
  return f;
}

namespace {

FormulaPtr alpha_rec(const FormulaPtr& f, std::map<std::string, std::string>& env,
                     uint32_t depth) {
  switch (f->kind) {
    case Kind::Atom: {
      std::vector<Term> args = f->args;
      bool touched = false;
      for (auto& t : args)
        if (t.sort == Term::Sort::Var) {
          auto it = env.find(t.name);
          if (it != env.end() && it->second != t.name) {
            t.name = it->second;
            touched = true;
          }
        }
      return touched ? Formula::atom(f->label, std::move(args)) : f;
    }
    case Kind::Exists: {
      std::string canon = "x" + std::to_string(depth);
      auto saved = env.find(f->label) != env.end()
                       ? std::optional<std::string>(env[f->label])
                       : std::nullopt;
      env[f->label] = canon;
      FormulaPtr body = alpha_rec(f->left, env, depth + 1);
      if (saved)
        env[f->label] = *saved;
      else
        env.erase(f->label);
      if (f->label == canon && body.get() == f->left.get()) return f;
      return Formula::exists(canon, body);
    }
    case Kind::Not: {
      FormulaPtr b = alpha_rec(f->left, env, depth);
      return b.get() == f->left.get() ? f : Formula::not_(b);
    }
    case Kind::Dia: {
      FormulaPtr b = alpha_rec(f->left, env, depth);
      return b.get() == f->left.get() ? f : Formula::dia(b);
    }
    case Kind::Box: {
      FormulaPtr b = alpha_rec(f->left, env, depth);
      return b.get() == f->left.get() ? f : Formula::box(b);
    }
    case Kind::And: {
      FormulaPtr a = alpha_rec(f->left, env, depth);
      FormulaPtr b = alpha_rec(f->right, env, depth);
      if (a.get() == f->left.get() && b.get() == f->right.get()) return f;
      return Formula::and_(a, b);
    }
  }
  return f;
}

}  // namespace

FormulaPtr alpha_normalize(const FormulaPtr& f) {
  std::map<std::string, std::string> env;
  return alpha_rec(f, env, 0);
}

namespace {

void collect_subformulas(const FormulaPtr& f,
                         std::unordered_set<FormulaPtr, FormulaHash, FormulaEq>& out) {
  if (!out.insert(f).second) return;
  if (f->left) collect_subformulas(f->left, out);
  if (f->right) collect_subformulas(f->right, out);
}

}  // namespace

std::vector<FormulaPtr> subsentences(const std::vector<FormulaPtr>& fs) {
  std::unordered_set<FormulaPtr, FormulaHash, FormulaEq> set;
  for (const auto& f : fs) collect_subformulas(f, set);
  std::unordered_set<FormulaPtr, FormulaHash, FormulaEq> closed = set;
  for (const auto& g : set) {
    if (g->kind == Kind::Not)
      closed.insert(g->left);
    else
      closed.insert(Formula::not_(g));
  }
  std::vector<FormulaPtr> out(closed.begin(), closed.end());
  std::sort(out.begin(), out.end(), FormulaLess{});
  return out;
}

std::vector<FormulaPtr> subsentences(const FormulaPtr& f) {
  return subsentences(std::vector<FormulaPtr>{f});
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

uint64_t enum_size(const FormulaPtr& f, const Signature& sig) {
  switch (f->kind) {
    case Kind::Atom: {
      uint64_t s = 1;
      for (const auto& t : f->args) {
        if (t.sort == Term::Sort::Var) {
          s += 1;
        } else if (auto k = sig.henkin_index(t.name)) {
          s += *k + 1;
        } else {
          s += 1;
        }
      }
      return s;
    }
    case Kind::Exists: return 2 + enum_size(f->left, sig);
    case Kind::And: return 1 + enum_size(f->left, sig) + enum_size(f->right, sig);
    default: return 1 + enum_size(f->left, sig);
  }
}

SentenceEnumerator::SentenceEnumerator(Signature sig) : sig_(std::move(sig)) {
  sig_.validate();
}

void SentenceEnumerator::term_tuples(uint64_t budget, uint32_t depth, uint32_t arity,
                                     std::vector<Term>& acc,
                                     std::vector<std::vector<Term>>& out) const {
  if (arity == 0) {
    if (budget == 0) out.push_back(acc);
    return;
  }
  if (budget < arity) return;  // every term costs at least 1
  uint64_t here = budget - (arity - 1);  // leave 1 for each remaining slot
  // variables in scope (cost 1)
  for (uint32_t v = 0; v < depth && here >= 1; ++v) {
    acc.push_back(Term::var("x" + std::to_string(v)));
    term_tuples(budget - 1, depth, arity - 1, acc, out);
    acc.pop_back();
  }
  // base constants (cost 1)
  for (const auto& c : sig_.base_constants) {
    if (here < 1) break;
    acc.push_back(Term::constant(c));
    term_tuples(budget - 1, depth, arity - 1, acc, out);
    acc.pop_back();
  }
  // Henkin constants: c_k costs k+1
  for (uint64_t k = 0; k + 1 <= here; ++k) {
    acc.push_back(Term::constant(sig_.henkin_name(k)));
    term_tuples(budget - (k + 1), depth, arity - 1, acc, out);
    acc.pop_back();
  }
}

std::vector<FormulaPtr> SentenceEnumerator::generate(uint64_t size, uint32_t depth) const {
  std::vector<FormulaPtr> out;
  if (size == 0) return out;
  // atoms
  for (const auto& p : sig_.predicates) {
    if (size < 1 + p.arity) continue;
    std::vector<std::vector<Term>> tuples;
    std::vector<Term> acc;
    term_tuples(size - 1, depth, p.arity, acc, tuples);
    for (auto& t : tuples) out.push_back(Formula::atom(p.name, std::move(t)));
  }
  if (size >= 2) {
    for (const auto& b : generate(size - 1, depth)) out.push_back(Formula::not_(b));
    if (size >= 3)
      for (uint64_t ls = 1; ls + 2 <= size; ++ls)
        for (const auto& a : generate(ls, depth))
          for (const auto& b : generate(size - 1 - ls, depth))
            out.push_back(Formula::and_(a, b));
    // quantifier: binder is depth-canonical, total cost 2 + body
    if (size >= 3)
      for (const auto& b : generate(size - 2, depth + 1))
        out.push_back(Formula::exists("x" + std::to_string(depth), b));
    for (const auto& b : generate(size - 1, depth)) out.push_back(Formula::dia(b));
    for (const auto& b : generate(size - 1, depth)) out.push_back(Formula::box(b));
  }
  return out;
}

const std::vector<FormulaPtr>& SentenceEnumerator::bucket(uint64_t size) const {
  while (buckets_.size() < size) {
    uint64_t s = buckets_.size() + 1;
    std::vector<FormulaPtr> b = generate(s, 0);
    std::sort(b.begin(), b.end(), FormulaLess{});
    buckets_.push_back(std::move(b));
  }
  return buckets_[size - 1];
}

FormulaPtr SentenceEnumerator::nth(uint64_t e) const {
  uint64_t size = 1;
  while (true) {
    const auto& b = bucket(size);
    if (e < b.size()) return b[e];
    e -= b.size();
    ++size;
    if (size > 4096) throw std::runtime_error("sentence enumeration index out of range");
  }
}

std::optional<uint64_t> SentenceEnumerator::index_of(const FormulaPtr& sentence) const {
  FormulaPtr f = alpha_normalize(sentence);
  if (!is_sentence(f)) return std::nullopt;
  uint64_t s = enum_size(f, sig_);
  uint64_t base = 0;
  for (uint64_t k = 1; k < s; ++k) base += bucket(k).size();
  const auto& b = bucket(s);
  auto it = std::lower_bound(b.begin(), b.end(), f, FormulaLess{});
  if (it == b.end() || !equal(*it, f)) return std::nullopt;
  return base + static_cast<uint64_t>(it - b.begin());
}

uint64_t SentenceEnumerator::count_up_to_size(uint64_t size) const {
  uint64_t total = 0;
  for (uint64_t s = 1; s <= size; ++s) total += bucket(s).size();
  return total;
}

// ---------------------------------------------------------------------------
// Pairing
// ---------------------------------------------------------------------------

uint64_t cantor_pair(uint64_t a, uint64_t b) {
  unsigned __int128 s = a + b;
  unsigned __int128 v = s * (s + 1) / 2 + b;
  return static_cast<uint64_t>(v);
}

std::pair<uint64_t, uint64_t> cantor_unpair(uint64_t n) {
  // integer floor((sqrt(8n+1)-1)/2) without floating point drift
  unsigned __int128 target = static_cast<unsigned __int128>(n) * 8 + 1;
  uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(n)) * 2.83) + 2;
  while (static_cast<unsigned __int128>(r) * r > target) --r;
  while (static_cast<unsigned __int128>(r + 1) * (r + 1) <= target) ++r;
  uint64_t w = (r - 1) / 2;
  uint64_t t = w * (w + 1) / 2;
  uint64_t b = n - t;
  return {w - b, b};
}

SchedulePair pair_schedule(uint64_t n) {
  auto [m, k] = cantor_unpair(n);
  (void)k;
  auto [i, e] = cantor_unpair(m);
  return {i, e};
}

}  // namespace kf
