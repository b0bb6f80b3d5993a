#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "kf/oracle.hpp"
#include "kf/semantics.hpp"
#include "test_util.hpp"

using namespace kf;

namespace {

KripkeModel single_world(bool reflexive, bool p_true) {
  KripkeModel m;
  m.worlds.resize(1);
  if (p_true) m.worlds[0].facts.insert({"p", {}});
  m.successors.resize(1);
  if (reflexive) m.successors[0] = {0};
  m.domain = {"d0"};
  return m;
}

}  // namespace

TEST_CASE("eval on single worlds") {
  Signature sig = kft::prop_sig(2);
  KripkeModel m = single_world(true, true);
  CHECK(eval(m, 0, parse("[]p", sig)));
  // irreflexive world: box is vacuous
  KripkeModel irr = single_world(false, false);
  CHECK(eval(irr, 0, parse("[]false", sig)));
  CHECK(!eval(irr, 0, parse("<>true", sig)));
}

TEST_CASE("eval on a two-world chain") {
  Signature sig = kft::prop_sig(2);
  KripkeModel m;
  m.worlds.resize(2);
  m.worlds[1].facts.insert({"p", {}});
  m.successors = {{0, 1}, {1}};
  m.domain = {"d0"};
  CHECK(eval(m, 0, parse("<>p", sig)));
  CHECK(!eval(m, 0, parse("p", sig)));
  CHECK(global_truth(m, parse("true", sig)));
  CHECK(!global_truth(m, parse("p", sig)));
}

TEST_CASE("global truth on a reflexive transitive 3-chain") {
  Signature sig = kft::prop_sig(2);
  KripkeModel m;
  m.worlds.resize(3);
  for (auto& w : m.worlds) w.facts.insert({"p", {}});
  m.successors = {{0, 1, 2}, {1, 2}, {2}};
  m.domain = {"d0"};
  CHECK(global_truth(m, parse("[]p", sig)));
  // <>p fails nowhere here, but a world with no successor falsifies it
  KripkeModel dead = single_world(false, true);
  CHECK(!global_truth(dead, parse("<>p", sig)));
}

TEST_CASE("eval with first-order structure") {
  Signature sig;
  sig.predicates = {{"P", 1}};
  sig.base_constants = {"a"};
  KripkeModel m;
  m.worlds.resize(2);
  m.domain = {"d0", "d1"};
  m.constants = {{"a", "d0"}};
  m.worlds[0].facts.insert({"P", {"d0"}});
  m.worlds[1].facts.insert({"P", {"d1"}});
  m.successors = {{0, 1}, {1}};
  CHECK(eval(m, 0, parse("P(a)", sig)));
  CHECK(eval(m, 0, parse("exists x. P(x)", sig)));
  CHECK(eval(m, 0, parse("[]exists x. P(x)", sig)));
  CHECK(!eval(m, 0, parse("forall x. P(x)", sig)));
  CHECK_THROWS_AS(eval(m, 0, parse("<>P(c0)", sig)), EvalError);  // c0 unmapped
}

TEST_CASE("eval rejects unknown symbols") {
  Signature sig = kft::prop_sig(2);
  KripkeModel m = single_world(true, true);
  FormulaPtr f = Formula::atom("P", {Term::constant("zzz")});
  CHECK_THROWS_AS(eval(m, 0, f), EvalError);
}

TEST_CASE("eval_lasso basics") {
  Signature sig = kft::prop_sig(2);
  // prefix [~p], loop [p]: <>[]p holds at prefix 0
  LassoModel m1;
  m1.prefix.resize(1);
  m1.loop.resize(1);
  m1.loop[0].facts.insert({"p", {}});
  m1.domain = {"d0"};
  CHECK(eval_lasso(m1, Pos::prefix(0), parse("<>[]p", sig)));

  // loop [p, ~p]: []p fails at loop 0 because the ~p world recurs
  LassoModel m2;
  m2.loop.resize(2);
  m2.loop[0].facts.insert({"p", {}});
  m2.domain = {"d0"};
  CHECK(!eval_lasso(m2, Pos::loop(0), parse("[]p", sig)));

  // prefix [p], loop [~p]: checked against the unrolled model. The loop
  // settles on ~p forever, so []~p recurs and ~<>[]~p comes out false,
  // sinking that variant, while <>[]p never holds.
  LassoModel m3;
  m3.prefix.resize(1);
  m3.prefix[0].facts.insert({"p", {}});
  m3.loop.resize(1);
  m3.domain = {"d0"};
  FormulaPtr f = parse("p & <>~p & ~<>[]p", sig);
  FormulaPtr g = parse("p & <>~p & ~<>[]~p", sig);
  KripkeModel u = unroll(m3, 3);
  CHECK(eval_lasso(m3, Pos::prefix(0), f) == eval(u, 0, f));
  CHECK(eval_lasso(m3, Pos::prefix(0), f) == true);
  CHECK(eval_lasso(m3, Pos::prefix(0), g) == eval(u, 0, g));
  CHECK(eval_lasso(m3, Pos::prefix(0), g) == false);
}

TEST_CASE("unroll basics") {
  Signature sig = kft::prop_sig(2);
  LassoModel m;
  m.loop.resize(1);
  m.loop[0].facts.insert({"p", {}});
  m.domain = {"d0"};
  KripkeModel k = unroll(m, 3);
  CHECK(k.worlds.size() == 3);
  for (uint32_t w = 0; w < 3; ++w) CHECK(eval(k, w, parse("p", sig)));

  LassoModel m2;
  m2.prefix.resize(1);
  m2.loop.resize(1);
  m2.loop[0].facts.insert({"p", {}});
  m2.domain = {"d0"};
  CHECK(eval(unroll(m2, 2), 0, parse("<>p", sig)) ==
        eval_lasso(m2, Pos::prefix(0), parse("<>p", sig)));
  CHECK_THROWS_AS(unroll(m2, 0), EvalError);
}

TEST_CASE("lasso faithfulness: eval_lasso agrees with eval on unrollings") {
  Signature sig = kft::prop_sig(3);
  std::mt19937 rng(7331);
  int agree = 0, total = 0;
  for (int k = 0; k < 200; ++k) {
    LassoModel m = kft::random_lasso(rng, sig, 4, 3);
    FormulaPtr f = kft::random_sentence(rng, sig, 7, 3);
    uint32_t d = f->modal_depth();
    uint32_t steps = d * static_cast<uint32_t>(m.loop.size()) +
                     static_cast<uint32_t>(m.prefix.size()) + 1;
    KripkeModel u = unroll(m, steps);
    for (uint32_t q = 0; q < m.prefix.size(); ++q) {
      ++total;
      if (eval_lasso(m, Pos::prefix(q), f) == eval(u, q, f)) ++agree;
    }
    // first loop copy positions as well
    for (uint32_t j = 0; j < m.loop.size(); ++j) {
      ++total;
      uint32_t q = static_cast<uint32_t>(m.prefix.size()) + j;
      if (eval_lasso(m, Pos::loop(j), f) == eval(u, q, f)) ++agree;
    }
  }
  CHECK(agree == total);
}

TEST_CASE("axiom schemata hold at every position of random lassos") {
  Signature sig = kft::prop_sig(3);
  std::mt19937 rng(90125);
  for (int k = 0; k < 100; ++k) {
    LassoModel m = kft::random_lasso(rng, sig, 4, 3);
    FormulaPtr phi = kft::random_sentence(rng, sig, 5, 2);
    FormulaPtr psi = kft::random_sentence(rng, sig, 5, 2);
    std::vector<SchemaInstance> instances = {{Schema::T, phi, nullptr},
                                             {Schema::Four, phi, nullptr},
                                             {Schema::D2, phi, psi},
                                             {Schema::N1, phi, nullptr}};
    SchemataReport rep = check_schemata(m, instances);
    CHECK(rep.all_true);
  }
}

TEST_CASE("diamond truth is monotone along the prefix and constant on the loop") {
  Signature sig = kft::prop_sig(3);
  std::mt19937 rng(424242);
  for (int k = 0; k < 100; ++k) {
    LassoModel m = kft::random_lasso(rng, sig, 4, 3);
    FormulaPtr g = kft::random_sentence(rng, sig, 5, 2);
    FormulaPtr dia = Formula::dia(g);
    LassoEvaluator ev(m);
    int prev = 1;
    bool first = true;
    for (uint32_t q = 0; q < m.prefix.size(); ++q) {
      int v = ev.eval(Pos::prefix(q), dia);
      if (!first) CHECK(v <= prev);
      prev = v;
      first = false;
    }
    int on_loop = ev.eval(Pos::loop(0), dia);
    for (uint32_t j = 1; j < m.loop.size(); ++j)
      CHECK(ev.eval(Pos::loop(j), dia) == on_loop);
    if (!first) CHECK(on_loop <= prev);
  }
}

TEST_CASE("lasso JSON round trip") {
  LassoModel m;
  m.prefix.resize(1);
  m.prefix[0].facts.insert({"p", {}});
  m.loop.resize(2);
  m.loop[1].facts.insert({"P", {"d0", "d1"}});
  m.domain = {"d0", "d1"};
  m.constants = {{"a", "d1"}};
  LassoModel back = LassoModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.prefix.size() == 1);
  CHECK(back.loop.size() == 2);
  CHECK(back.loop[1].holds({"P", {"d0", "d1"}}));
  CHECK(back.constants.at("a") == "d1");
  CHECK(m.to_json().dump() == back.to_json().dump());

  CHECK_THROWS_AS(LassoModel::from_json(nlohmann::json::parse(R"({"loop": []})")), JsonError);
}

TEST_CASE("dot export names every world") {
  LassoModel m;
  m.prefix.resize(1);
  m.loop.resize(2);
  m.domain = {"d0"};
  std::string dot = m.to_dot();
  CHECK(dot.find("p0") != std::string::npos);
  CHECK(dot.find("l1 -> l0") != std::string::npos);

  KripkeModel k = unroll(m, 1);
  std::string kd = k.to_dot();
  CHECK(kd.find("w0 -> w2") != std::string::npos);
}
