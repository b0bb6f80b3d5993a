#pragma once

#include <string>
#include <vector>

#include "kf/fkd.hpp"
#include "kf/henkin.hpp"

namespace kft {

// Checks the closure properties of a finished construction state, restricted
// to decided sentences. Returns a list of violation descriptions.
inline std::vector<std::string> closure_violations(const kf::ConstructionState& st,
                                                   bool check_undecided_box_consistency) {
  using namespace kf;
  std::vector<std::string> bad;
  const SentenceEnumerator& en = st.enumerator();
  LinearFKD d = st.snapshot();
  auto pairs = st.decided_pairs();

  auto decided_at = [&](uint32_t pos, uint64_t e) -> std::optional<bool> {
    return st.decided(pos, e);
  };
  auto complain = [&](const std::string& what, uint64_t wid, uint64_t e) {
    bad.push_back(what + " (world id " + std::to_string(wid) + ", e=" + std::to_string(e) + ")");
  };

  for (const auto& [wid, e, positive] : pairs) {
    auto posq = d.position_of(wid);
    if (!posq) {
      complain("decided world vanished", wid, e);
      continue;
    }
    uint32_t i = *posq;
    const LinearFKD::World& w = d.worlds[i];
    FormulaPtr phi = en.nth(e);
    FormulaPtr neg = Formula::not_(phi);

    // (1) exactly one of phi, ~phi
    if (positive && (!w.contains(phi) || w.contains(neg)))
      complain("clause 1: positive decision not reflected", wid, e);
    if (!positive && (w.contains(phi) || !w.contains(neg)))
      complain("clause 1: negative decision not reflected", wid, e);

    if (!positive) {
      // (4b) decided ~<>theta: no decided theta at any later world
      if (phi->kind == Kind::Dia) {
        auto et = en.index_of(phi->left);
        if (et)
          for (uint32_t j = i; j < d.worlds.size(); ++j)
            if (auto dj = decided_at(j, *et); dj && *dj)
              complain("clause 4: theta decided after a refuted diamond", wid, e);
      }
      continue;
    }

    switch (phi->kind) {
      case Kind::And: {
        // (2) conjunction membership agrees with conjunct membership when
        // all three are decided
        auto ea = en.index_of(phi->left);
        auto eb = en.index_of(phi->right);
        if (ea && eb) {
          auto da = decided_at(i, *ea);
          auto db = decided_at(i, *eb);
          if (da && db && !(*da && *db))
            complain("clause 2: conjunction decided without its conjuncts", wid, e);
        }
        break;
      }
      case Kind::Exists: {
        // (3) some instance theta(c) landed in the same world
        bool found = false;
        for (uint64_t k = 0; k < st.next_henkin() + 1 && !found; ++k) {
          FormulaPtr inst = substitute(phi->left, phi->label,
                                       Term::constant(st.theory().sig.henkin_name(k)));
          if (w.contains(inst)) found = true;
        }
        if (!free_vars(phi->left).count(phi->label) && w.contains(phi->left)) found = true;
        for (const auto& c : st.theory().sig.base_constants) {
          if (found) break;
          if (w.contains(substitute(phi->left, phi->label, Term::constant(c)))) found = true;
        }
        if (!found) complain("clause 3: existential without a Henkin instance", wid, e);
        break;
      }
      case Kind::Dia: {
        // (4a) witness world at or after i
        bool found = false;
        for (uint32_t j = i; j < d.worlds.size() && !found; ++j)
          if (d.worlds[j].contains(phi->left)) found = true;
        if (!found) complain("clause 4: diamond without a later witness", wid, e);
        break;
      }
      case Kind::Box: {
        // (5) theta present-or-unrefuted at every later world
        FormulaPtr theta = phi->left;
        auto et = en.index_of(theta);
        FormulaPtr ntheta = Formula::not_(theta);
        auto ent = en.index_of(ntheta);
        for (uint32_t j = i; j < d.worlds.size(); ++j) {
          if (et) {
            auto dj = decided_at(j, *et);
            if (dj && !*dj) complain("clause 5: theta refuted under a box", wid, e);
            if (!dj && check_undecided_box_consistency) {
              LinearFKD ext = add_sentence(d, j, theta);
              if (!is_T_consistent(ext, st.theory(), st.bounds(), st.options()))
                complain("clause 5: theta not even consistent under a box", wid, e);
            }
          }
          if (ent) {
            auto dj = decided_at(j, *ent);
            if (dj && *dj) complain("clause 5: ~theta decided under a box", wid, e);
          }
        }
        break;
      }
      default: break;
    }
  }

  // (6) every decided axiom occurrence is positive
  for (const auto& ax : st.theory().axioms) {
    auto ea = en.index_of(ax);
    if (!ea) continue;
    for (uint32_t j = 0; j < d.worlds.size(); ++j)
      if (auto dj = decided_at(j, *ea); dj && !*dj)
        complain("clause 6: axiom refuted in a world", d.worlds[j].id, *ea);
  }
  return bad;
}

}  // namespace kft
