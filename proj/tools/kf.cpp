// kf: decide linear entailment, manipulate finite Kripke diagrams, and run
// the staged construction of a decidable discrete linear model.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kf/fkd.hpp"
#include "kf/henkin.hpp"
#include "kf/oracle.hpp"
#include "kf/semantics.hpp"
#include "kf/syntax.hpp"

namespace {

constexpr int kExitValid = 0;
constexpr int kExitCountermodel = 1;
constexpr int kExitExhausted = 2;
constexpr int kExitInconsistentTheory = 3;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitInternal = 70;

struct CommonOpts {
  std::string theory_path;
  std::string signature_path;
  std::optional<uint64_t> max_prefix, max_loop, max_domain;
  bool strict = false;
  bool assume_bound_complete = false;
};

void add_bound_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--max-prefix", o.max_prefix, "cap on countermodel prefix length");
  cmd->add_option("--max-loop", o.max_loop, "cap on countermodel loop length");
  cmd->add_option("--max-domain", o.max_domain, "cap on first-order domain size");
  cmd->add_flag("--strict", o.strict, "treat oracle exhaustion as a hard error (default)");
  cmd->add_flag("--assume-bound-complete", o.assume_bound_complete,
                "accept exhausted searches as valid");
}

kf::SearchBounds bounds_of(const CommonOpts& o) {
  kf::SearchBounds b;
  if (o.max_prefix) b.max_prefix = *o.max_prefix;
  if (o.max_loop) b.max_loop = *o.max_loop;
  if (o.max_domain) b.max_domain = *o.max_domain;
  return b;
}

kf::OracleOptions options_of(const CommonOpts& o) {
  kf::OracleOptions opts = kf::OracleOptions::from_env();
  opts.strict = !o.assume_bound_complete;  // strict is the default policy
  opts.assume_bound_complete = o.assume_bound_complete;
  return opts;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

kf::Theory load_theory(const std::string& path) { return kf::Theory::from_json(load_json(path)); }

kf::Signature load_signature(const CommonOpts& o) {
  if (!o.signature_path.empty()) {
    nlohmann::json j = load_json(o.signature_path);
    return j.contains("signature") ? kf::Signature::from_json(j.at("signature"))
                                   : kf::Signature::from_json(j);
  }
  if (!o.theory_path.empty()) return load_theory(o.theory_path).sig;
  throw CLI::ValidationError("need --signature or --theory");
}

// Exclusive advisory lock held while a command touches the stage cache.
struct FileLock {
  int fd = -1;
  explicit FileLock(const std::string& path) {
    fd = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd >= 0) ::flock(fd, LOCK_EX);
  }
  ~FileLock() {
    if (fd >= 0) {
      ::flock(fd, LOCK_UN);
      ::close(fd);
    }
  }
};

void validate_trace_record(const nlohmann::json& j) {
  if (!j.is_object()) throw kf::JsonError("trace record is not an object");
  if (j.value("schema_version", 0) != 1) throw kf::JsonError("unsupported trace schema version");
  std::string kind = j.value("record", "stage");
  if (kind == "skips") {
    for (const char* k : {"from", "count", "appended"})
      if (!j.contains(k) || !j.at(k).is_number_unsigned())
        throw kf::JsonError(std::string("skips record lacks ") + k);
    return;
  }
  if (kind != "stage") throw kf::JsonError("unknown trace record kind: " + kind);
  for (const char* k : {"n", "i", "e"})
    if (!j.contains(k) || !j.at(k).is_number_unsigned())
      throw kf::JsonError(std::string("stage record lacks ") + k);
  if (!j.contains("branch") || !j.at("branch").is_string())
    throw kf::JsonError("stage record lacks branch");
}

kf::StageRecord record_from_json(const nlohmann::json& j) {
  kf::StageRecord r;
  r.n = j.at("n").get<uint64_t>();
  r.i = j.at("i").get<uint64_t>();
  r.e = j.at("e").get<uint64_t>();
  std::string b = j.at("branch").get<std::string>();
  if (b == "skip")
    r.branch = kf::Branch::Skip;
  else if (b == "negate")
    r.branch = kf::Branch::Negate;
  else if (b == "exists")
    r.branch = kf::Branch::Exists;
  else if (b == "dia")
    r.branch = kf::Branch::Dia;
  else if (b == "add")
    r.branch = kf::Branch::Add;
  else
    throw kf::JsonError("unknown branch: " + b);
  r.appended = j.value("appended", false);
  if (j.contains("candidate")) r.candidate = j.at("candidate").get<uint32_t>();
  r.worlds_after = j.value("worlds", uint64_t{0});
  return r;
}

void replay_trace_stream(kf::ConstructionState& st, std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    validate_trace_record(j);
    if (j.value("record", "stage") == "skips") {
      st.replay_skips(j.at("count").get<uint64_t>(), j.at("appended").get<uint64_t>());
      continue;
    }
    st.replay(record_from_json(j));
  }
}

class FileTraceSink : public kf::TraceSink {
 public:
  explicit FileTraceSink(std::ofstream& out) : out_(out) {}
  void on_stage(const kf::StageRecord& rec) override { out_ << rec.to_json().dump() << "\n"; }
  void on_skips(uint64_t from, uint64_t count, uint64_t appended) override {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["record"] = "skips";
    j["from"] = from;
    j["count"] = count;
    j["appended"] = appended;
    out_ << j.dump() << "\n";
  }

 private:
  std::ofstream& out_;
};

int exit_for(kf::VerdictKind k) {
  switch (k) {
    case kf::VerdictKind::Valid: return kExitValid;
    case kf::VerdictKind::Countermodel: return kExitCountermodel;
    case kf::VerdictKind::Exhausted: return kExitExhausted;
  }
  return kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toolkit for discrete linear Kripke models"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string formula_text;
  std::string fkd_path, model_path, cache_path, out_fkd, out_trace, format = "dot";
  uint64_t stages = 0, world = 0;
  std::string placement = "paper";
  uint32_t append_every = 4;
  bool full_parens = false;

  auto* cmd_parse = app.add_subcommand("parse", "parse a formula and print its canonical form");
  cmd_parse->add_option("-f,--formula", formula_text)->required();
  cmd_parse->add_option("-s,--signature", common.signature_path);
  cmd_parse->add_option("-t,--theory", common.theory_path);
  cmd_parse->add_flag("--full", full_parens, "fully parenthesized output");

  auto* cmd_decide = app.add_subcommand("decide", "decide T |=_L f over discrete linear models");
  cmd_decide->add_option("-t,--theory", common.theory_path)->required();
  cmd_decide->add_option("-f,--formula", formula_text)->required();
  add_bound_flags(cmd_decide, common);

  auto* cmd_psi = app.add_subcommand("psi", "print the representing formula of an FKD");
  cmd_psi->add_option("--fkd", fkd_path)->required();
  cmd_psi->add_option("-s,--signature", common.signature_path);
  cmd_psi->add_option("-t,--theory", common.theory_path);

  auto* cmd_consistent = app.add_subcommand("consistent", "check an FKD's consistency against a theory");
  cmd_consistent->add_option("--fkd", fkd_path)->required();
  cmd_consistent->add_option("-t,--theory", common.theory_path)->required();
  add_bound_flags(cmd_consistent, common);

  auto* cmd_construct = app.add_subcommand("construct", "run construction stages");
  cmd_construct->add_option("-t,--theory", common.theory_path)->required();
  cmd_construct->add_option("--stages", stages)->required();
  cmd_construct->add_option("--placement", placement)
      ->check(CLI::IsMember({"paper", "conservative"}));
  cmd_construct->add_option("--append-every", append_every);
  cmd_construct->add_option("--out-fkd", out_fkd)->default_val("fkd.json");
  cmd_construct->add_option("--out-trace", out_trace)->default_val("trace.jsonl");
  add_bound_flags(cmd_construct, common);

  auto* cmd_query = app.add_subcommand("query", "decidable truth query on the constructed model");
  cmd_query->add_option("-t,--theory", common.theory_path)->required();
  cmd_query->add_option("--world", world)->required();
  cmd_query->add_option("-f,--formula", formula_text)->required();
  cmd_query->add_option("--cache", cache_path)->default_val("cache.jsonl");
  cmd_query->add_option("--placement", placement)->check(CLI::IsMember({"paper", "conservative"}));
  cmd_query->add_option("--append-every", append_every);
  add_bound_flags(cmd_query, common);

  auto* cmd_export = app.add_subcommand("export", "export a model or FKD to DOT");
  cmd_export->add_option("--fkd", fkd_path);
  cmd_export->add_option("--model", model_path);
  cmd_export->add_option("-s,--signature", common.signature_path);
  cmd_export->add_option("-t,--theory", common.theory_path);
  cmd_export->add_option("--format", format)->check(CLI::IsMember({"dot"}));

  CLI11_PARSE(app, argc, argv);

  try {
    kf::RunFlags flags;
    flags.placement = placement == "paper" ? kf::Placement::Paper : kf::Placement::Conservative;
    flags.append_every = append_every;

    if (cmd_parse->parsed()) {
      kf::Signature sig = load_signature(common);
      kf::FormulaPtr f = kf::parse(formula_text, sig);
      std::cout << (full_parens ? kf::print_full(f) : kf::print(f)) << "\n";
      return 0;
    }

    if (cmd_decide->parsed()) {
      kf::Theory t = load_theory(common.theory_path);
      kf::FormulaPtr f = kf::parse(formula_text, t.sig);
      kf::Verdict v = kf::entails_linear(t, f, bounds_of(common), options_of(common));
      nlohmann::ordered_json out = v.to_json();
      kf::ResolvedBounds rb = kf::resolve_bounds(t, f, bounds_of(common), options_of(common));
      out["bounds_used"] = {{"max_prefix", rb.max_prefix},
                            {"max_loop", rb.max_loop},
                            {"max_domain", rb.max_domain},
                            {"propositional", rb.propositional},
                            {"covers_completeness", rb.covers_completeness}};
      std::cout << out.dump(2) << "\n";
      return exit_for(v.kind);
    }

    if (cmd_psi->parsed()) {
      kf::Signature sig = load_signature(common);
      kf::LinearFKD d = kf::LinearFKD::from_json(load_json(fkd_path), sig);
      std::cout << kf::print(kf::representing_formula(d, sig)) << "\n";
      return 0;
    }

    if (cmd_consistent->parsed()) {
      kf::Theory t = load_theory(common.theory_path);
      kf::LinearFKD d = kf::LinearFKD::from_json(load_json(fkd_path), t.sig);
      try {
        bool ok = kf::is_T_consistent(d, t, bounds_of(common), options_of(common));
        std::cout << (ok ? "consistent" : "inconsistent") << "\n";
        return ok ? 0 : 1;
      } catch (const kf::OracleExhausted& e) {
        std::cerr << "exhausted: " << e.what() << "\n";
        return kExitExhausted;
      }
    }

    if (cmd_construct->parsed()) {
      kf::Theory t = load_theory(common.theory_path);
      kf::RunResult rr;
      try {
        rr = kf::run(t, stages, bounds_of(common), options_of(common), flags);
      } catch (const kf::InconsistentTheory& e) {
        std::cerr << "inconsistent theory: " << e.what() << "\n";
        return kExitInconsistentTheory;
      }
      {
        std::ofstream tr(out_trace, std::ios::trunc);
        for (const auto& rec : rr.trace) tr << rec.to_json().dump() << "\n";
      }
      {
        std::ofstream fk(out_fkd, std::ios::trunc);
        fk << rr.state.snapshot().to_json().dump(2) << "\n";
      }
      std::cout << "stages=" << stages << " worlds=" << rr.state.world_count() << "\n";
      return 0;
    }

    if (cmd_query->parsed()) {
      kf::Theory t = load_theory(common.theory_path);
      kf::FormulaPtr f = kf::parse(formula_text, t.sig);
      FileLock lock(cache_path);
      kf::ConstructionState st;
      try {
        st = kf::ConstructionState::init(t, bounds_of(common), options_of(common), flags);
      } catch (const kf::InconsistentTheory& e) {
        std::cerr << "inconsistent theory: " << e.what() << "\n";
        return kExitInconsistentTheory;
      }
      {
        std::ifstream in(cache_path);
        if (in) replay_trace_stream(st, in);
      }
      kf::ConstructedModel model(std::move(st));
      std::ofstream out(cache_path, std::ios::app);
      FileTraceSink sink(out);
      bool v = model.query_truth(world, f, &sink);
      std::cout << (v ? "true" : "false") << "\n";
      return 0;
    }

    if (cmd_export->parsed()) {
      if (!fkd_path.empty()) {
        kf::Signature sig = load_signature(common);
        kf::LinearFKD d = kf::LinearFKD::from_json(load_json(fkd_path), sig);
        std::cout << d.to_dot();
        return 0;
      }
      if (!model_path.empty()) {
        kf::LassoModel m = kf::LassoModel::from_json(load_json(model_path));
        std::cout << m.to_dot();
        return 0;
      }
      std::cerr << "export: need --fkd or --model\n";
      return kExitUsage;
    }
  } catch (const kf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitData;
  } catch (const kf::JsonError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const kf::SignatureError& e) {
    std::cerr << "signature error: " << e.what() << "\n";
    return kExitData;
  } catch (const kf::OracleExhausted& e) {
    std::cerr << "exhausted: " << e.what() << "\n";
    return kExitExhausted;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitNoInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "json error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
