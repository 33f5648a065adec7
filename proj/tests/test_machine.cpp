#include <algorithm>

#include "doctest.h"
#include "reggio/command.hpp"
#include "reggio/invariants.hpp"
#include "util.hpp"

using namespace reggio;

namespace {

RunResult run(const std::string& name, CheckMode mode = CheckMode::EachStep, Bugs bugs = {}) {
  RunOptions o;
  o.check = mode;
  o.bugs = bugs;
  Program p = corpus(name);
  return run_program(p, o);
}

std::vector<std::string> effects(const Program& p) {
  std::vector<std::string> out;
  RunOptions o;
  run_program(p, o, [&](const StepInfo& s) { out.push_back(s.effect->name()); });
  return out;
}

}  // namespace

TEST_CASE("get: drop buries, plain reads refuse iso and var") {
  ClassTable ct;
  Machine m(ct);
  VarMap f;
  f["a"] = Value{Cap::Iso, 1};
  f["v"] = Value{Cap::Var, 2};
  f["t"] = Value{Cap::Tmp, 3};
  CHECK_FALSE(m.get(f, Use{false, "a", {}}).has_value());
  auto a = m.get(f, Use{true, "a", {}});
  REQUIRE(a.has_value());
  CHECK(*a == Value{Cap::Iso, 1});
  CHECK_FALSE(f["a"].has_value());
  CHECK_FALSE(m.get(f, Use{true, "a", {}}).has_value());
  CHECK_FALSE(m.get(f, Use{false, "v", {}}).has_value());
  CHECK(m.get(f, Use{false, "t", {}}) == Value{Cap::Tmp, 3});
  CHECK(f["t"].has_value());
  CHECK_FALSE(m.get(f, Use{false, "nope", {}}).has_value());
}

TEST_CASE("corpus outcomes under each-step checking") {
  struct Row {
    const char* file;
    Outcome out;
    long steps;
  };
  Row rows[] = {{"listing1.rgo", Outcome::Done, 17},    {"store_accept.rgo", Outcome::Done, 12},
                {"explore.rgo", Outcome::Done, 12},     {"bridge_swap.rgo", Outcome::Done, 14},
                {"deep_freeze.rgo", Outcome::Done, 6},  {"merge_nested.rgo", Outcome::Done, 5},
                {"reenter_open.rgo", Outcome::Failed, 9}};
  for (auto& r : rows) {
    CAPTURE(r.file);
    auto res = run(r.file);
    CHECK(outcome_name(res.outcome) == std::string(outcome_name(r.out)));
    CHECK(res.steps == r.steps);
    CHECK(res.report.ok());
  }
}

TEST_CASE("listing1 effect sequence") {
  Program p = corpus("listing1.rgo");
  std::vector<std::string> want = {"halloc", "freeze", "halloc", "freeze", "halloc", "salloc",
                                   "enter",  "halloc", "halloc", "load",   "swap",   "swap",
                                   "swap",   "swap",   "exit",   "swap",   "halloc"};
  CHECK(effects(p) == want);
}

TEST_CASE("deep freeze moves the whole chain") {
  auto res = run("deep_freeze.rgo");
  REQUIRE(res.outcome == Outcome::Done);
  auto& c = res.final_cfg;
  CHECK(c.closed.empty());
  // Unit, then c, b, a: four frozen regions, three of them the chain.
  CHECK(c.frozen.size() == 4);
  int links = 0;
  for (auto& [r, s] : c.frozen)
    for (auto& [id, o] : s) links += o.tag == "L";
  CHECK(links == 3);
}

TEST_CASE("shallow freeze bug leaves nested regions closed") {
  Bugs b;
  b.shallow_freeze = true;
  auto res = run("deep_freeze.rgo", CheckMode::Off, b);
  REQUIRE(res.outcome == Outcome::Done);
  CHECK(res.final_cfg.closed.size() == 2);
  CHECK_FALSE(check_graph_wf(res.final_cfg).ok());
}

TEST_CASE("merge keeps the nested region") {
  auto res = run("merge_nested.rgo");
  REQUIRE(res.outcome == Outcome::Done);
  auto& c = res.final_cfg;
  REQUIRE(c.closed.size() == 1);
  auto& [rid, store] = *c.closed.begin();
  REQUIRE(store.size() == 1);
  CHECK(store.begin()->second.tag == "L");
  // The merged object now lives in the root region and points at the closed one.
  int in_root = 0;
  for (auto& [id, o] : c.open.at(0))
    if (o.tag == "L") {
      ++in_root;
      auto* d = o.field("down");
      REQUIRE(d);
      CHECK(d->k == Cap::Iso);
      CHECK(store.count(d->id) == 1);
    }
  CHECK(in_root == 1);
  CHECK(rid != 0);
}

TEST_CASE("re-entering an open region fails at the inner enter") {
  Program p = corpus("reenter_open.rgo");
  std::vector<std::string> seq;
  RunOptions o;
  o.check = CheckMode::EachStep;
  auto res = run_program(p, o, [&](const StepInfo& s) {
    seq.push_back(s.effect->name() + " " + s.effect->lv.var + "." + s.effect->lv.field);
  });
  CHECK(res.outcome == Outcome::Failed);
  REQUIRE(!seq.empty());
  CHECK(seq.back().rfind("badenter x3", 0) == 0);
  CHECK(std::count_if(seq.begin(), seq.end(), [](auto& s) { return s.rfind("enter ", 0) == 0; }) == 2);
}

TEST_CASE("bare use is an empty run") {
  Program p;
  p.main = mk_use("x");
  int calls = 0;
  auto res = run_program(p, RunOptions{}, [&](const StepInfo&) { ++calls; });
  CHECK(res.outcome == Outcome::Done);
  CHECK(res.steps == 0);
  CHECK(calls == 0);
  CHECK(res.result_var == "x");
}

TEST_CASE("unbounded recursion hits the budget") {
  Program p = parse(
      "class A {}\nfn f(x: mut A): mut A { let y = f(x) in y }\n"
      "let a = new mut A() in\nlet b = f(a) in b");
  RunOptions o;
  o.budget = 500;
  o.check = CheckMode::EachStep;
  auto res = run_program(p, o);
  CHECK(res.outcome == Outcome::Budget);
  CHECK(res.steps == 500);
}

TEST_CASE("final-only checking agrees with each-step on the corpus") {
  for (auto* f : {"listing1.rgo", "bridge_swap.rgo", "explore.rgo", "store_accept.rgo"}) {
    CAPTURE(f);
    CHECK(run(f, CheckMode::Final).outcome == Outcome::Done);
    CHECK(run(f, CheckMode::Off).outcome == Outcome::Done);
  }
}

TEST_CASE("bug names") {
  Bugs b;
  CHECK_FALSE(b.any());
  CHECK(Bugs::names().size() == 7);
  for (auto& n : Bugs::names()) CHECK(Bugs{}.set(n));
  CHECK_FALSE(b.set("no-such-bug"));
  CHECK(b.set("wrong-vpa-row"));
  CHECK(b.wrong_vpa_row);
}
