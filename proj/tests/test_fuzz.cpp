#include "doctest.h"
#include "reggio/fuzz.hpp"
#include "reggio/typecheck.hpp"

using namespace reggio;

namespace {

Program gen(uint64_t seed) {
  GenConfig gc;
  gc.seed = seed;
  return generate(gc);
}

// Walks the top-level let spine and checks facts about each bound's typing.
int inversion_facts(const Program& p) {
  Checker chk(p);
  Ctx g;
  int checked = 0;
  for (const Expr* e = p.main.get(); e->kind == Expr::Let; e = e->body.get()) {
    auto& b = e->bound;
    auto r = chk.check_bound(g, b);
    TypeP before = b->use.var.empty() || !g.has(b->use.var) ? nullptr : g.get(b->use.var);
    switch (b->kind) {
      case Bound::Freeze:
        REQUIRE(before);
        CHECK(subtype(make_imm(before), r.type));
        ++checked;
        break;
      case Bound::Merge:
        REQUIRE(before);
        CHECK(subtype(make_mut(before), r.type));
        ++checked;
        break;
      case Bound::NewVar:
        REQUIRE(before);
        CHECK(equiv(r.type, cell(Cap::Var, before)));
        ++checked;
        break;
      case Bound::New:
        CHECK(same(r.type, leaf(b->cap, b->cls)));
        ++checked;
        break;
      default:
        break;
    }
    if (b->kind != Bound::NewVar && b->use.drop) CHECK(r.out.get(b->use.var) == nullptr);
    g = r.out;
    g.set(e->x, r.type);
  }
  return checked;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  CHECK(pretty(gen(7)) == pretty(gen(7)));
  CHECK(pretty(gen(7)) != pretty(gen(8)));
}

TEST_CASE("generated programs type check") {
  for (uint64_t s = 1; s <= 300; ++s) {
    CAPTURE(s);
    CHECK(typechecks(gen(s)));
  }
}

TEST_CASE("generated programs survive a print and parse") {
  for (uint64_t s = 1; s <= 100; ++s) {
    CAPTURE(s);
    Program p = gen(s);
    Program q = parse(pretty(p));
    CHECK(pretty(q) == pretty(p));
    CHECK(typechecks(q));
  }
}

TEST_CASE("coverage of enter together with freeze or merge") {
  int hit = 0;
  for (uint64_t s = 1; s <= 1000; ++s) {
    Program p = gen(s);
    hit += has_enter(p) && has_freeze_or_merge(p);
  }
  CHECK(hit >= 300);
}

TEST_CASE("inversion facts hold on generated derivations") {
  int facts = 0;
  for (uint64_t s = 1; s <= 200; ++s) facts += inversion_facts(gen(s));
  CHECK(facts > 200);
}

TEST_CASE("small clean campaign") {
  CampaignOptions o;
  o.programs = 200;
  auto r = run_campaign(o);
  CHECK(r.run == 200);
  CHECK(r.ok());
  CHECK(r.done + r.failed + r.budget == 200);
}

TEST_CASE("skip-frame-pop is caught and shrinks below ten lets") {
  CampaignOptions o;
  o.programs = 1000;
  o.bugs.skip_frame_pop = true;
  auto r = run_campaign(o);
  REQUIRE_FALSE(r.ok());
  auto trig = [&](const Program& q) {
    auto x = soundness_run(q, o.budget, o.bugs);
    return x.outcome == Outcome::Stuck || x.outcome == Outcome::Violation;
  };
  Program small = shrink(r.first_bad_program, trig);
  CHECK(typechecks(small));
  CHECK(trig(small));
  CHECK(count_lets(small.main) < 10);
  CHECK(count_lets(small.main) <= count_lets(r.first_bad_program.main));
}

TEST_CASE("shrink leaves a program alone when it does not trigger") {
  Program p = gen(3);
  Program q = shrink(p, [](const Program&) { return false; });
  CHECK(pretty(q) == pretty(p));
}
