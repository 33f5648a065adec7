#include <map>

#include "doctest.h"
#include "reggio/command.hpp"
#include "reggio/fuzz.hpp"
#include "reggio/invariants.hpp"
#include "util.hpp"

using namespace reggio;

namespace {

// A sample heap: R' (region 1) holds m and n, R (region 2) holds
// a, c and e, frozen regions 3 and 4 hold i and o. Region 0 is the root.
struct Scene {
  Graph g;
  int root, m, n, a, c, e, i, o;
  Scene() {
    root = g.add_loc({Loc::Root, 0, 0});
    m = g.add_loc({Loc::Heap, 1, 1});
    n = g.add_loc({Loc::Heap, 1, 2});
    a = g.add_loc({Loc::Heap, 2, 3});
    c = g.add_loc({Loc::Heap, 2, 4});
    e = g.add_loc({Loc::Heap, 2, 5});
    i = g.add_loc({Loc::Heap, 3, 6});
    o = g.add_loc({Loc::Heap, 4, 7});
    g.add_ref(root, m, "x", Cap::Iso);
    g.add_ref(m, n, "f", Cap::Mut);
    g.add_ref(m, a, "g", Cap::Iso);
    g.add_ref(a, c, "next", Cap::Mut);
    g.add_ref(c, e, "next", Cap::Mut);
    g.add_ref(e, a, "next", Cap::Mut);
  }
};

RegionOrder order(std::vector<Rid> rs) { return RegionOrder{std::move(rs)}; }

// The per-region reading of the pairwise rule: at most one reference into a
// region that is not internal, not into a frozen region and not downward.
bool counting_ok(const RegionOrder& rho, const std::set<Rid>& fr, const Graph& g) {
  std::map<Rid, int> up;
  for (auto& r : g.refs) {
    Rid s = g.locs[r.src].r, d = g.locs[r.dst].r;
    if (!fr.count(d) && !rho.le(d, s)) ++up[d];
  }
  for (auto& [r, k] : up)
    if (k > 1) return false;
  return true;
}

std::set<Rid> keys(const Heap& h) {
  std::set<Rid> out;
  for (auto& [r, s] : h) out.insert(r);
  return out;
}

}  // namespace

TEST_CASE("region order is bottom first") {
  auto rho = order({0, 1, 2});
  CHECK(rho.lt(0, 2));
  CHECK(rho.lt(1, 2));
  CHECK_FALSE(rho.lt(2, 1));
  CHECK(rho.le(2, 2));
  CHECK_FALSE(rho.le(5, 1));
  CHECK(rho.le(5, 5));
}

TEST_CASE("sample heap without extra references is fine") {
  Scene f;
  CHECK(topology_ok(order({0, 1, 2}), {3, 4}, f.g).empty());
}

TEST_CASE("scenario: e to n may coexist with another alias of n") {
  Scene f;
  f.g.add_ref(f.e, f.n, "back", Cap::Paused);
  int t = f.g.add_loc({Loc::Temp, 2, 8});
  f.g.add_ref(t, f.n, "val", Cap::Paused);
  CHECK(topology_ok(order({0, 1, 2}), {3, 4}, f.g).empty());
  // Only the downward clause saves it: with R opened first the pair is rejected.
  CHECK_FALSE(topology_ok(order({0, 2, 1}), {3, 4}, f.g).empty());
}

TEST_CASE("scenario: m to e next to m to a is rejected") {
  Scene f;
  f.g.add_ref(f.m, f.e, "h", Cap::Mut);
  auto vs = topology_ok(order({0, 1, 2}), {3, 4}, f.g);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].predicate == "topology");
  CHECK(vs[0].regions == std::vector<Rid>{2});
  CHECK(vs[0].refs.size() == 2);
}

TEST_CASE("scenario: a to i and o to i coexist because i is frozen") {
  Scene f;
  f.g.add_ref(f.a, f.i, "elem", Cap::Imm);
  f.g.add_ref(f.o, f.i, "val", Cap::Imm);
  CHECK(topology_ok(order({0, 1, 2}), {3, 4}, f.g).empty());
  CHECK_FALSE(topology_ok(order({0, 1, 2}), {}, f.g).empty());
}

TEST_CASE("capability: mut edges stay inside a region") {
  Scene f;
  f.g.add_ref(f.m, f.e, "h", Cap::Mut);
  auto vs = capability_ok(order({0, 1, 2}), {}, {3, 4}, f.g);
  bool found = false;
  for (auto& v : vs) found |= v.clause == "region-order";
  CHECK(found);
}

TEST_CASE("isolation corollary on the sample heap") {
  Scene f;
  CHECK(isolation_ok({2}, f.g).empty());
  f.g.add_ref(f.n, f.c, "h", Cap::Iso);
  CHECK_FALSE(isolation_ok({2}, f.g).empty());
}

TEST_CASE("listing1 final state is well formed") {
  Program p = corpus("listing1.rgo");
  RunOptions o;
  o.check = CheckMode::Final;
  auto r = run_program(p, o);
  REQUIRE(r.outcome == Outcome::Done);
  CHECK(r.report.ok());
  CHECK(check_graph_wf(r.final_cfg).ok());
}

TEST_CASE("report json shape") {
  Report r;
  CHECK(r.json() == R"({"verdict":"ok","violations":[]})");
  r.violations.push_back({"topology", "pairwise", {"a", "b"}, {2}});
  CHECK(r.json() ==
        R"({"verdict":"violation","violations":[{"clause":"pairwise","predicate":"topology","refs":["a","b"],"regions":[2]}]})");
}

TEST_CASE("pairwise topology agrees with the counting reading on reachable states") {
  int states = 0;
  for (uint64_t seed = 1; seed <= 150; ++seed) {
    GenConfig gc;
    gc.seed = seed;
    Program p = generate(gc);
    for (bool bug : {false, true}) {
      RunOptions o;
      o.budget = 2000;
      o.bugs.skip_tmp_invalidation = bug;
      run_program(p, o, [&](const StepInfo& s) {
        auto& c = *s.cfg;
        Graph g = build_graph(c);
        auto rho = region_order(c);
        auto fr = keys(c.frozen);
        CHECK(topology_ok(rho, fr, g).empty() == counting_ok(rho, fr, g));
        ++states;
      });
    }
  }
  CHECK(states > 1000);
}
