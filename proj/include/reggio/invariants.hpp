#pragma once

#include <set>
#include <string>
#include <vector>

#include "reggio/machine.hpp"
#include "reggio/typecheck.hpp"

namespace reggio {

struct Loc {
  enum Kind { Root, Temp, Heap };
  Kind kind = Root;
  Rid r = 0;
  Oid id = 0;  // unused for Root
  std::string show() const;
};

struct Ref {
  int src = 0, dst = 0;  // indices into Graph::locs
  std::string label;
  Cap k = Cap::Mut;
};

struct Violation {
  std::string predicate;
  std::string clause;
  std::vector<std::string> refs;
  std::vector<Rid> regions;
};

struct Graph {
  std::vector<Loc> locs;
  std::vector<Ref> refs;
  std::vector<Violation> errors;  // ill-formed locations or dangling references

  int add_loc(Loc l);
  int find_root(Rid r) const;
  int find_obj(Oid id) const;
  void add_ref(int src, int dst, std::string label, Cap k);
  std::string show(const Ref& r) const;
};

// Region order: bottom of the stack first. a < b iff a sits deeper than b.
struct RegionOrder {
  std::vector<Rid> regions;
  bool contains(Rid r) const;
  bool lt(Rid a, Rid b) const;
  bool le(Rid a, Rid b) const { return a == b || lt(a, b); }
};

struct Report {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string json() const;
};

Graph build_graph(const Config& c);
RegionOrder region_order(const Config& c);

std::vector<Violation> capability_ok(const RegionOrder& rho, const std::set<Rid>& closed,
                                     const std::set<Rid>& frozen, const Graph& g);
std::vector<Violation> topology_ok(const RegionOrder& rho, const std::set<Rid>& frozen, const Graph& g);
std::vector<Violation> entrypoints_ok(const Config& c, const Graph& g);
std::vector<Violation> isolation_ok(const std::set<Rid>& closed, const Graph& g);

// Full well-formedness of a configuration against a context stack, in tag mode.
Report check_config_wf(const CtxStack& gs, const Config& c, const Machine& m);

// Graph-only checks, usable without typing information.
Report check_graph_wf(const Config& c);

// Evolves the context stack by the effect judgment. Throws TypeError if rejected.
CtxStack check_effect_wf(Checker& chk, const CtxStack& gs, const Effect& e);

}  // namespace reggio
