#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reggio/core.hpp"
#include "reggio/syntax.hpp"

namespace reggio {

using Oid = int;
using Rid = int;

struct Value {
  Cap k = Cap::Mut;
  Oid id = 0;
  bool operator==(const Value&) const = default;
};

// nullopt is UNDEF.
using Slot = std::optional<Value>;
using VarMap = std::map<std::string, Slot>;

struct Object {
  std::string tag;  // class name or "Cell"
  std::vector<std::pair<std::string, Value>> fields;

  Value* field(const std::string& f);
  const Value* field(const std::string& f) const;
  bool operator==(const Object&) const = default;
};

using Store = std::map<Oid, Object>;
using Heap = std::map<Rid, Store>;

// How a frame was entered: through y.f of the frame below, with y bound to
// the object holding the bridge reference.
struct EntryDesc {
  std::string var;
  std::string field;
  Oid holder = 0;
  std::vector<std::pair<std::string, std::string>> captured;  // inner name, outer name
};

struct Frame {
  Rid r = 0;
  Store temps;
  VarMap vars;
  std::optional<EntryDesc> entry;
};

struct Config {
  std::vector<Frame> stack;  // bottom first
  Heap open, closed, frozen;
  Oid next_oid = 1;
  Rid next_rid = 1;

  static Config initial();
  Frame& top() { return stack.back(); }
  const Frame& top() const { return stack.back(); }
  std::vector<Rid> region_stack() const;
};

struct Effect {
  enum Kind { Load, Swap, Halloc, Salloc, Enter, BadEnter, Exit, Freeze, Merge, Cast, NoCast, Bind, Eps };
  Kind kind = Eps;
  std::string x;          // destination; bridge variable w for Enter
  LVal lv;                // y.f source or target
  Use use;
  Cap k = Cap::Mut;       // Halloc/Salloc capability; Enter bridge kind (tmp or var)
  std::string cls;
  std::vector<Use> args;  // Halloc/Salloc
  std::vector<std::pair<std::string, Use>> binds;  // Bind, Enter captures
  TypeP ty;               // Cast/NoCast target
  std::string w;          // Exit bridge variable

  std::string name() const;
  std::vector<std::string> rendered_args() const;
};

// Planted bugs for mutation testing of the invariant suite.
struct Bugs {
  bool skip_tmp_invalidation = false;
  bool mut_cross_region_write = false;
  bool shallow_freeze = false;
  bool skip_bury = false;
  bool reinstate_captured_iso = false;
  bool wrong_vpa_row = false;
  bool skip_frame_pop = false;

  static std::vector<std::string> names();
  bool set(const std::string& name);
  bool any() const;
};

struct Stuck {
  std::string why;
};

class Machine {
 public:
  Machine(const ClassTable& ct, Bugs bugs = {}) : ct_(ct), bugs_(bugs) {}

  // Premises that pick one of the nondeterministic branches.
  bool enter_enabled(const Config& c, const Effect& e) const;
  bool cast_enabled(const Config& c, const Effect& e) const;

  // Throws Stuck when no region rule applies.
  void step(Config& c, const Effect& e) const;

  std::optional<Value> get(VarMap& f, const Use& u) const;
  const Object* load(const Config& c, Oid id, bool include_frozen = true) const;
  Object* load_mut(Config& c, Oid id) const;
  std::optional<Rid> region_of(const Config& c, Oid id) const;
  std::set<Rid> reachable_regions(const Config& c, Rid r) const;

  const ClassTable& classes() const { return ct_; }
  const Bugs& bugs() const { return bugs_; }

 private:
  const ClassTable& ct_;
  Bugs bugs_;

  std::optional<Cap> adapt_cap(Cap outer, Cap inner) const;
  Value get_or_stuck(VarMap& f, const Use& u) const;
  void bind(Frame& f, const std::string& x, Value v) const;
  Oid bridge_target(const Config& c, const Effect& e, Value* holder_val) const;
};

}  // namespace reggio
