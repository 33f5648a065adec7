#include "reggio/machine.hpp"

#include <deque>

namespace reggio {

Value* Object::field(const std::string& f) {
  for (auto& [n, v] : fields)
    if (n == f) return &v;
  return nullptr;
}

const Value* Object::field(const std::string& f) const {
  for (auto& [n, v] : fields)
    if (n == f) return &v;
  return nullptr;
}

Config Config::initial() {
  Config c;
  Frame f;
  f.r = 0;
  c.stack.push_back(f);
  c.open[0] = {};
  return c;
}

std::vector<Rid> Config::region_stack() const {
  std::vector<Rid> rs;
  for (auto& f : stack) rs.push_back(f.r);
  return rs;
}

std::string Effect::name() const {
  static const char* n[] = {"load",  "swap",  "halloc", "salloc", "enter", "badenter", "exit",
                            "freeze", "merge", "cast",   "nocast", "bind",  "eps"};
  return n[kind];
}

std::vector<std::string> Effect::rendered_args() const {
  std::vector<std::string> a;
  auto uses = [&](const std::vector<Use>& us) {
    for (auto& u : us) a.push_back(pretty(u));
  };
  switch (kind) {
    case Load: a = {x, pretty(lv)}; break;
    case Swap: a = {x, pretty(lv), pretty(use)}; break;
    case Halloc:
    case Salloc:
      a = {x, cap_name(k), cls};
      uses(args);
      break;
    case Enter:
      a = {x, cap_name(k), pretty(lv)};
      for (auto& [n, u] : binds) a.push_back(n + "=" + pretty(u));
      break;
    case BadEnter: a = {pretty(lv)}; break;
    case Exit: a = {x, pretty(use), pretty(lv), w + ".val"}; break;
    case Freeze:
    case Merge: a = {x, pretty(use)}; break;
    case Cast:
    case NoCast: a = {x, pretty(use), show(ty)}; break;
    case Bind:
      for (auto& [n, u] : binds) a.push_back(n + "=" + pretty(u));
      break;
    case Eps: break;
  }
  return a;
}

std::vector<std::string> Bugs::names() {
  return {"skip-tmp-invalidation", "mut-cross-region-write", "shallow-freeze", "skip-bury",
          "reinstate-captured-iso", "wrong-vpa-row",         "skip-frame-pop"};
}

bool Bugs::set(const std::string& n) {
  if (n == "skip-tmp-invalidation") skip_tmp_invalidation = true;
  else if (n == "mut-cross-region-write") mut_cross_region_write = true;
  else if (n == "shallow-freeze") shallow_freeze = true;
  else if (n == "skip-bury") skip_bury = true;
  else if (n == "reinstate-captured-iso") reinstate_captured_iso = true;
  else if (n == "wrong-vpa-row") wrong_vpa_row = true;
  else if (n == "skip-frame-pop") skip_frame_pop = true;
  else return false;
  return true;
}

bool Bugs::any() const {
  return skip_tmp_invalidation || mut_cross_region_write || shallow_freeze || skip_bury ||
         reinstate_captured_iso || wrong_vpa_row || skip_frame_pop;
}

std::optional<Cap> Machine::adapt_cap(Cap outer, Cap inner) const {
  if (bugs_.wrong_vpa_row && outer == Cap::Paused && inner == Cap::Mut) return Cap::Mut;
  return vpa(outer, inner);
}

std::optional<Value> Machine::get(VarMap& f, const Use& u) const {
  auto it = f.find(u.var);
  if (it == f.end() || !it->second) return std::nullopt;
  Value v = *it->second;
  if (u.drop) {
    if (!bugs_.skip_bury) it->second.reset();
    return v;
  }
  if (v.k == Cap::Var || v.k == Cap::Iso) return std::nullopt;
  return v;
}

Value Machine::get_or_stuck(VarMap& f, const Use& u) const {
  auto v = get(f, u);
  if (!v) throw Stuck{"cannot read " + pretty(u)};
  return *v;
}

void Machine::bind(Frame& f, const std::string& x, Value v) const {
  if (f.vars.count(x)) throw Stuck{"rebinding " + x};
  f.vars[x] = v;
}

const Object* Machine::load(const Config& c, Oid id, bool all) const {
  for (auto it = c.stack.rbegin(); it != c.stack.rend(); ++it) {
    auto o = it->temps.find(id);
    if (o != it->temps.end()) return &o->second;
  }
  for (auto* h : {&c.open, &c.frozen}) {
    for (auto& [r, s] : *h) {
      auto o = s.find(id);
      if (o != s.end()) return &o->second;
    }
  }
  if (all)
    for (auto& [r, s] : c.closed) {
      auto o = s.find(id);
      if (o != s.end()) return &o->second;
    }
  return nullptr;
}

Object* Machine::load_mut(Config& c, Oid id) const {
  for (auto it = c.stack.rbegin(); it != c.stack.rend(); ++it) {
    auto o = it->temps.find(id);
    if (o != it->temps.end()) return &o->second;
  }
  for (auto& [r, s] : c.open) {
    auto o = s.find(id);
    if (o != s.end()) return &o->second;
  }
  return nullptr;
}

std::optional<Rid> Machine::region_of(const Config& c, Oid id) const {
  for (auto& f : c.stack)
    if (f.temps.count(id)) return f.r;
  for (auto* h : {&c.open, &c.closed, &c.frozen})
    for (auto& [r, s] : *h)
      if (s.count(id)) return r;
  return std::nullopt;
}

std::set<Rid> Machine::reachable_regions(const Config& c, Rid root) const {
  std::set<Rid> seen{root};
  std::deque<Rid> work{root};
  std::set<Rid> out;
  while (!work.empty()) {
    Rid r = work.front();
    work.pop_front();
    const Store* s = nullptr;
    for (auto* h : {&c.closed, &c.frozen, &c.open}) {
      auto it = h->find(r);
      if (it != h->end()) s = &it->second;
    }
    if (!s) continue;
    for (auto& [id, o] : *s)
      for (auto& [f, v] : o.fields) {
        auto tr = region_of(c, v.id);
        if (tr && !seen.count(*tr) && !c.open.count(*tr)) {
          seen.insert(*tr);
          out.insert(*tr);
          work.push_back(*tr);
        }
      }
  }
  return out;
}

Oid Machine::bridge_target(const Config& c, const Effect& e, Value* holder_val) const {
  auto& vars = c.top().vars;
  auto it = vars.find(e.lv.var);
  if (it == vars.end() || !it->second) return 0;
  auto* o = load(c, it->second->id, false);
  if (!o) return 0;
  auto* fv = o->field(e.lv.field);
  if (!fv) return 0;
  if (holder_val) *holder_val = *it->second;
  return fv->id;
}

bool Machine::enter_enabled(const Config& c, const Effect& e) const {
  Oid b = bridge_target(c, e, nullptr);
  if (!b) return false;
  for (auto& [r, s] : c.closed)
    if (s.count(b)) return true;
  return false;
}

bool Machine::cast_enabled(const Config& c, const Effect& e) const {
  auto& vars = c.top().vars;
  auto it = vars.find(e.use.var);
  if (it == vars.end() || !it->second) return false;
  auto* o = load(c, it->second->id, true);
  if (!o) return false;
  for (auto* l : leaves(e.ty))
    if (!l->is_cell() && l->cap == it->second->k && l->cls == o->tag) return true;
  return false;
}

void Machine::step(Config& c, const Effect& e) const {
  Frame& top = c.top();
  switch (e.kind) {
    case Effect::Eps:
      return;
    case Effect::Load: {
      auto it = top.vars.find(e.lv.var);
      if (it == top.vars.end() || !it->second) throw Stuck{"load through undefined " + e.lv.var};
      auto* o = load(c, it->second->id);
      if (!o) throw Stuck{"load: dangling object"};
      auto* fv = o->field(e.lv.field);
      if (!fv) throw Stuck{"load: no field " + e.lv.field};
      auto k = adapt_cap(it->second->k, fv->k);
      if (!k) throw Stuck{"load: viewpoint undefined"};
      bind(top, e.x, Value{*k, fv->id});
      return;
    }
    case Effect::Swap: {
      Value v = get_or_stuck(top.vars, e.use);
      auto it = top.vars.find(e.lv.var);
      if (it == top.vars.end() || !it->second) throw Stuck{"swap through undefined " + e.lv.var};
      Oid id = it->second->id;
      Object* o = nullptr;
      auto t = top.temps.find(id);
      if (t != top.temps.end()) {
        o = &t->second;
      } else {
        for (auto& [r, s] : c.open) {
          auto h = s.find(id);
          if (h != s.end()) o = &h->second;
        }
      }
      if (!o) throw Stuck{"swap: target not in the active frame or an open region"};
      Value* fv = o->field(e.lv.field);
      if (!fv) throw Stuck{"swap: no field " + e.lv.field};
      Value old = *fv;
      *fv = v;
      bind(top, e.x, old);
      return;
    }
    case Effect::Halloc:
    case Effect::Salloc: {
      Object o;
      o.tag = e.cls;
      auto names = ct_.field_names(e.cls);
      if (names.size() != e.args.size()) throw Stuck{"alloc: arity"};
      for (size_t i = 0; i < names.size(); ++i) o.fields.emplace_back(names[i], get_or_stuck(top.vars, e.args[i]));
      Oid id = c.next_oid++;
      if (e.kind == Effect::Salloc) {
        if (e.k != Cap::Tmp && e.k != Cap::Var) throw Stuck{"salloc capability"};
        top.temps[id] = std::move(o);
      } else if (e.k == Cap::Mut) {
        Rid r = bugs_.mut_cross_region_write ? c.stack.front().r : top.r;
        c.open[r][id] = std::move(o);
      } else if (e.k == Cap::Iso) {
        Rid r = c.next_rid++;
        c.closed[r][id] = std::move(o);
      } else {
        throw Stuck{"halloc capability"};
      }
      bind(top, e.x, Value{e.k, id});
      return;
    }
    case Effect::Enter: {
      if (!enter_enabled(c, e)) throw Stuck{"enter: bridge region is not closed"};
      std::vector<std::pair<std::string, Value>> caps;
      EntryDesc ed;
      for (auto& [n, u] : e.binds) {
        Value v = get_or_stuck(top.vars, u);
        if (v.k != Cap::Iso) {
          auto k = adapt_cap(Cap::Paused, v.k);
          if (!k) throw Stuck{"enter: cannot pause " + n};
          v.k = *k;
        }
        caps.emplace_back(n, v);
        ed.captured.emplace_back(n, u.var);
      }
      Value holder;
      Oid b = bridge_target(c, e, &holder);
      if (!b) throw Stuck{"enter: bridge lost"};
      Rid r = *region_of(c, b);
      c.open[r] = std::move(c.closed[r]);
      c.closed.erase(r);
      Frame f;
      f.r = r;
      Oid cellid = c.next_oid++;
      f.temps[cellid] = Object{kCell, {{kVal, Value{Cap::Mut, b}}}};
      for (auto& [n, v] : caps) bind(f, n, v);
      bind(f, e.x, Value{e.k, cellid});
      ed.var = e.lv.var;
      ed.field = e.lv.field;
      ed.holder = holder.id;
      f.entry = ed;
      c.stack.push_back(std::move(f));
      return;
    }
    case Effect::BadEnter:
      if (!bridge_target(c, e, nullptr) || enter_enabled(c, e)) throw Stuck{"badenter not enabled"};
      return;
    case Effect::Exit: {
      if (c.stack.size() < 2) throw Stuck{"exit from the root frame"};
      Frame popped = c.stack.back();
      Value v = get_or_stuck(popped.vars, e.use);
      auto wv = popped.vars.find(e.w);
      if (wv == popped.vars.end() || !wv->second) throw Stuck{"exit: bridge cell undefined"};
      auto ct = popped.temps.find(wv->second->id);
      if (ct == popped.temps.end()) throw Stuck{"exit: bridge cell not in the frame"};
      const Value* nb = ct->second.field(kVal);
      if (!nb) throw Stuck{"exit: malformed bridge cell"};
      Value newbridge = *nb;
      if (bugs_.skip_frame_pop) {
        c.stack.back().vars = popped.vars;
      } else {
        c.stack.pop_back();
      }
      Frame& below = bugs_.skip_frame_pop ? c.stack[c.stack.size() - 2] : c.stack.back();
      auto yv = below.vars.find(e.lv.var);
      if (yv == below.vars.end() || !yv->second) throw Stuck{"exit: " + e.lv.var + " undefined"};
      Object* holder = load_mut(c, yv->second->id);
      if (!holder) throw Stuck{"exit: holder not reachable"};
      Value* fv = holder->field(e.lv.field);
      if (!fv) throw Stuck{"exit: no field " + e.lv.field};
      fv->id = newbridge.id;
      c.closed[popped.r] = std::move(c.open[popped.r]);
      c.open.erase(popped.r);
      Frame& dest = c.stack.back();
      if (bugs_.skip_tmp_invalidation && !bugs_.skip_frame_pop)
        for (auto& [id, o] : popped.temps) dest.temps[id] = o;
      if (bugs_.reinstate_captured_iso && popped.entry)
        for (auto& [inner, outer] : popped.entry->captured) {
          auto iv = popped.vars.find(inner);
          auto ov = dest.vars.find(outer);
          if (iv != popped.vars.end() && iv->second && iv->second->k == Cap::Iso &&
              ov != dest.vars.end() && !ov->second)
            ov->second = iv->second;
        }
      bind(dest, e.x, v);
      return;
    }
    case Effect::Freeze:
    case Effect::Merge: {
      Value v = get_or_stuck(top.vars, e.use);
      if (v.k != Cap::Iso) throw Stuck{e.name() + ": not iso"};
      std::optional<Rid> r;
      for (auto& [rid, s] : c.closed)
        if (s.count(v.id)) r = rid;
      if (!r) throw Stuck{e.name() + ": region is not closed"};
      if (e.kind == Effect::Freeze) {
        std::set<Rid> all{*r};
        if (!bugs_.shallow_freeze)
          for (Rid n : reachable_regions(c, *r))
            if (c.closed.count(n)) all.insert(n);
        for (Rid n : all) {
          c.frozen[n] = std::move(c.closed[n]);
          c.closed.erase(n);
        }
        bind(top, e.x, Value{Cap::Imm, v.id});
      } else {
        auto& dst = c.open[top.r];
        for (auto& [id, o] : c.closed[*r]) dst[id] = o;
        c.closed.erase(*r);
        bind(top, e.x, Value{Cap::Mut, v.id});
      }
      return;
    }
    case Effect::Cast:
    case Effect::NoCast: {
      bool ok = cast_enabled(c, e);
      if (ok != (e.kind == Effect::Cast)) throw Stuck{e.name() + " not enabled"};
      Value v = get_or_stuck(top.vars, e.use);
      bind(top, e.x, v);
      return;
    }
    case Effect::Bind: {
      std::vector<Value> vs;
      for (auto& [n, u] : e.binds) vs.push_back(get_or_stuck(top.vars, u));
      for (size_t i = 0; i < vs.size(); ++i) bind(top, e.binds[i].first, vs[i]);
      return;
    }
  }
}

}  // namespace reggio
