#include "reggio/invariants.hpp"

#include <map>

#include "json.hpp"

namespace reggio {

std::string Loc::show() const {
  switch (kind) {
    case Root: return "Root(" + std::to_string(r) + ")";
    case Temp: return "Temp(" + std::to_string(r) + ",#" + std::to_string(id) + ")";
    case Heap: return "Heap(" + std::to_string(r) + ",#" + std::to_string(id) + ")";
  }
  return "?";
}

int Graph::add_loc(Loc l) {
  locs.push_back(l);
  return static_cast<int>(locs.size()) - 1;
}

int Graph::find_root(Rid r) const {
  for (size_t i = 0; i < locs.size(); ++i)
    if (locs[i].kind == Loc::Root && locs[i].r == r) return static_cast<int>(i);
  return -1;
}

int Graph::find_obj(Oid id) const {
  for (size_t i = 0; i < locs.size(); ++i)
    if (locs[i].kind != Loc::Root && locs[i].id == id) return static_cast<int>(i);
  return -1;
}

void Graph::add_ref(int src, int dst, std::string label, Cap k) {
  refs.push_back(Ref{src, dst, std::move(label), k});
}

std::string Graph::show(const Ref& r) const {
  return locs[r.src].show() + " -" + r.label + ":" + cap_name(r.k) + "-> " + locs[r.dst].show();
}

bool RegionOrder::contains(Rid r) const {
  for (Rid x : regions)
    if (x == r) return true;
  return false;
}

bool RegionOrder::lt(Rid a, Rid b) const {
  int ia = -1, ib = -1;
  for (size_t i = 0; i < regions.size(); ++i) {
    if (regions[i] == a) ia = static_cast<int>(i);
    if (regions[i] == b) ib = static_cast<int>(i);
  }
  return ia >= 0 && ib >= 0 && ia < ib;
}

std::string Report::json() const {
  nlohmann::json j;
  j["verdict"] = ok() ? "ok" : "violation";
  j["violations"] = nlohmann::json::array();
  for (auto& v : violations)
    j["violations"].push_back(
        {{"predicate", v.predicate}, {"clause", v.clause}, {"refs", v.refs}, {"regions", v.regions}});
  return j.dump();
}

Graph build_graph(const Config& c) {
  Graph g;
  std::map<Oid, int> where;
  auto add_obj = [&](Loc l) {
    if (where.count(l.id)) {
      g.errors.push_back({"wf-graph", "unique-object", {l.show(), g.locs[where[l.id]].show()}, {l.r}});
      return;
    }
    where[l.id] = g.add_loc(l);
  };
  for (auto& f : c.stack) {
    if (g.find_root(f.r) >= 0) g.errors.push_back({"wf-graph", "unique-root", {}, {f.r}});
    g.add_loc(Loc{Loc::Root, f.r, 0});
    for (auto& [id, o] : f.temps) add_obj(Loc{Loc::Temp, f.r, id});
  }
  for (auto* h : {&c.open, &c.closed, &c.frozen})
    for (auto& [r, s] : *h)
      for (auto& [id, o] : s) add_obj(Loc{Loc::Heap, r, id});

  auto edge = [&](int src, const std::string& label, const Value& v) {
    auto it = where.find(v.id);
    if (it == where.end()) {
      g.errors.push_back({"wf-graph", "dangling", {g.locs[src].show() + " -" + label + "-> #" + std::to_string(v.id)},
                          {g.locs[src].r}});
      return;
    }
    g.add_ref(src, it->second, label, v.k);
  };
  for (auto& f : c.stack) {
    int root = g.find_root(f.r);
    for (auto& [x, s] : f.vars)
      if (s) edge(root, x, *s);
    for (auto& [id, o] : f.temps)
      for (auto& [fn, v] : o.fields) edge(where[id], fn, v);
  }
  for (auto* h : {&c.open, &c.closed, &c.frozen})
    for (auto& [r, s] : *h)
      for (auto& [id, o] : s)
        for (auto& [fn, v] : o.fields) edge(where[id], fn, v);
  return g;
}

RegionOrder region_order(const Config& c) { return RegionOrder{c.region_stack()}; }

std::vector<Violation> capability_ok(const RegionOrder& rho, const std::set<Rid>& cl,
                                     const std::set<Rid>& fr, const Graph& g) {
  std::vector<Violation> out;
  std::map<int, int> indegree;
  for (auto& r : g.refs) indegree[r.dst]++;
  for (auto& ref : g.refs) {
    const Loc& s = g.locs[ref.src];
    const Loc& d = g.locs[ref.dst];
    Rid rs = s.r, rd = d.r;
    bool order = true;
    switch (ref.k) {
      case Cap::Mut:
      case Cap::Tmp:
      case Cap::Var: order = rs == rd; break;
      case Cap::Paused: order = rho.lt(rd, rs); break;
      case Cap::Iso:
        order = rs != rd && (cl.count(rd) || rho.lt(rs, rd) || (fr.count(rd) && fr.count(rs)));
        break;
      case Cap::Imm: order = fr.count(rd) > 0; break;
    }
    if (!order) out.push_back({"capability", "region-order", {g.show(ref)}, {rs, rd}});

    bool loc = true;
    switch (ref.k) {
      case Cap::Mut: loc = d.kind == Loc::Heap; break;
      case Cap::Tmp: loc = s.kind != Loc::Heap && d.kind == Loc::Temp; break;
      case Cap::Var: loc = s.kind == Loc::Root && d.kind == Loc::Temp; break;
      case Cap::Paused: loc = s.kind != Loc::Heap && d.kind != Loc::Root; break;
      case Cap::Iso:
      case Cap::Imm: loc = d.kind == Loc::Heap; break;
    }
    if (!loc) out.push_back({"capability", "location", {g.show(ref)}, {rs, rd}});

    if (fr.count(rs) && !fr.count(rd)) out.push_back({"capability", "deep-freeze", {g.show(ref)}, {rs, rd}});

    if (ref.k == Cap::Var && indegree[ref.dst] > 1)
      out.push_back({"capability", "var-unique", {g.show(ref)}, {rs, rd}});
  }
  return out;
}

// Two distinct references into the same region are fine when either one is
// intra-region, the region is frozen, or either points down the region order.
// So a violation needs two references that are all of: external, into a
// non-frozen region, and not pointing downward.
std::vector<Violation> topology_ok(const RegionOrder& rho, const std::set<Rid>& fr, const Graph& g) {
  std::vector<Violation> out;
  // Literal pairwise form. le is reflexive, so intra-region refs pass the last disjunct.
  auto pw_ok = [&](size_t i, size_t j) {
    auto& a = g.refs[i];
    auto& b = g.refs[j];
    Rid s1 = g.locs[a.src].r, d1 = g.locs[a.dst].r;
    Rid s2 = g.locs[b.src].r, d2 = g.locs[b.dst].r;
    return i == j || d1 != d2 || fr.count(d1) || fr.count(d2) || rho.le(d1, s1) || rho.le(d2, s2);
  };
  for (size_t i = 0; i < g.refs.size(); ++i)
    for (size_t j = i + 1; j < g.refs.size(); ++j)
      if (!pw_ok(i, j))
        out.push_back({"topology", "pairwise", {g.show(g.refs[i]), g.show(g.refs[j])}, {g.locs[g.refs[i].dst].r}});
  return out;
}

std::vector<Violation> entrypoints_ok(const Config& c, const Graph& g) {
  std::vector<Violation> out;
  for (size_t i = 1; i < c.stack.size(); ++i) {
    auto& f = c.stack[i];
    auto& below = c.stack[i - 1];
    std::string tag = f.entry ? f.entry->var + "." + f.entry->field : "?";
    auto fail = [&](const std::string& why) {
      out.push_back({"entrypoints", why, {tag}, {below.r, f.r}});
    };
    if (!f.entry) {
      fail("missing-entry");
      continue;
    }
    auto yv = below.vars.find(f.entry->var);
    if (yv == below.vars.end() || !yv->second || yv->second->id != f.entry->holder) {
      fail("holder-variable");
      continue;
    }
    int h = g.find_obj(f.entry->holder);
    bool found = false;
    if (h >= 0)
      for (auto& ref : g.refs)
        if (ref.src == h && ref.label == f.entry->field && g.locs[ref.dst].kind == Loc::Heap &&
            g.locs[ref.dst].r == f.r)
          found = true;
    if (!found) fail("bridge-edge");
  }
  return out;
}

std::vector<Violation> isolation_ok(const std::set<Rid>& cl, const Graph& g) {
  std::vector<Violation> out;
  std::map<Rid, std::vector<const Ref*>> in;
  for (auto& ref : g.refs) {
    Rid rs = g.locs[ref.src].r, rd = g.locs[ref.dst].r;
    if (cl.count(rd) && rs != rd) in[rd].push_back(&ref);
  }
  for (auto& [r, refs] : in) {
    bool bad = refs.size() > 1;
    for (auto* ref : refs) bad = bad || ref->k != Cap::Iso;
    if (bad) {
      Violation v{"isolation", "unique-external", {}, {r}};
      for (auto* ref : refs) v.refs.push_back(g.show(*ref));
      out.push_back(v);
    }
  }
  return out;
}

namespace {

std::set<Rid> keys(const Heap& h) {
  std::set<Rid> s;
  for (auto& [r, st] : h) s.insert(r);
  return s;
}

bool value_matches(const Machine& m, const Config& c, const Value& v, const TypeP& t, int depth) {
  const Object* o = m.load(c, v.id, true);
  if (!o) return false;
  for (auto* l : leaves(t)) {
    if (l->cap != v.k) continue;
    if (l->is_cell()) {
      if (o->tag != kCell) continue;
      if (depth > 16) return true;
      const Value* inner = o->field(kVal);
      if (inner && value_matches(m, c, *inner, l->param, depth + 1)) return true;
    } else if (o->tag == l->cls) {
      return true;
    }
  }
  return false;
}

void check_store(const Machine& m, const Config& c, const Store& s, Rid r, std::vector<Violation>& out) {
  auto& ct = m.classes();
  for (auto& [id, o] : s) {
    std::string where = "#" + std::to_string(id) + ":" + o.tag;
    if (o.tag == kCell) {
      if (o.fields.size() != 1 || o.fields[0].first != kVal)
        out.push_back({"wf-store", "cell-shape", {where}, {r}});
      continue;
    }
    auto* cd = ct.find(o.tag);
    if (!cd || cd->fields.size() != o.fields.size()) {
      out.push_back({"wf-store", "class-shape", {where}, {r}});
      continue;
    }
    for (size_t i = 0; i < o.fields.size(); ++i) {
      if (o.fields[i].first != cd->fields[i].name) {
        out.push_back({"wf-store", "class-shape", {where}, {r}});
        continue;
      }
      if (!value_matches(m, c, o.fields[i].second, cd->fields[i].type, 0))
        out.push_back({"wf-store", "field-type", {where + "." + o.fields[i].first}, {r}});
    }
  }
}

}  // namespace

Report check_graph_wf(const Config& c) {
  Report rep;
  Graph g = build_graph(c);
  rep.violations = g.errors;
  auto rho = region_order(c);
  auto cl = keys(c.closed), fr = keys(c.frozen);
  auto a = capability_ok(rho, cl, fr, g);
  auto b = topology_ok(rho, fr, g);
  auto e = entrypoints_ok(c, g);
  auto i = isolation_ok(cl, g);
  for (auto* vs : {&a, &b, &e, &i}) rep.violations.insert(rep.violations.end(), vs->begin(), vs->end());
  return rep;
}

Report check_config_wf(const CtxStack& gs, const Config& c, const Machine& m) {
  Report rep = check_graph_wf(c);
  auto& out = rep.violations;
  auto rs = c.region_stack();
  std::set<Rid> rset(rs.begin(), rs.end());
  if (rset.size() != rs.size()) out.push_back({"wf-config", "distinct-stack", {}, rs});
  if (rset != keys(c.open)) out.push_back({"wf-config", "stack-is-open", {}, rs});
  for (auto& [r, s] : c.closed)
    if (c.open.count(r) || c.frozen.count(r)) out.push_back({"wf-config", "disjoint-heaps", {}, {r}});
  for (auto& [r, s] : c.frozen)
    if (c.open.count(r)) out.push_back({"wf-config", "disjoint-heaps", {}, {r}});
  if (gs.size() != c.stack.size()) {
    out.push_back({"wf-config", "stack-height", {std::to_string(gs.size()), std::to_string(c.stack.size())}, rs});
    return rep;
  }
  for (size_t i = 0; i < gs.size(); ++i) {
    auto& ctx = gs[i].ctx;
    auto& f = c.stack[i];
    if (i > 0 && f.entry && (gs[i].entry.var != f.entry->var || gs[i].entry.field != f.entry->field))
      out.push_back({"wf-config", "entry-tag", {gs[i].entry.var + "." + gs[i].entry.field}, {f.r}});
    if (ctx.size() != f.vars.size())
      out.push_back({"wf-frame", "domain", {ctx.show()}, {f.r}});
    for (auto& [x, t] : ctx.entries()) {
      auto it = f.vars.find(x);
      if (it == f.vars.end()) {
        out.push_back({"wf-frame", "domain", {x}, {f.r}});
        continue;
      }
      if (!t || !it->second) {
        if (t || it->second) out.push_back({"wf-frame", "undef", {x + ": " + show(t)}, {f.r}});
        continue;
      }
      if (!value_matches(m, c, *it->second, t, 0))
        out.push_back({"wf-frame", "value-type", {x + ": " + show(t)}, {f.r}});
    }
    check_store(m, c, f.temps, f.r, out);
  }
  for (auto* h : {&c.open, &c.closed, &c.frozen})
    for (auto& [r, s] : *h) check_store(m, c, s, r, out);
  return rep;
}

namespace {

void add_fresh(Ctx& g, const std::string& x, TypeP t) {
  if (g.has(x)) throw TypeError("wf-eff", {}, x + " is not fresh");
  g.set(x, std::move(t));
}

bool var_cell(const TypeP& t) {
  for (auto* l : leaves(t))
    if (!l->is_cell() || l->cap != Cap::Var) return false;
  return true;
}

}  // namespace

CtxStack check_effect_wf(Checker& chk, const CtxStack& gs0, const Effect& e) {
  CtxStack gs = gs0;
  Ctx& top = gs.back().ctx;
  auto run_bound = [&](std::shared_ptr<Bound> b) {
    auto r = chk.check_bound(top, b);
    top = r.out;
    add_fresh(top, e.x, r.type);
  };
  switch (e.kind) {
    case Effect::Eps:
    case Effect::BadEnter:
      return gs;
    case Effect::Load: {
      auto b = std::make_shared<Bound>();
      b->kind = Bound::Deref;
      b->lv = e.lv;
      run_bound(b);
      return gs;
    }
    case Effect::Swap: {
      auto b = std::make_shared<Bound>();
      b->kind = Bound::Assign;
      b->lv = e.lv;
      b->use = e.use;
      auto ty = top.get(e.lv.var);
      if (ty && e.lv.field == kVal && var_cell(ty)) b->lv.field.clear();
      run_bound(b);
      return gs;
    }
    case Effect::Halloc:
    case Effect::Salloc: {
      auto b = std::make_shared<Bound>();
      if (e.cls == kCell) {
        if (e.k != Cap::Var || e.args.size() != 1) throw TypeError("wf-eff-salloc", {}, "malformed Cell allocation");
        b->kind = Bound::NewVar;
        b->use = e.args[0];
      } else {
        if ((e.kind == Effect::Salloc) != (e.k == Cap::Tmp))
          throw TypeError("wf-eff-alloc", {}, "allocation kind does not match capability");
        b->kind = Bound::New;
        b->cap = e.k;
        b->cls = e.cls;
        b->args = e.args;
      }
      run_bound(b);
      return gs;
    }
    case Effect::Freeze:
    case Effect::Merge: {
      auto b = std::make_shared<Bound>();
      b->kind = e.kind == Effect::Freeze ? Bound::Freeze : Bound::Merge;
      b->use = e.use;
      run_bound(b);
      return gs;
    }
    case Effect::Cast:
    case Effect::NoCast: {
      auto r = chk.check_use(top, e.use);
      if (!classtype(e.ty)) throw TypeError("wf-eff-cast", {}, "target is not a class type");
      top = r.out;
      add_fresh(top, e.x, e.kind == Effect::Cast ? e.ty : r.type);
      return gs;
    }
    case Effect::Bind: {
      std::vector<TypeP> ts;
      Ctx cur = top;
      for (auto& [n, u] : e.binds) {
        auto r = chk.check_use(cur, u);
        ts.push_back(r.type);
        cur = r.out;
      }
      for (size_t i = 0; i < ts.size(); ++i) add_fresh(cur, e.binds[i].first, ts[i]);
      top = cur;
      return gs;
    }
    case Effect::Enter: {
      const std::string rule = "wf-eff-enter";
      Ctx body;
      for (auto& [n, u] : e.binds) {
        auto r = chk.check_use(top, u);
        top = r.out;
        TypeP t = cap({Cap::Iso}, r.type) ? r.type : adapt(Cap::Paused, r.type);
        if (!t) throw TypeError(rule, {}, "cannot capture " + show(r.type));
        add_fresh(body, n, t);
      }
      auto ty = top.get(e.lv.var);
      if (!ty) throw TypeError(rule, {}, e.lv.var + " is undefined");
      if (!is_open_type(ty)) throw TypeError(rule, {}, e.lv.var + " is not open");
      auto& ct = chk.program().classes;
      auto tf = ftype_union(ct, ty, e.lv.field);
      if (!tf || !cap({Cap::Iso}, tf)) throw TypeError(rule, {}, "entered field is not iso");
      TypeP tz;
      if (e.k == Cap::Var) {
        if (!var_cell(ty)) throw TypeError(rule, {}, e.lv.var + " is not a var Cell");
        tz = make_cell(make_mut(tf));
      } else if (e.k == Cap::Tmp) {
        tz = cell(Cap::Tmp, make_mut(tf));
      } else {
        throw TypeError(rule, {}, "bridge capability must be tmp or var");
      }
      add_fresh(body, e.x, tz);
      gs.push_back(CtxFrame{body, e.lv});
      return gs;
    }
    case Effect::Exit: {
      if (gs.size() < 2) throw TypeError("wf-eff-exit", {}, "exit from the root context");
      Ctx inner = gs.back().ctx;
      gs.pop_back();
      auto r = chk.check_use(inner, e.use);
      Ctx& below = gs.back().ctx;
      below = chk.exit_rebind(below, e.lv, r.out, e.w, r.type, {});
      add_fresh(below, e.x, r.type);
      return gs;
    }
  }
  return gs;
}

}  // namespace reggio
