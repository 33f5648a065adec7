#include "reggio/typecheck.hpp"

#include <set>

namespace reggio {

bool Ctx::has(const std::string& x) const {
  for (auto& [n, t] : e_)
    if (n == x) return true;
  return false;
}

TypeP Ctx::get(const std::string& x) const {
  for (auto& [n, t] : e_)
    if (n == x) return t;
  return nullptr;
}

void Ctx::set(const std::string& x, TypeP t) {
  for (auto& [n, ty] : e_)
    if (n == x) {
      ty = std::move(t);
      return;
    }
  e_.emplace_back(x, std::move(t));
}

void Ctx::remove(const std::string& x) {
  for (auto it = e_.begin(); it != e_.end(); ++it)
    if (it->first == x) {
      e_.erase(it);
      return;
    }
}

std::string Ctx::show() const {
  std::string s;
  for (auto& [n, t] : e_) s += (s.empty() ? "" : ", ") + n + ": " + reggio::show(t);
  return s;
}

Ctx merge_contexts(const Ctx& a, const Ctx& b) {
  if (a.size() != b.size()) throw TypeError("cmd-ty-merge-ctx", {}, "branch contexts differ in domain");
  Ctx r;
  for (size_t i = 0; i < a.size(); ++i) {
    auto& [n1, t1] = a.entries()[i];
    auto& [n2, t2] = b.entries()[i];
    if (n1 != n2) throw TypeError("cmd-ty-merge-ctx", {}, "branch contexts differ in domain");
    r.set(n1, (t1 && t2) ? join(t1, t2) : nullptr);
  }
  return r;
}

void Checker::err(const std::string& rule, Pos p, const std::string& m) const {
  throw TypeError(rule, p, m);
}

TypeP Checker::need(const Ctx& g, const std::string& x, const std::string& rule, Pos p) const {
  if (!g.has(x)) err(rule, p, "unknown variable " + x);
  auto t = g.get(x);
  if (!t) err(rule, p, "variable " + x + " is buried");
  return t;
}

Typed Checker::check_use(const Ctx& g, const Use& u) {
  if (u.drop) {
    auto t = need(g, u.var, "cmd-ty-use-drop", u.pos);
    Ctx o = g;
    o.set(u.var, nullptr);
    return {t, o};
  }
  auto t = need(g, u.var, "cmd-ty-use-keep", u.pos);
  if (!cap_not({Cap::Iso, Cap::Var}, t))
    err("cmd-ty-use-keep", u.pos, u.var + " has type " + show(t) + " and must be read with drop");
  return {t, g};
}

Typed Checker::thread_uses(const Ctx& g, const std::vector<Use>& us, std::vector<TypeP>& ts,
                           const std::string& rule) {
  std::set<std::string> dropped;
  Ctx cur = g;
  for (auto& u : us) {
    if (u.drop && !dropped.insert(u.var).second)
      err(rule, u.pos, "drop " + u.var + " appears twice");
    auto r = check_use(cur, u);
    ts.push_back(r.type);
    cur = r.out;
  }
  return {nullptr, cur};
}

Typed Checker::check_new(const Ctx& g, const BoundP& b) {
  const std::string rule = "cmd-ty-new";
  if (b->cap != Cap::Mut && b->cap != Cap::Tmp && b->cap != Cap::Iso)
    err(rule, b->pos, std::string("cannot allocate with capability ") + cap_name(b->cap));
  if (b->cls == kCell) err(rule, b->pos, "Cell objects are created with var");
  auto* c = p_.classes.find(b->cls);
  if (!c) err(rule, b->pos, "unknown class " + b->cls);
  if (c->fields.size() != b->args.size())
    err(rule, b->pos, b->cls + " expects " + std::to_string(c->fields.size()) + " arguments");
  std::vector<TypeP> ts;
  auto r = thread_uses(g, b->args, ts, rule);
  for (size_t i = 0; i < ts.size(); ++i) {
    auto& ft = c->fields[i].type;
    Pos ap = b->args[i].pos;
    if (!subtype(ts[i], ft))
      err(rule, ap, "argument " + show(ts[i]) + " is not a subtype of field " + c->fields[i].name +
                        ": " + show(ft));
    if (b->cap == Cap::Iso && !cap({Cap::Iso, Cap::Imm}, ts[i]))
      err(rule, ap, "arguments of new iso must be iso or imm, got " + show(ts[i]));
    if (b->cap == Cap::Mut && !cap_not({Cap::Tmp, Cap::Paused}, ts[i]))
      err(rule, ap, "a mut object cannot store " + show(ts[i]));
  }
  return {leaf(b->cap, b->cls), r.out};
}

Typed Checker::check_bound(const Ctx& g, const BoundP& b) {
  switch (b->kind) {
    case Bound::Deref: {
      if (b->lv.has_field()) {
        auto t = need(g, b->lv.var, "cmd-ty-deref-field", b->pos);
        if (!cap_not({Cap::Iso}, t))
          err("cmd-ty-deref-field", b->pos, "cannot read through iso " + b->lv.var + "; enter it");
        auto r = fresult(p_.classes, t, b->lv.field);
        if (!r)
          err("cmd-ty-deref-field", b->pos,
              "field " + b->lv.field + " of " + show(t) + " is missing or not readable");
        return {r, g};
      }
      auto t = need(g, b->lv.var, "cmd-ty-deref-var", b->pos);
      for (auto* l : leaves(t))
        if (!l->is_cell()) err("cmd-ty-deref-var", b->pos, b->lv.var + " is not a Cell: " + show(t));
      auto r = fresult(p_.classes, t, kVal);
      if (!r) err("cmd-ty-deref-var", b->pos, "contents of " + show(t) + " are not readable");
      return {r, g};
    }
    case Bound::Assign: {
      if (b->lv.has_field()) {
        const std::string rule = "cmd-ty-assign-field";
        auto u = check_use(g, b->use);
        auto tx = need(u.out, b->lv.var, rule, b->pos);
        if (!cap({Cap::Mut, Cap::Tmp}, tx))
          err(rule, b->pos, b->lv.var + " has type " + show(tx) + "; fields are written through mut or tmp");
        TypeP res;
        for (auto* l : leaves(tx)) {
          auto ft = p_.classes.ftype(*l, b->lv.field);
          if (!ft) err(rule, b->pos, "no field " + b->lv.field + " in " + l->cls);
          if (!subtype(u.type, ft))
            err(rule, b->use.pos, show(u.type) + " is not a subtype of " + show(ft));
          if (l->cap == Cap::Mut && !cap_not({Cap::Tmp, Cap::Paused}, u.type))
            err(rule, b->use.pos, "a mut object cannot store " + show(u.type));
          res = join(res, ft);
        }
        return {res, u.out};
      }
      const std::string rule = "cmd-ty-assign-var";
      auto u = check_use(g, b->use);
      auto tx = need(u.out, b->lv.var, rule, b->pos);
      bool ok = cap({Cap::Var}, tx);
      for (auto* l : leaves(tx)) ok = ok && l->is_cell();
      if (!ok) {
        std::string k = leaves(tx).size() == 1 ? cap_name(leaves(tx)[0]->cap) : show(tx);
        err(rule, b->pos, "the " + b->lv.var + " storage location is " + k + ", not var");
      }
      if (!cap_not({Cap::Var}, u.type)) err(rule, b->use.pos, "cannot store a var reference");
      auto res = ftype_union(p_.classes, tx, kVal);
      Ctx o = u.out;
      o.set(b->lv.var, make_cell(u.type));
      last_assign_[b->lv.var] = b->pos;
      return {res, o};
    }
    case Bound::Call: {
      const std::string rule = "cmd-ty-call";
      auto* f = p_.fun(b->fn);
      if (!f) err(rule, b->pos, "unknown function " + b->fn);
      if (f->params.size() != b->args.size())
        err(rule, b->pos, b->fn + " expects " + std::to_string(f->params.size()) + " arguments");
      std::vector<TypeP> ts;
      auto r = thread_uses(g, b->args, ts, rule);
      for (size_t i = 0; i < ts.size(); ++i)
        if (!subtype(ts[i], f->params[i].second))
          err(rule, b->args[i].pos,
              show(ts[i]) + " is not a subtype of parameter " + show(f->params[i].second));
      return {f->result, r.out};
    }
    case Bound::NewVar: {
      auto u = check_use(g, b->use);
      if (!cap_not({Cap::Var}, u.type)) err("cmd-ty-var", b->pos, "a Cell cannot hold a var reference");
      return {cell(Cap::Var, u.type), u.out};
    }
    case Bound::New:
      return check_new(g, b);
    case Bound::Freeze:
    case Bound::Merge: {
      bool fz = b->kind == Bound::Freeze;
      std::string rule = fz ? "cmd-ty-freeze" : "cmd-ty-merge";
      auto u = check_use(g, b->use);
      if (!cap({Cap::Iso}, u.type)) err(rule, b->use.pos, "expected iso, got " + show(u.type));
      return {fz ? make_imm(u.type) : make_mut(u.type), u.out};
    }
    case Bound::Enter:
      return check_enter(g, b);
    case Bound::Nested:
      return check_expr(g, b->body);
    case Bound::Entered:
      err("cmd-dyn-ty-entered", b->pos, "entered block outside a dynamic expression");
  }
  err("internal", b->pos, "unknown bound expression");
}

Typed Checker::check_enter(const Ctx& g, const BoundP& b) {
  bool field = b->lv.has_field();
  const std::string rule = field ? "cmd-ty-enter-field" : "cmd-ty-enter-var";
  Ctx outer = g;
  Ctx body;
  std::set<std::string> names{b->param};
  std::set<std::string> dropped;
  for (auto& c : b->caps) {
    if (!names.insert(c.name).second) err(rule, c.use.pos, "capture name " + c.name + " is not distinct");
    if (c.use.drop && !dropped.insert(c.use.var).second)
      err(rule, c.use.pos, "drop " + c.use.var + " appears twice");
    auto r = check_use(outer, c.use);
    outer = r.out;
    TypeP t = cap({Cap::Iso}, r.type) ? r.type : adapt(Cap::Paused, r.type);
    if (!t) err(rule, c.use.pos, "cannot capture " + show(r.type));
    body.set(c.name, t);
  }
  auto tx = need(outer, b->lv.var, rule, b->pos);
  TypeP tf, tz;
  if (field) {
    if (!is_open_type(tx)) err(rule, b->pos, b->lv.var + " has type " + show(tx) + ", which is not open");
    tf = ftype_union(p_.classes, tx, b->lv.field);
    if (!tf) err(rule, b->pos, "no field " + b->lv.field + " in " + show(tx));
    if (!cap({Cap::Iso}, tf)) err(rule, b->pos, "field " + b->lv.field + " has type " + show(tf) + ", not iso");
    tz = cell(Cap::Tmp, make_mut(tf));
  } else {
    bool ok = cap({Cap::Var}, tx);
    for (auto* l : leaves(tx)) ok = ok && l->is_cell();
    if (!ok) err(rule, b->pos, b->lv.var + " has type " + show(tx) + ", not a var Cell");
    tf = ftype_union(p_.classes, tx, kVal);
    if (!cap({Cap::Iso}, tf)) err(rule, b->pos, b->lv.var + " holds " + show(tf) + ", not iso");
    tz = make_cell(make_mut(tf));
  }
  body.set(b->param, tz);
  last_assign_.erase(b->param);
  auto r = check_expr(body, b->body);
  if (!cap({Cap::Iso, Cap::Imm}, r.type))
    err(rule, b->body->pos, "block result must be iso or imm, got " + show(r.type));
  auto tz2 = r.out.get(b->param);
  if (field) {
    if (!tz2 || !same(tz2, tz))
      err(rule, b->pos, "bridge parameter " + b->param + " must be unchanged at block exit");
    return {r.type, outer};
  }
  Pos where = last_assign_.count(b->param) ? last_assign_[b->param] : b->pos;
  if (!tz2) err(rule, where, "bridge parameter " + b->param + " is buried at block exit");
  TypeP tf2;
  for (auto* l : leaves(tz2)) {
    if (!l->is_cell() || l->cap != Cap::Var)
      err(rule, where, "bridge parameter " + b->param + " has type " + show(tz2) + " at block exit");
    tf2 = join(tf2, l->param);
  }
  if (!cap({Cap::Mut}, tf2))
    err(rule, where, "bridge " + b->param + " holds " + show(tf2) + " at block exit; the bridge must be mut");
  outer.set(b->lv.var, make_cell(make_iso(tf2)));
  return {r.type, outer};
}

Typed Checker::check_typetest(const Ctx& g, const ExprP& e) {
  const std::string rule = "cmd-ty-typetest";
  auto u = check_use(g, e->use);
  auto wf = p_.classes.wf_error(e->test);
  if (!wf.empty()) err(rule, e->pos, wf);
  if (!classtype(e->test)) err(rule, e->pos, "typetest target must name classes, got " + show(e->test));
  for (auto* y : {&e->y_then, &e->y_else})
    if (u.out.has(*y)) err(rule, e->pos, *y + " is already bound");
  Ctx g1 = u.out;
  g1.set(e->y_then, e->test);
  auto a = check_expr(g1, e->then_);
  a.out.remove(e->y_then);
  Ctx g2 = u.out;
  g2.set(e->y_else, u.type);
  auto b = check_expr(g2, e->else_);
  b.out.remove(e->y_else);
  Ctx m;
  try {
    m = merge_contexts(a.out, b.out);
  } catch (TypeError& te) {
    err(rule, e->pos, te.what());
  }
  return {join(a.type, b.type), m};
}

Typed Checker::check_expr(const Ctx& g, const ExprP& e) {
  switch (e->kind) {
    case Expr::UseE:
      return check_use(g, e->use);
    case Expr::Let: {
      if (g.has(e->x)) err("cmd-ty-let", e->pos, e->x + " is already bound");
      auto r = check_bound(g, e->bound);
      if (r.out.has(e->x)) err("cmd-ty-let", e->pos, e->x + " is already bound");
      Ctx g2 = r.out;
      g2.set(e->x, r.type);
      auto r2 = check_expr(g2, e->body);
      r2.out.remove(e->x);
      return r2;
    }
    case Expr::TypeTest:
      return check_typetest(g, e);
    case Expr::Failure:
      err("cmd-dyn-ty-failure", e->pos, "Failure outside a dynamic expression");
  }
  err("internal", e->pos, "unknown expression");
}

Ctx Checker::exit_rebind(const Ctx& below, const LVal& lv, const Ctx& inner, const std::string& w,
                         const TypeP& result, Pos p) {
  const std::string rule = "cmd-dyn-ty-entered";
  if (!cap({Cap::Iso, Cap::Imm}, result)) err(rule, p, "block result must be iso or imm, got " + show(result));
  auto tw = need(inner, w, rule, p);
  if (!cap({Cap::Tmp, Cap::Var}, tw)) err(rule, p, "bridge cell " + w + " has type " + show(tw));
  auto tb = ftype_union(p_.classes, tw, kVal);
  if (!tb || !cap({Cap::Mut}, tb)) err(rule, p, "bridge is not mut: " + show(tw));
  auto ty = need(below, lv.var, rule, p);
  if (!is_open_type(ty)) err(rule, p, lv.var + " is not open: " + show(ty));
  bool var_cell = true;
  for (auto* l : leaves(ty)) var_cell = var_cell && l->is_cell() && l->cap == Cap::Var;
  Ctx o = below;
  if (var_cell) o.set(lv.var, make_cell(make_iso(tb)));
  return o;
}

Typed Checker::check_dyn(const CtxStack& s, const ExprP& de) {
  if (s.empty()) err("cmd-dyn-ty", de->pos, "empty context stack");
  if (de->kind == Expr::Failure) return {nullptr, s.front().ctx};
  if (is_static(de)) {
    if (s.size() != 1)
      err("cmd-dyn-ty", de->pos, "entered nesting does not match the context stack");
    return check_expr(s.front().ctx, de);
  }
  // Let whose bound is dynamic.
  auto& b = de->bound;
  Typed r;
  if (b->kind == Bound::Entered) {
    if (s.size() < 2) err("cmd-dyn-ty-entered", de->pos, "entered block without a context");
    CtxStack inner(s.begin() + 1, s.end());
    if (inner.front().entry.var != b->lv.var || inner.front().entry.field != b->lv.field)
      err("cmd-dyn-ty-entered", de->pos, "entry tag mismatch");
    auto ri = check_dyn(inner, b->body);
    r.type = ri.type;
    r.out = exit_rebind(s.front().ctx, b->lv, ri.out, b->param, ri.type, de->pos);
  } else {
    r = check_dyn(s, b->body);
  }
  if (r.out.has(de->x)) err("cmd-ty-let", de->pos, de->x + " is already bound");
  Ctx g2 = r.out;
  g2.set(de->x, r.type);
  auto r2 = check_expr(g2, de->body);
  r2.out.remove(de->x);
  return r2;
}

void Checker::check_classes() {
  for (auto& c : p_.class_decls)
    for (auto& f : c.fields) {
      auto e = p_.classes.wf_error(f.type);
      if (!e.empty()) err("ty-class", {}, "field " + c.name + "." + f.name + ": " + e);
      if (!cap_not({Cap::Var}, f.type))
        err("ty-class", {}, "field " + c.name + "." + f.name + " cannot have capability var");
    }
}

void Checker::check_functions() {
  for (auto& f : p_.funs) {
    Ctx g;
    for (auto& [n, t] : f.params) {
      if (g.has(n)) err("cmd-ty-fun", f.pos, "duplicate parameter " + n);
      auto e = p_.classes.wf_error(t);
      if (!e.empty()) err("cmd-ty-fun", f.pos, e);
      g.set(n, t);
    }
    auto e = p_.classes.wf_error(f.result);
    if (!e.empty()) err("cmd-ty-fun", f.pos, e);
    auto r = check_expr(g, f.body);
    if (!subtype(r.type, f.result))
      err("cmd-ty-sub", f.pos,
          "body of " + f.name + " has type " + show(r.type) + ", expected " + show(f.result));
  }
}

TypeP Checker::check_program() {
  check_classes();
  check_functions();
  return check_expr(Ctx{}, p_.main).type;
}

}  // namespace reggio
