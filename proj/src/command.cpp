#include "reggio/command.hpp"

#include <algorithm>

namespace reggio {

namespace {

std::string ren(const Renaming& m, const std::string& x) {
  auto it = m.find(x);
  return it == m.end() ? x : it->second;
}

Use ren(const Renaming& m, Use u) {
  u.var = ren(m, u.var);
  return u;
}

Renaming without(Renaming m, const std::string& x) {
  m.erase(x);
  return m;
}

}  // namespace

BoundP subst(const BoundP& b, const Renaming& m) {
  auto r = std::make_shared<Bound>(*b);
  r->lv.var = ren(m, b->lv.var);
  r->use = ren(m, b->use);
  for (auto& a : r->args) a = ren(m, a);
  for (auto& c : r->caps) c.use = ren(m, c.use);
  // Enter and entered bodies only see their own frame.
  if (b->kind == Bound::Nested) r->body = subst(b->body, m);
  return r;
}

ExprP subst(const ExprP& e, const Renaming& m) {
  if (m.empty()) return e;
  auto r = std::make_shared<Expr>(*e);
  switch (e->kind) {
    case Expr::UseE:
      r->use = ren(m, e->use);
      break;
    case Expr::Let:
      r->bound = subst(e->bound, m);
      r->body = subst(e->body, without(m, e->x));
      break;
    case Expr::TypeTest:
      r->use = ren(m, e->use);
      r->then_ = subst(e->then_, without(m, e->y_then));
      r->else_ = subst(e->else_, without(m, e->y_else));
      break;
    case Expr::Failure:
      break;
  }
  return r;
}

Effect synth_effect(const std::string& x, const BoundP& b) {
  Effect e;
  e.x = x;
  switch (b->kind) {
    case Bound::Deref:
      e.kind = Effect::Load;
      e.lv = b->lv.has_field() ? b->lv : LVal{b->lv.var, kVal};
      break;
    case Bound::Assign:
      e.kind = Effect::Swap;
      e.lv = b->lv.has_field() ? b->lv : LVal{b->lv.var, kVal};
      e.use = b->use;
      break;
    case Bound::New:
      e.kind = b->cap == Cap::Tmp ? Effect::Salloc : Effect::Halloc;
      e.k = b->cap;
      e.cls = b->cls;
      e.args = b->args;
      break;
    case Bound::NewVar:
      e.kind = Effect::Salloc;
      e.k = Cap::Var;
      e.cls = kCell;
      e.args = {b->use};
      break;
    case Bound::Freeze:
      e.kind = Effect::Freeze;
      e.use = b->use;
      break;
    case Bound::Merge:
      e.kind = Effect::Merge;
      e.use = b->use;
      break;
    case Bound::Nested:
      e.kind = Effect::Bind;
      e.binds = {{x, b->body->use}};
      break;
    default:
      e.kind = Effect::Eps;
  }
  return e;
}

std::string CommandMachine::fresh(const std::string& base) {
  auto d = base.find('$');
  return base.substr(0, d) + "$" + std::to_string(++counter_);
}

BoundP CommandMachine::alpha(const BoundP& b, Renaming m) {
  auto r = std::make_shared<Bound>(*subst(b, m));
  if (b->kind == Bound::Nested) r->body = alpha(b->body, m);
  return r;
}

ExprP CommandMachine::alpha(const ExprP& e, Renaming m) {
  auto r = std::make_shared<Expr>(*e);
  switch (e->kind) {
    case Expr::UseE:
      r->use = ren(m, e->use);
      break;
    case Expr::Let: {
      r->bound = alpha(e->bound, m);
      r->x = fresh(e->x);
      m[e->x] = r->x;
      r->body = alpha(e->body, m);
      break;
    }
    case Expr::TypeTest: {
      r->use = ren(m, e->use);
      r->y_then = fresh(e->y_then);
      r->y_else = fresh(e->y_else);
      Renaming m1 = m, m2 = m;
      m1[e->y_then] = r->y_then;
      m2[e->y_else] = r->y_else;
      r->then_ = alpha(e->then_, m1);
      r->else_ = alpha(e->else_, m2);
      break;
    }
    case Expr::Failure:
      break;
  }
  return r;
}

std::vector<std::pair<Effect, ExprP>> CommandMachine::step(const ExprP& de) {
  std::vector<std::pair<Effect, ExprP>> out;
  switch (de->kind) {
    case Expr::UseE:
    case Expr::Failure:
      return out;
    case Expr::TypeTest: {
      Effect c, n;
      c.kind = Effect::Cast;
      n.kind = Effect::NoCast;
      c.x = fresh(de->y_then);
      n.x = fresh(de->y_else);
      c.use = n.use = de->use;
      c.ty = n.ty = de->test;
      out.emplace_back(c, subst(de->then_, {{de->y_then, c.x}}));
      out.emplace_back(n, subst(de->else_, {{de->y_else, n.x}}));
      return out;
    }
    case Expr::Let:
      break;
  }
  auto& b = de->bound;
  auto wrap = [&](const ExprP& inner, BoundP nb) -> ExprP {
    if (inner->kind == Expr::Failure) return inner;
    auto e = std::make_shared<Expr>(*de);
    e->bound = nb;
    return e;
  };
  auto continue_with = [&](const std::string& x) { return subst(de->body, {{de->x, x}}); };

  switch (b->kind) {
    case Bound::Entered: {
      if (b->body->kind == Expr::UseE) {
        Effect e;
        e.kind = Effect::Exit;
        e.x = fresh(de->x);
        e.use = b->body->use;
        e.lv = b->lv;
        e.w = b->param;
        out.emplace_back(e, continue_with(e.x));
        return out;
      }
      if (b->body->kind == Expr::Failure) {
        out.emplace_back(Effect{}, b->body);
        return out;
      }
      for (auto& [eff, succ] : step(b->body)) {
        auto nb = std::make_shared<Bound>(*b);
        nb->body = succ;
        out.emplace_back(eff, wrap(succ, nb));
      }
      return out;
    }
    case Bound::Nested: {
      if (b->body->kind == Expr::UseE) {
        std::string x = fresh(de->x);
        out.emplace_back(synth_effect(x, b), continue_with(x));
        return out;
      }
      if (b->body->kind == Expr::Failure) {
        out.emplace_back(Effect{}, b->body);
        return out;
      }
      for (auto& [eff, succ] : step(b->body)) out.emplace_back(eff, wrap(succ, mk_nested(succ)));
      return out;
    }
    case Bound::Enter: {
      Effect e;
      e.kind = Effect::Enter;
      e.x = fresh(b->param);
      bool field = b->lv.has_field();
      e.k = field ? Cap::Tmp : Cap::Var;
      e.lv = field ? b->lv : LVal{b->lv.var, kVal};
      Renaming m{{b->param, e.x}};
      for (auto& c : b->caps) {
        std::string n = fresh(c.name);
        m[c.name] = n;
        e.binds.emplace_back(n, c.use);
      }
      auto eb = std::make_shared<Bound>();
      eb->kind = Bound::Entered;
      eb->pos = b->pos;
      eb->lv = e.lv;
      eb->param = e.x;
      eb->body = alpha(b->body, m);
      auto ne = std::make_shared<Expr>(*de);
      ne->bound = eb;
      out.emplace_back(e, ne);
      Effect bad;
      bad.kind = Effect::BadEnter;
      bad.lv = e.lv;
      out.emplace_back(bad, mk_failure());
      return out;
    }
    case Bound::Call: {
      auto* f = p_.fun(b->fn);
      if (!f || f->params.size() != b->args.size()) return out;
      Effect e;
      e.kind = Effect::Bind;
      Renaming m;
      for (size_t i = 0; i < f->params.size(); ++i) {
        std::string n = fresh(f->params[i].first);
        m[f->params[i].first] = n;
        e.binds.emplace_back(n, b->args[i]);
      }
      auto ne = std::make_shared<Expr>(*de);
      ne->bound = mk_nested(alpha(f->body, m));
      out.emplace_back(e, ne);
      return out;
    }
    default: {
      std::string x = fresh(de->x);
      out.emplace_back(synth_effect(x, b), continue_with(x));
      return out;
    }
  }
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Done: return "done";
    case Outcome::Failed: return "failed";
    case Outcome::Stuck: return "stuck";
    case Outcome::Violation: return "violation";
    case Outcome::Budget: return "budget";
  }
  return "?";
}

namespace {

std::set<Rid> heap_keys(const Heap& h) {
  std::set<Rid> s;
  for (auto& [r, st] : h) s.insert(r);
  return s;
}

void driver_checks(const Config& before, const Config& after, Report& rep) {
  auto f0 = heap_keys(before.frozen), f1 = heap_keys(after.frozen);
  for (Rid r : f0)
    if (!f1.count(r)) rep.violations.push_back({"monotone", "frozen-grows", {}, {r}});
  auto a = before.region_stack(), b = after.region_stack();
  auto prefix = [](const std::vector<Rid>& s, const std::vector<Rid>& l) {
    return s.size() + 1 == l.size() && std::equal(s.begin(), s.end(), l.begin());
  };
  if (!(a == b || prefix(a, b) || prefix(b, a))) rep.violations.push_back({"monotone", "stack-discipline", {}, b});
}

}  // namespace

RunResult run_program(const Program& p, const RunOptions& opt,
                      const std::function<void(const StepInfo&)>& observer) {
  RunResult res;
  Checker chk(p);
  Machine m(p.classes, opt.bugs);
  CommandMachine cm(p);
  Config cfg = Config::initial();
  ExprP de = p.main;
  CtxStack gs{CtxFrame{Ctx{}, {}}};
  bool track = opt.check != CheckMode::Off;
  bool each = opt.check == CheckMode::EachStep;

  auto finish = [&](Outcome o, std::string why) {
    res.outcome = o;
    res.detail = std::move(why);
    res.final_cfg = cfg;
    return res;
  };

  for (long i = 0;; ++i) {
    if (de->kind == Expr::UseE || de->kind == Expr::Failure) {
      res.steps = i;
      if (opt.check == CheckMode::Final) {
        res.report = check_config_wf(gs, cfg, m);
        if (!res.report.ok()) return finish(Outcome::Violation, res.report.json());
      }
      if (de->kind == Expr::Failure) return finish(Outcome::Failed, "badenter");
      res.result_var = de->use.var;
      return finish(Outcome::Done, "");
    }
    if (i >= opt.budget) {
      res.steps = i;
      return finish(Outcome::Budget, "step budget exhausted");
    }
    auto cands = cm.step(de);
    const std::pair<Effect, ExprP>* pick = nullptr;
    for (auto& c : cands) {
      auto& e = c.first;
      bool ok = true;
      if (e.kind == Effect::Enter) ok = m.enter_enabled(cfg, e);
      else if (e.kind == Effect::BadEnter) ok = !m.enter_enabled(cfg, e);
      else if (e.kind == Effect::Cast) ok = m.cast_enabled(cfg, e);
      else if (e.kind == Effect::NoCast) ok = !m.cast_enabled(cfg, e);
      if (ok) {
        pick = &c;
        break;
      }
    }
    res.steps = i + 1;
    if (!pick) return finish(Outcome::Stuck, "no rule applies to " + pretty(de));
    Config before = each ? cfg : Config{};
    try {
      m.step(cfg, pick->first);
    } catch (Stuck& s) {
      return finish(Outcome::Stuck, pick->first.name() + ": " + s.why);
    }
    de = pick->second;
    Report rep;
    if (track) {
      try {
        gs = check_effect_wf(chk, gs, pick->first);
      } catch (TypeError& te) {
        rep.violations.push_back({"wf-eff", te.rule, {te.what()}, {}});
      }
    }
    if (each) {
      if (rep.ok()) {
        Report r2 = check_config_wf(gs, cfg, m);
        rep.violations = r2.violations;
        driver_checks(before, cfg, rep);
        try {
          chk.check_dyn(gs, de);
        } catch (TypeError& te) {
          rep.violations.push_back({"wf-dyn", te.rule, {te.what()}, {}});
        }
      }
    }
    if (observer) {
      StepInfo si;
      si.index = i;
      si.effect = &pick->first;
      si.cfg = &cfg;
      si.de = &de;
      si.report = each ? &rep : nullptr;
      observer(si);
    }
    if (!rep.ok()) {
      res.report = rep;
      return finish(Outcome::Violation, pick->first.name() + ": " + rep.json());
    }
  }
}

}  // namespace reggio
