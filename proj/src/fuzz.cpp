#include "reggio/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <thread>

namespace reggio {

namespace {

class Gen {
 public:
  explicit Gen(const GenConfig& c) : cfg_(c), rng_(c.seed) {}

  Program run() {
    gen_classes();
    chk_ = std::make_unique<Checker>(p_);
    gen_functions();
    p_.main = block(Ctx{}, cfg_.depth, cfg_.enter_nesting, false, {});
    return p_;
  }

 private:
  GenConfig cfg_;
  std::mt19937_64 rng_;
  Program p_;
  std::unique_ptr<Checker> chk_;
  int names_ = 0;

  int uni(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int pct) { return uni(0, 99) < pct; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(uni(0, static_cast<int>(v.size()) - 1))];
  }
  std::string name(const char* base = "x") { return base + std::to_string(++names_); }

  void gen_classes() {
    int n = uni(1, cfg_.max_classes);
    std::vector<std::string> made{kUnit};
    bool iso_field = false;
    for (int i = 0; i < n; ++i) {
      ClassDecl c;
      c.name = "C" + std::to_string(i);
      int nf = uni(0, cfg_.max_fields);
      if (i == n - 1 && !iso_field) nf = std::max(nf, 1);
      for (int j = 0; j < nf; ++j) {
        TypeP t;
        int r = uni(0, 99);
        if ((i == n - 1 && !iso_field && j == 0) || r < 30) {
          t = leaf(Cap::Iso, pick(made));
          iso_field = true;
        } else if (r < 55) {
          t = leaf(Cap::Mut, pick(made));
        } else if (r < 75) {
          t = leaf(Cap::Imm, pick(made));
        } else if (r < 92) {
          auto u = std::make_shared<Type>();
          u->is_union = true;
          u->left = leaf(Cap::Mut, c.name);
          u->right = leaf(Cap::Imm, kUnit);
          t = u;
        } else {
          t = leaf(Cap::Tmp, pick(made));
        }
        c.fields.push_back(Field{"f" + std::to_string(j), t});
      }
      p_.classes.add(c);
      p_.class_decls.push_back(c);
      made.push_back(c.name);
    }
  }

  TypeP random_param_type() {
    auto& names = p_.classes.order();
    std::string c = pick(names);
    static const Cap ks[] = {Cap::Mut, Cap::Imm, Cap::Iso, Cap::Tmp};
    return leaf(ks[uni(0, 3)], c);
  }

  void gen_functions() {
    int n = uni(0, cfg_.max_functions);
    for (int i = 0; i < n; ++i) {
      FunDecl f;
      f.name = "fn" + std::to_string(i);
      Ctx g;
      int np = uni(1, 2);
      for (int j = 0; j < np; ++j) {
        std::string pn = name("p");
        auto t = random_param_type();
        f.params.emplace_back(pn, t);
        g.set(pn, t);
      }
      f.body = block(g, std::max(1, cfg_.depth / 2), 1, false, {});
      try {
        f.result = chk_->check_expr(g, f.body).type;
      } catch (TypeError&) {
        continue;
      }
      p_.funs.push_back(f);
    }
  }

  struct Var {
    std::string n;
    TypeP t;
  };

  std::vector<Var> vars(const Ctx& g, const std::function<bool(const TypeP&)>& pred) {
    std::vector<Var> r;
    for (auto& [n, t] : g.entries())
      if (t && pred(t)) r.push_back({n, t});
    return r;
  }

  static bool needs_drop(const TypeP& t) { return !cap_not({Cap::Iso, Cap::Var}, t); }

  // A use of some variable of a type accepted by pred; avoids protected and
  // already-dropped names when a drop is required.
  std::optional<Use> arg(const Ctx& g, const std::function<bool(const TypeP&)>& pred,
                         std::set<std::string>& dropped, const std::set<std::string>& protect) {
    auto vs = vars(g, [&](const TypeP& t) { return pred(t); });
    std::vector<Use> ok;
    for (auto& v : vs) {
      if (dropped.count(v.n)) continue;
      bool d = needs_drop(v.t);
      if (d && protect.count(v.n)) continue;
      ok.push_back(Use{d, v.n, {}});
    }
    if (ok.empty()) return std::nullopt;
    Use u = pick(ok);
    if (u.drop) dropped.insert(u.var);
    return u;
  }

  std::shared_ptr<Bound> mk(Bound::Kind k) {
    auto b = std::make_shared<Bound>();
    b->kind = k;
    return b;
  }

  BoundP production(const Ctx& g, int depth, int nest, const std::set<std::string>& protect) {
    auto& w = cfg_.weights;
    std::vector<std::pair<int, int>> table = {
        {0, w.new_obj},    {1, w.freeze}, {2, w.merge},           {3, w.deref},
        {4, w.assign},     {5, w.var_new}, {6, w.var_assign},     {7, w.var_deref},
        {8, nest > 0 ? w.enter : 0},     {9, depth > 1 ? w.typetest : 0},
        {10, p_.funs.empty() ? 0 : w.call}, {11, depth > 1 ? w.nested : 0}};
    int total = 0;
    for (auto& [k, wt] : table) total += wt;
    int r = uni(0, total - 1);
    int kind = 0;
    for (auto& [k, wt] : table) {
      if (r < wt) {
        kind = k;
        break;
      }
      r -= wt;
    }
    std::set<std::string> dropped;
    auto any = [](const TypeP&) { return true; };
    switch (kind) {
      case 0: {
        auto& names = p_.classes.order();
        std::string c = pick(names);
        int kr = uni(0, 6);
        Cap k = kr < 3 ? Cap::Mut : kr < 6 ? Cap::Iso : Cap::Tmp;
        auto b = mk(Bound::New);
        b->cap = k;
        b->cls = c;
        for (auto& f : p_.classes.find(c)->fields) {
          auto ft = f.type;
          auto u = arg(g, [&](const TypeP& t) {
            if (!subtype(t, ft)) return false;
            if (k == Cap::Iso) return cap({Cap::Iso, Cap::Imm}, t);
            if (k == Cap::Mut) return cap_not({Cap::Tmp, Cap::Paused}, t);
            return true;
          }, dropped, protect);
          if (!u) return nullptr;
          b->args.push_back(*u);
        }
        return b;
      }
      case 1:
      case 2: {
        auto u = arg(g, [](const TypeP& t) { return cap({Cap::Iso}, t); }, dropped, protect);
        if (!u) return new_iso(g, protect);
        auto b = mk(kind == 1 ? Bound::Freeze : Bound::Merge);
        b->use = *u;
        return b;
      }
      case 3:
      case 4: {
        auto vs = vars(g, [&](const TypeP& t) {
          return kind == 3 ? cap_not({Cap::Iso}, t) : cap({Cap::Mut, Cap::Tmp}, t);
        });
        if (vs.empty()) return nullptr;
        auto v = pick(vs);
        auto fs = p_.classes.field_names(leaves(v.t)[0]->cls);
        if (fs.empty()) return nullptr;
        std::string f = pick(fs);
        if (kind == 3) {
          auto b = mk(Bound::Deref);
          b->lv = LVal{v.n, f};
          return b;
        }
        auto ft = ftype_union(p_.classes, v.t, f);
        if (!ft) return nullptr;
        bool to_mut = !cap_not({Cap::Mut}, v.t);
        auto u = arg(g, [&](const TypeP& t) {
          return subtype(t, ft) && (!to_mut || cap_not({Cap::Tmp, Cap::Paused}, t));
        }, dropped, protect);
        if (!u) return nullptr;
        auto b = mk(Bound::Assign);
        b->lv = LVal{v.n, f};
        b->use = *u;
        return b;
      }
      case 5: {
        auto u = arg(g, [](const TypeP& t) { return cap_not({Cap::Var}, t); }, dropped, protect);
        if (!u) return nullptr;
        auto b = mk(Bound::NewVar);
        b->use = *u;
        return b;
      }
      case 6: {
        auto vs = vars(g, [](const TypeP& t) { return t->is_cell() && t->cap == Cap::Var; });
        if (vs.empty()) return nullptr;
        auto v = pick(vs);
        bool bridge = protect.count(v.n) > 0;
        auto u = arg(g, [&](const TypeP& t) {
          return cap_not({Cap::Var}, t) && (!bridge || cap({Cap::Mut}, t));
        }, dropped, protect);
        if (!u) return nullptr;
        auto b = mk(Bound::Assign);
        b->lv = LVal{v.n, ""};
        b->use = *u;
        return b;
      }
      case 7: {
        auto vs = vars(g, [](const TypeP& t) { return t->is_cell() && t->cap != Cap::Iso; });
        if (vs.empty()) return nullptr;
        auto b = mk(Bound::Deref);
        b->lv = LVal{pick(vs).n, ""};
        return b;
      }
      case 8: {
        if (auto b = enter(g, depth, nest, protect)) return b;
        // No target yet: make one from an iso value, or make an iso value.
        auto u = arg(g, [](const TypeP& t) { return t->is_cell() == false && cap({Cap::Iso}, t); },
                     dropped, protect);
        if (!u) return new_iso(g, protect);
        if (coin(50)) {
          auto b = mk(Bound::NewVar);
          b->use = *u;
          return b;
        }
        auto ut = g.get(u->var);
        for (auto& cn : p_.classes.order()) {
          auto& fs = p_.classes.find(cn)->fields;
          if (fs.empty() || !subtype(ut, fs[0].type)) continue;
          auto b = mk(Bound::New);
          b->cap = Cap::Mut;
          b->cls = cn;
          b->args.push_back(*u);
          for (size_t i = 1; i < fs.size(); ++i) {
            auto ft = fs[i].type;
            auto a = arg(g, [&](const TypeP& t) {
              return t.get() != ut.get() && subtype(t, ft) && cap_not({Cap::Tmp, Cap::Paused}, t);
            }, dropped, protect);
            if (!a || a->var == u->var) return nullptr;
            b->args.push_back(*a);
          }
          return b;
        }
        auto b = mk(Bound::NewVar);
        b->use = *u;
        return b;
      }
      case 9: {
        auto u = arg(g, any, dropped, protect);
        if (!u) return nullptr;
        auto ut = g.get(u->var);
        auto* l = leaves(ut)[0];
        std::string c = (!l->is_cell() && coin(70)) ? l->cls : pick(p_.classes.order());
        Cap k = coin(70) ? l->cap : kAllCaps[uni(0, 5)];
        auto e = std::make_shared<Expr>();
        e->kind = Expr::TypeTest;
        e->use = *u;
        e->test = leaf(k, c);
        e->y_then = name("y");
        e->y_else = name("y");
        Ctx base = g;
        if (u->drop) base.set(u->var, nullptr);
        Ctx g1 = base, g2 = base;
        g1.set(e->y_then, e->test);
        g2.set(e->y_else, ut);
        e->then_ = block(g1, depth / 2, nest, false, protect);
        e->else_ = block(g2, depth / 2, nest, false, protect);
        return mk_nested(e);
      }
      case 10: {
        auto& f = pick(p_.funs);
        auto b = mk(Bound::Call);
        b->fn = f.name;
        for (auto& [pn, pt] : f.params) {
          auto u = arg(g, [&](const TypeP& t) { return subtype(t, pt); }, dropped, protect);
          if (!u) return nullptr;
          b->args.push_back(*u);
        }
        return b;
      }
      case 11:
        return mk_nested(block(g, depth / 2, nest, false, protect));
    }
    return nullptr;
  }

  BoundP new_iso(const Ctx& g, const std::set<std::string>& protect) {
    std::set<std::string> dropped;
    auto c = pick(p_.classes.order());
    auto b = mk(Bound::New);
    b->cap = Cap::Iso;
    b->cls = c;
    for (auto& f : p_.classes.find(c)->fields) {
      auto ft = f.type;
      auto u = arg(g, [&](const TypeP& t) { return subtype(t, ft) && cap({Cap::Iso, Cap::Imm}, t); },
                   dropped, protect);
      if (!u) {
        b->cls = kUnit;
        b->args.clear();
        return b;
      }
      b->args.push_back(*u);
    }
    return b;
  }

  BoundP enter(const Ctx& g, int depth, int nest, const std::set<std::string>& protect) {
    struct Target {
      std::string y, f;
    };
    std::vector<Target> ts;
    for (auto& [n, t] : g.entries()) {
      if (!t || leaves(t).size() != 1) continue;
      auto* l = leaves(t)[0];
      if (l->is_cell() && l->cap == Cap::Var && cap({Cap::Iso}, l->param)) ts.push_back({n, ""});
      if (!open(l->cap)) continue;
      for (auto& f : p_.classes.field_names(l->is_cell() ? kCell : l->cls)) {
        auto ft = p_.classes.ftype(*l, f);
        if (ft && cap({Cap::Iso}, ft)) ts.push_back({n, f});
      }
    }
    if (ts.empty()) return nullptr;
    auto tgt = pick(ts);
    auto b = mk(Bound::Enter);
    b->lv = LVal{tgt.y, tgt.f};
    b->param = name("z");
    Ctx body;
    std::set<std::string> dropped;
    int ncap = uni(0, 3);
    for (auto& [n, t] : g.entries()) {
      if ((int)b->caps.size() >= ncap) break;
      if (!t || n == tgt.y || !coin(50)) continue;
      bool d = needs_drop(t);
      if (d && protect.count(n)) continue;
      TypeP bt = cap({Cap::Iso}, t) ? t : adapt(Cap::Paused, t);
      if (!bt) continue;
      std::string cn = name("c");
      b->caps.push_back(Capture{cn, Use{d, n, {}}});
      body.set(cn, bt);
    }
    auto ty = g.get(tgt.y);
    TypeP tf = ftype_union(p_.classes, ty, tgt.f.empty() ? kVal : tgt.f);
    body.set(b->param, tgt.f.empty() ? make_cell(make_mut(tf)) : cell(Cap::Tmp, make_mut(tf)));
    b->body = block(body, std::max(1, depth / 2), nest - 1, true, {b->param});
    return b;
  }

  ExprP block(Ctx g, int depth, int nest, bool iso_goal, const std::set<std::string>& protect) {
    std::vector<std::pair<std::string, BoundP>> lets;
    Ctx cur = g;
    int n = uni(std::max(1, depth / 2 + (nest == cfg_.enter_nesting ? 1 : 0)), std::max(1, depth));
    auto accept = [&](const BoundP& b) {
      try {
        auto r = chk_->check_bound(cur, b);
        std::string x = name();
        cur = r.out;
        cur.set(x, r.type);
        lets.emplace_back(x, b);
        return true;
      } catch (TypeError&) {
        return false;
      }
    };
    for (int i = 0; i < n; ++i)
      for (int attempt = 0; attempt < 8; ++attempt) {
        auto b = production(cur, depth, nest, protect);
        if (b && accept(b)) break;
      }
    std::set<std::string> none;
    auto pred = [&](const TypeP& t) { return !iso_goal || cap({Cap::Iso, Cap::Imm}, t); };
    auto u = arg(cur, pred, none, protect);
    if (!u) {
      auto b = mk(Bound::New);
      b->cap = iso_goal ? Cap::Iso : Cap::Mut;
      b->cls = kUnit;
      accept(b);
      u = Use{iso_goal, lets.back().first, {}};
    }
    ExprP e = mk_use(*u);
    for (auto it = lets.rbegin(); it != lets.rend(); ++it) e = mk_let(it->first, it->second, e);
    return e;
  }
};

bool scan(const ExprP& e, const std::function<bool(const Bound&)>& f) {
  if (!e) return false;
  switch (e->kind) {
    case Expr::Let:
      if (f(*e->bound)) return true;
      if (e->bound->body && scan(e->bound->body, f)) return true;
      return scan(e->body, f);
    case Expr::TypeTest:
      return scan(e->then_, f) || scan(e->else_, f);
    default:
      return false;
  }
}

bool scan_program(const Program& p, const std::function<bool(const Bound&)>& f) {
  if (scan(p.main, f)) return true;
  for (auto& fn : p.funs)
    if (scan(fn.body, f)) return true;
  return false;
}

Program trivial() {
  Program p;
  auto b = std::make_shared<Bound>();
  b->kind = Bound::New;
  b->cap = Cap::Mut;
  b->cls = kUnit;
  p.main = mk_let("x", b, mk_use("x"));
  return p;
}

}  // namespace

bool typechecks(const Program& p) {
  try {
    Checker(p).check_program();
    return true;
  } catch (TypeError&) {
    return false;
  }
}

Program generate(const GenConfig& cfg) {
  for (uint64_t k = 0; k < 16; ++k) {
    GenConfig c = cfg;
    c.seed = cfg.seed + k * 0x9E3779B97F4A7C15ull;
    Program p = Gen(c).run();
    if (typechecks(p)) return p;
  }
  return trivial();
}

bool has_enter(const Program& p) {
  return scan_program(p, [](const Bound& b) { return b.kind == Bound::Enter; });
}

bool has_freeze_or_merge(const Program& p) {
  return scan_program(p, [](const Bound& b) { return b.kind == Bound::Freeze || b.kind == Bound::Merge; });
}

RunResult soundness_run(const Program& p, long budget, const Bugs& bugs) {
  RunOptions o;
  o.check = CheckMode::EachStep;
  o.budget = budget;
  o.bugs = bugs;
  return run_program(p, o);
}

namespace {

std::vector<ExprP> reductions(const ExprP& e);

std::vector<BoundP> bound_reductions(const BoundP& b) {
  std::vector<BoundP> out;
  if (b->kind == Bound::Enter) {
    for (size_t i = 0; i < b->caps.size(); ++i) {
      auto r = std::make_shared<Bound>(*b);
      r->caps.erase(r->caps.begin() + static_cast<long>(i));
      out.push_back(r);
    }
  }
  if (b->kind == Bound::Enter || b->kind == Bound::Nested)
    for (auto& rb : reductions(b->body)) {
      auto r = std::make_shared<Bound>(*b);
      r->body = rb;
      out.push_back(r);
    }
  return out;
}

std::vector<ExprP> reductions(const ExprP& e) {
  std::vector<ExprP> out;
  if (e->kind == Expr::Let) {
    out.push_back(e->body);
    if (e->bound->kind == Bound::Nested) {
      auto& in = e->bound->body;
      // Hoist the first let out of a block, or inline a block that is a bare use.
      if (in->kind == Expr::Let)
        out.push_back(mk_let(in->x, in->bound, mk_let(e->x, mk_nested(in->body), e->body)));
      else if (in->kind == Expr::UseE)
        out.push_back(subst(e->body, Renaming{{e->x, in->use.var}}));
    }
    if (e->bound->kind == Bound::Nested && e->bound->body->kind == Expr::TypeTest) {
      auto& t = e->bound->body;
      for (auto [y, br] : {std::pair{t->y_then, t->then_}, std::pair{t->y_else, t->else_}})
        out.push_back(mk_let(e->x, mk_nested(mk_let(y, mk_nested(mk_use(t->use)), br)), e->body));
    }
    for (auto& rb : bound_reductions(e->bound)) out.push_back(mk_let(e->x, rb, e->body));
    for (auto& r : reductions(e->body)) out.push_back(mk_let(e->x, e->bound, r));
  } else if (e->kind == Expr::TypeTest) {
    out.push_back(mk_let(e->y_then, mk_nested(mk_use(e->use)), e->then_));
    out.push_back(mk_let(e->y_else, mk_nested(mk_use(e->use)), e->else_));
    for (auto& r : reductions(e->then_)) {
      auto c = std::make_shared<Expr>(*e);
      c->then_ = r;
      out.push_back(c);
    }
    for (auto& r : reductions(e->else_)) {
      auto c = std::make_shared<Expr>(*e);
      c->else_ = r;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Program> program_reductions(const Program& p) {
  std::vector<Program> out;
  for (size_t i = 0; i < p.funs.size(); ++i) {
    Program q = p;
    q.funs.erase(q.funs.begin() + static_cast<long>(i));
    out.push_back(q);
  }
  for (auto& r : reductions(p.main)) {
    Program q = p;
    q.main = r;
    out.push_back(q);
  }
  for (size_t i = 0; i < p.funs.size(); ++i)
    for (auto& r : reductions(p.funs[i].body)) {
      Program q = p;
      q.funs[i].body = r;
      out.push_back(q);
    }
  for (size_t i = 0; i < p.class_decls.size(); ++i) {
    Program q;
    for (size_t j = 0; j < p.class_decls.size(); ++j)
      if (j != i) {
        q.classes.add(p.class_decls[j]);
        q.class_decls.push_back(p.class_decls[j]);
      }
    q.funs = p.funs;
    q.main = p.main;
    out.push_back(q);
  }
  return out;
}

}  // namespace

Program shrink(const Program& p, const std::function<bool(const Program&)>& triggers) {
  if (!typechecks(p) || !triggers(p)) return p;
  Program cur = p;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& q : program_reductions(cur)) {
      if (typechecks(q) && triggers(q)) {
        cur = q;
        progress = true;
        break;
      }
    }
  }
  return cur;
}

CampaignResult run_campaign(const CampaignOptions& opt) {
  CampaignResult res;
  std::atomic<int> next{0};
  std::atomic<int> stop_at{opt.programs};
  std::mutex mu;
  int nthreads = opt.threads > 0 ? opt.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= opt.programs || i >= stop_at.load()) return;
      GenConfig gc;
      gc.seed = opt.seed + static_cast<uint64_t>(i);
      gc.depth = opt.depth;
      gc.enter_nesting = opt.enter_nesting;
      Program p = generate(gc);
      bool cov = has_enter(p) && has_freeze_or_merge(p);
      RunResult r = soundness_run(p, opt.budget, opt.bugs);
      std::lock_guard<std::mutex> lk(mu);
      res.run++;
      res.total_steps += r.steps;
      if (cov) res.with_enter_and_freeze++;
      switch (r.outcome) {
        case Outcome::Done: res.done++; break;
        case Outcome::Failed: res.failed++; break;
        case Outcome::Budget: res.budget++; break;
        case Outcome::Stuck: res.stuck++; break;
        case Outcome::Violation: res.violations++; break;
      }
      bool bad = r.outcome == Outcome::Stuck || r.outcome == Outcome::Violation;
      if (bad && (res.first_bad < 0 || i < res.first_bad)) {
        res.first_bad = i;
        res.first_bad_detail = r.detail;
        res.first_bad_program = p;
        if (opt.stop_on_failure) stop_at.store(i);
      }
    }
  };
  std::vector<std::thread> ts;
  for (int t = 0; t < nthreads; ++t) ts.emplace_back(worker);
  for (auto& t : ts) t.join();
  return res;
}

}  // namespace reggio
