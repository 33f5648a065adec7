#include "reggio/syntax.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace reggio {

namespace {

struct Tok {
  enum Kind { Ident, Sym, End } kind = End;
  std::string text;
  Pos pos;
};

std::vector<Tok> lex(const std::string& s) {
  std::vector<Tok> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto adv = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') adv(1);
      continue;
    }
    Pos p{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' ||
                              s[j] == '$' || s[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), p});
      adv(j - i);
      continue;
    }
    if (s.compare(i, 2, ":=") == 0 || s.compare(i, 2, "=>") == 0) {
      out.push_back({Tok::Sym, s.substr(i, 2), p});
      adv(2);
      continue;
    }
    if (std::string("{}()[],:=*.|").find(c) != std::string::npos) {
      out.push_back({Tok::Sym, std::string(1, c), p});
      adv(1);
      continue;
    }
    throw SyntaxError(p, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", Pos{line, col}});
  return out;
}

const std::set<std::string> kKeywords = {"class", "fn",     "let",   "in",    "if",    "typetest",
                                         "else",  "drop",   "new",   "var",   "freeze", "merge",
                                         "enter", "explore"};

class Parser {
 public:
  explicit Parser(std::vector<Tok> t) : toks_(std::move(t)) {}

  Program program() {
    Program p;
    while (true) {
      if (is_kw("class")) {
        auto c = class_decl();
        if (p.classes.has(c.name)) throw SyntaxError(last_pos_, "duplicate class " + c.name);
        p.classes.add(c);
        p.class_decls.push_back(c);
      } else if (is_kw("fn")) {
        auto f = fun_decl();
        if (p.fun(f.name)) throw SyntaxError(f.pos, "duplicate function " + f.name);
        p.funs.push_back(std::move(f));
      } else {
        break;
      }
    }
    p.main = expr();
    expect_end();
    return p;
  }

  TypeP type_only() {
    auto t = type();
    expect_end();
    return t;
  }

 private:
  std::vector<Tok> toks_;
  size_t i_ = 0;
  Pos last_pos_;
  int fresh_ = 0;

  const Tok& peek(size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  bool is_sym(const char* s, size_t k = 0) const {
    return peek(k).kind == Tok::Sym && peek(k).text == s;
  }
  bool is_kw(const char* s) const { return peek().kind == Tok::Ident && peek().text == s; }
  Tok take() {
    last_pos_ = peek().pos;
    return toks_[i_ < toks_.size() - 1 ? i_++ : i_];
  }
  void expect(const char* s) {
    if (!is_sym(s) && !is_kw(s)) fail(std::string("expected '") + s + "'");
    take();
  }
  void expect_end() {
    if (peek().kind != Tok::End) fail("unexpected trailing input");
  }
  [[noreturn]] void fail(const std::string& m) const {
    std::string got = peek().kind == Tok::End ? "end of input" : "'" + peek().text + "'";
    throw SyntaxError(peek().pos, m + ", found " + got);
  }
  std::string ident() {
    if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) fail("expected identifier");
    return take().text;
  }

  ClassDecl class_decl() {
    expect("class");
    ClassDecl c;
    Pos p = peek().pos;
    c.name = ident();
    if (c.name == kCell || c.name == kUnit) throw SyntaxError(p, c.name + " is reserved");
    expect("{");
    std::set<std::string> seen;
    while (!is_sym("}")) {
      Pos fp = peek().pos;
      Field f;
      f.name = ident();
      if (!seen.insert(f.name).second) throw SyntaxError(fp, "duplicate field " + f.name);
      expect(":");
      f.type = type();
      c.fields.push_back(f);
      if (!is_sym(",")) break;
      take();
    }
    expect("}");
    return c;
  }

  FunDecl fun_decl() {
    expect("fn");
    FunDecl f;
    f.pos = peek().pos;
    f.name = ident();
    expect("(");
    while (!is_sym(")")) {
      auto n = ident();
      expect(":");
      f.params.emplace_back(n, type());
      if (!is_sym(",")) break;
      take();
    }
    expect(")");
    expect(":");
    f.result = type();
    expect("{");
    f.body = expr();
    expect("}");
    return f;
  }

  Cap capability() {
    if (peek().kind == Tok::Ident)
      if (auto k = cap_from_name(peek().text)) {
        take();
        return *k;
      }
    fail("expected capability");
  }

  TypeP type_atom() {
    if (is_sym("(")) {
      take();
      auto t = type();
      expect(")");
      return t;
    }
    Cap k = capability();
    Pos p = peek().pos;
    if (peek().kind != Tok::Ident) fail("expected class name");
    std::string c = take().text;
    if (c == kCell) {
      expect("[");
      auto t = type();
      expect("]");
      return cell(k, t);
    }
    (void)p;
    return leaf(k, c);
  }

  TypeP type() {
    auto t = type_atom();
    while (is_sym("|")) {
      take();
      auto r = type_atom();
      auto u = std::make_shared<Type>();
      u->is_union = true;
      u->left = t;
      u->right = r;
      t = u;
    }
    return t;
  }

  Use use() {
    Use u;
    u.pos = peek().pos;
    if (is_kw("drop")) {
      take();
      u.drop = true;
    }
    u.var = ident();
    return u;
  }

  std::vector<Use> uses() {
    expect("(");
    std::vector<Use> r;
    while (!is_sym(")")) {
      r.push_back(use());
      if (!is_sym(",")) break;
      take();
    }
    expect(")");
    return r;
  }

  LVal lval() {
    LVal lv;
    lv.var = ident();
    if (is_sym(".")) {
      take();
      lv.field = ident();
    }
    return lv;
  }

  std::vector<Capture> captures() {
    std::vector<Capture> r;
    if (!is_sym("[")) return r;
    take();
    while (!is_sym("]")) {
      Capture c;
      c.name = ident();
      expect("=");
      c.use = use();
      r.push_back(c);
      if (!is_sym(",")) break;
      take();
    }
    expect("]");
    return r;
  }

  ExprP expr() {
    Pos p = peek().pos;
    if (is_kw("let")) {
      take();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Let;
      e->pos = p;
      e->x = ident();
      expect("=");
      e->bound = bound();
      expect("in");
      e->body = expr();
      return e;
    }
    if (is_kw("if")) {
      take();
      expect("typetest");
      expect("(");
      auto e = std::make_shared<Expr>();
      e->kind = Expr::TypeTest;
      e->pos = p;
      e->use = use();
      expect(",");
      e->test = type();
      expect(")");
      expect("{");
      e->y_then = ident();
      expect("=>");
      e->then_ = expr();
      expect("}");
      expect("else");
      expect("{");
      e->y_else = ident();
      expect("=>");
      e->else_ = expr();
      expect("}");
      return e;
    }
    if (is_sym("(")) {
      take();
      auto e = expr();
      expect(")");
      return e;
    }
    return mk_use(use());
  }

  BoundP enter_like(Pos p, bool explore) {
    auto b = std::make_shared<Bound>();
    b->kind = Bound::Enter;
    b->pos = p;
    b->lv = lval();
    b->caps = captures();
    expect("{");
    b->param = ident();
    expect("=>");
    b->body = expr();
    expect("}");
    if (explore) return desugar_explore(b);
    return b;
  }

  // enter lv [caps] { z => let u = new iso Unit() in let v = var drop u in
  //   let r = enter v [caps' , z = z] { _ => body } in r }
  BoundP desugar_explore(std::shared_ptr<Bound> outer) {
    int n = fresh_++;
    std::string u = "u'" + std::to_string(n), v = "uv'" + std::to_string(n),
                r = "r'" + std::to_string(n), w = "w'" + std::to_string(n);
    Pos p = outer->pos;
    auto inner = std::make_shared<Bound>();
    inner->kind = Bound::Enter;
    inner->pos = p;
    inner->lv = LVal{v, ""};
    for (auto& c : outer->caps) inner->caps.push_back(Capture{c.name, Use{true, c.name, p}});
    inner->caps.push_back(Capture{outer->param, Use{false, outer->param, p}});
    inner->param = w;
    inner->body = outer->body;

    auto unit = std::make_shared<Bound>();
    unit->kind = Bound::New;
    unit->cap = Cap::Iso;
    unit->cls = kUnit;
    unit->pos = p;
    auto cellb = std::make_shared<Bound>();
    cellb->kind = Bound::NewVar;
    cellb->use = Use{true, u, p};
    cellb->pos = p;

    auto body = mk_let(u, unit, mk_let(v, cellb, mk_let(r, inner, mk_use(Use{false, r, p}))));
    outer->body = body;
    return outer;
  }

  BoundP bound() {
    Pos p = peek().pos;
    auto b = std::make_shared<Bound>();
    b->pos = p;
    if (is_sym("*")) {
      take();
      b->kind = Bound::Deref;
      b->lv = lval();
      return b;
    }
    if (is_kw("var")) {
      take();
      b->kind = Bound::NewVar;
      b->use = use();
      return b;
    }
    if (is_kw("new")) {
      take();
      b->kind = Bound::New;
      b->cap = capability();
      b->cls = ident();
      b->args = uses();
      return b;
    }
    if (is_kw("freeze") || is_kw("merge")) {
      b->kind = take().text == "freeze" ? Bound::Freeze : Bound::Merge;
      b->use = use();
      return b;
    }
    if (is_kw("enter")) {
      take();
      return enter_like(p, false);
    }
    if (is_kw("explore")) {
      take();
      return enter_like(p, true);
    }
    if (peek().kind == Tok::Ident && !kKeywords.count(peek().text)) {
      if (is_sym("(", 1)) {
        b->kind = Bound::Call;
        b->fn = ident();
        b->args = uses();
        return b;
      }
      if (is_sym(":=", 1) || (is_sym(".", 1) && is_sym(":=", 3))) {
        b->kind = Bound::Assign;
        b->lv = lval();
        expect(":=");
        b->use = use();
        return b;
      }
    }
    return mk_nested(expr());
  }
};

std::string pad(int n) { return std::string(static_cast<size_t>(n) * 2, ' '); }

std::string uses_str(const std::vector<Use>& us) {
  std::string s = "(";
  for (size_t i = 0; i < us.size(); ++i) s += (i ? ", " : "") + pretty(us[i]);
  return s + ")";
}

}  // namespace

Program parse(const std::string& src) { return Parser(lex(src)).program(); }

TypeP parse_type(const std::string& src) { return Parser(lex(src)).type_only(); }

ExprP mk_use(Use u) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::UseE;
  e->pos = u.pos;
  e->use = std::move(u);
  return e;
}

ExprP mk_use(const std::string& v, bool drop) { return mk_use(Use{drop, v, {}}); }

ExprP mk_let(std::string x, BoundP b, ExprP body) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Let;
  e->pos = b->pos;
  e->x = std::move(x);
  e->bound = std::move(b);
  e->body = std::move(body);
  return e;
}

ExprP mk_failure() {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Failure;
  return e;
}

BoundP mk_nested(ExprP e) {
  auto b = std::make_shared<Bound>();
  b->kind = Bound::Nested;
  b->pos = e->pos;
  b->body = std::move(e);
  return b;
}

bool is_static(const ExprP& e) {
  switch (e->kind) {
    case Expr::UseE: return true;
    case Expr::Failure: return false;
    case Expr::TypeTest: return true;
    case Expr::Let:
      if (e->bound->kind == Bound::Entered) return false;
      if (e->bound->kind == Bound::Nested && !is_static(e->bound->body)) return false;
      return true;
  }
  return true;
}

int count_lets(const ExprP& e) {
  if (!e) return 0;
  switch (e->kind) {
    case Expr::Let: {
      int n = 1 + count_lets(e->body);
      auto& b = e->bound;
      if (b->body) n += count_lets(b->body);
      return n;
    }
    case Expr::TypeTest: return count_lets(e->then_) + count_lets(e->else_);
    default: return 0;
  }
}

std::string pretty(const Use& u) { return (u.drop ? "drop " : "") + u.var; }

std::string pretty(const LVal& lv) { return lv.has_field() ? lv.var + "." + lv.field : lv.var; }

std::string pretty(const BoundP& b, int ind) {
  switch (b->kind) {
    case Bound::Deref: return "*" + pretty(b->lv);
    case Bound::Assign: return pretty(b->lv) + " := " + pretty(b->use);
    case Bound::Call: return b->fn + uses_str(b->args);
    case Bound::NewVar: return "var " + pretty(b->use);
    case Bound::New: return std::string("new ") + cap_name(b->cap) + " " + b->cls + uses_str(b->args);
    case Bound::Freeze: return "freeze " + pretty(b->use);
    case Bound::Merge: return "merge " + pretty(b->use);
    case Bound::Enter: {
      std::string s = "enter " + pretty(b->lv) + " [";
      for (size_t i = 0; i < b->caps.size(); ++i)
        s += (i ? ", " : "") + b->caps[i].name + " = " + pretty(b->caps[i].use);
      s += "] { " + b->param + " =>\n" + pad(ind + 1) + pretty(b->body, ind + 1) + "\n" + pad(ind) + "}";
      return s;
    }
    case Bound::Entered:
      return "entered " + pretty(b->lv) + " " + b->param + ".val {\n" + pad(ind + 1) +
             pretty(b->body, ind + 1) + "\n" + pad(ind) + "}";
    case Bound::Nested:
      if (b->body->kind == Expr::UseE) return pretty(b->body, ind);
      return "(\n" + pad(ind + 1) + pretty(b->body, ind + 1) + "\n" + pad(ind) + ")";
  }
  return "?";
}

std::string pretty(const ExprP& e, int ind) {
  switch (e->kind) {
    case Expr::UseE: return pretty(e->use);
    case Expr::Failure: return "Failure";
    case Expr::Let:
      return "let " + e->x + " = " + pretty(e->bound, ind) + " in\n" + pad(ind) + pretty(e->body, ind);
    case Expr::TypeTest:
      return "if typetest(" + pretty(e->use) + ", " + show(e->test) + ") { " + e->y_then + " =>\n" +
             pad(ind + 1) + pretty(e->then_, ind + 1) + "\n" + pad(ind) + "} else { " + e->y_else +
             " =>\n" + pad(ind + 1) + pretty(e->else_, ind + 1) + "\n" + pad(ind) + "}";
  }
  return "?";
}

std::string pretty(const Program& p) {
  std::ostringstream os;
  for (auto& c : p.class_decls) {
    os << "class " << c.name << " {";
    for (size_t i = 0; i < c.fields.size(); ++i)
      os << (i ? ", " : " ") << c.fields[i].name << ": " << show(c.fields[i].type);
    os << (c.fields.empty() ? "}\n" : " }\n");
  }
  for (auto& f : p.funs) {
    os << "fn " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i)
      os << (i ? ", " : "") << f.params[i].first << ": " << show(f.params[i].second);
    os << "): " << show(f.result) << " {\n" << pad(1) << pretty(f.body, 1) << "\n}\n";
  }
  os << pretty(p.main, 0) << "\n";
  return os.str();
}

}  // namespace reggio
