#include "doctest.h"
#include "reggio/typecheck.hpp"
#include "util.hpp"

using namespace reggio;

namespace {

const char* kCorpus[] = {"listing1.rgo",       "store_accept.rgo", "store_reject_x.rgo",
                         "store_reject_y.rgo", "explore.rgo",      "bridge_swap.rgo",
                         "deep_freeze.rgo",    "merge_nested.rgo", "reenter_open.rgo"};

Pos error_pos(const std::string& src) {
  try {
    parse(src);
  } catch (SyntaxError& e) {
    return e.pos;
  }
  return {-1, -1};
}

}  // namespace

TEST_CASE("pretty output parses back to itself") {
  for (auto* f : kCorpus) {
    CAPTURE(f);
    Program p = corpus(f);
    std::string once = pretty(p);
    std::string twice = pretty(parse(once));
    CHECK(once == twice);
  }
}

TEST_CASE("types parse left associated") {
  CHECK(show(parse_type("mut C | imm D | iso E")) == "mut C | imm D | iso E");
  CHECK(show(parse_type("mut C | (imm D | iso E)")) == "mut C | (imm D | iso E)");
  auto t = parse_type("var Cell[iso C | imm Unit]");
  REQUIRE(t->is_cell());
  CHECK(show(t->param) == "iso C | imm Unit");
}

TEST_CASE("let chains and uses") {
  Program p = parse("class A {}\nlet a = new iso A() in\nlet b = freeze drop a in\nb");
  CHECK(count_lets(p.main) == 2);
  REQUIRE(p.main->kind == Expr::Let);
  CHECK(p.main->bound->kind == Bound::New);
  CHECK(p.main->bound->cap == Cap::Iso);
  auto& second = p.main->body->bound;
  CHECK(second->kind == Bound::Freeze);
  CHECK(second->use.drop);
  CHECK(second->use.var == "a");
  CHECK(is_static(p.main));
}

TEST_CASE("explore desugars into two enters") {
  Program p = corpus("explore.rgo");
  const Expr* e = p.main.get();
  while (e->kind == Expr::Let && e->bound->kind != Bound::Enter) e = e->body.get();
  REQUIRE(e->kind == Expr::Let);
  auto& outer = e->bound;
  CHECK(outer->lv.var == "h");
  CHECK(outer->lv.field == "inner");
  CHECK(outer->param == "z");
  // Inside: a Unit iso, a var cell of it, and an enter of that cell with z captured.
  std::string body = pretty(outer->body);
  CHECK(body.find("new iso Unit()") != std::string::npos);
  CHECK(body.find("var drop") != std::string::npos);
  const Expr* in = outer->body.get();
  while (in->kind == Expr::Let && in->bound->kind != Bound::Enter) in = in->body.get();
  REQUIRE(in->kind == Expr::Let);
  bool captures_z = false;
  for (auto& c : in->bound->caps) captures_z |= c.name == "z" && c.use.var == "z";
  CHECK(captures_z);
  CHECK(Checker(p).check_program() != nullptr);
}

TEST_CASE("syntax errors carry positions") {
  auto p = error_pos("class A {}\nlet a = new iso A( in a");
  CHECK(p.line == 2);
  CHECK(p.col == 20);
  CHECK(error_pos("let x = # in x").col == 9);
  CHECK(error_pos("class Unit {}\nx").line == 1);
  CHECK(error_pos("class Cell {}\nx").line == 1);
  CHECK(error_pos("class A { f: mut A, f: mut A }\nx").line == 1);
  CHECK(error_pos("class A { f: own A }\nx").col == 14);
  CHECK(error_pos("let in = x in x").line == 1);
  CHECK(error_pos("x y").col == 3);
}

TEST_CASE("comments and primes in names") {
  Program p = parse("// c\nclass A {} // trailing\nlet a' = new iso A() in a'");
  CHECK(p.main->x == "a'");
}
