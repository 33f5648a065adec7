#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "reggio/core.hpp"

namespace reggio {

struct Pos {
  int line = 0;
  int col = 0;
};

struct Use {
  bool drop = false;
  std::string var;
  Pos pos;
};

// y.f, or y alone when field is empty.
struct LVal {
  std::string var;
  std::string field;
  bool has_field() const { return !field.empty(); }
};

struct Expr;
struct Bound;
using ExprP = std::shared_ptr<const Expr>;
using BoundP = std::shared_ptr<const Bound>;

struct Capture {
  std::string name;
  Use use;
};

struct Bound {
  enum Kind { Deref, Assign, Call, NewVar, New, Freeze, Merge, Enter, Nested, Entered };
  Kind kind = Nested;
  LVal lv;                    // Deref, Assign, Enter, Entered
  Use use;                    // Assign, NewVar, Freeze, Merge
  std::string fn;             // Call
  std::vector<Use> args;      // Call, New
  Cap cap = Cap::Mut;         // New
  std::string cls;            // New
  std::vector<Capture> caps;  // Enter
  std::string param;          // Enter parameter; Entered bridge variable w
  ExprP body;                 // Enter, Nested, Entered
  Pos pos;
};

struct Expr {
  enum Kind { UseE, Let, TypeTest, Failure };
  Kind kind = UseE;
  Use use;  // UseE, TypeTest scrutinee
  std::string x;
  BoundP bound;
  ExprP body;  // Let continuation
  TypeP test;
  std::string y_then, y_else;
  ExprP then_, else_;
  Pos pos;
};

struct FunDecl {
  std::string name;
  std::vector<std::pair<std::string, TypeP>> params;
  TypeP result;
  ExprP body;
  Pos pos;
};

struct Program {
  ClassTable classes;
  std::vector<ClassDecl> class_decls;  // user classes in source order
  std::vector<FunDecl> funs;
  ExprP main;

  const FunDecl* fun(const std::string& n) const {
    for (auto& f : funs)
      if (f.name == n) return &f;
    return nullptr;
  }
};

struct SyntaxError : std::runtime_error {
  Pos pos;
  SyntaxError(Pos p, const std::string& m) : std::runtime_error(m), pos(p) {}
};

Program parse(const std::string& src);
TypeP parse_type(const std::string& src);

std::string pretty(const Program& p);
std::string pretty(const ExprP& e, int indent = 0);
std::string pretty(const BoundP& b, int indent = 0);
std::string pretty(const Use& u);
std::string pretty(const LVal& lv);

// Constructors used by the machine, the fuzzer and tests.
ExprP mk_use(Use u);
ExprP mk_use(const std::string& v, bool drop = false);
ExprP mk_let(std::string x, BoundP b, ExprP body);
ExprP mk_failure();
BoundP mk_nested(ExprP e);

bool is_static(const ExprP& e);
int count_lets(const ExprP& e);

}  // namespace reggio
