#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reggio/core.hpp"
#include "reggio/syntax.hpp"

namespace reggio {

// Ordered typing context. A null type marks a buried (UNDEF) variable.
class Ctx {
 public:
  using Entry = std::pair<std::string, TypeP>;

  bool has(const std::string& x) const;
  TypeP get(const std::string& x) const;  // nullptr if absent or buried
  void set(const std::string& x, TypeP t);  // updates in place or appends
  void remove(const std::string& x);
  const std::vector<Entry>& entries() const { return e_; }
  size_t size() const { return e_.size(); }
  std::string show() const;

 private:
  std::vector<Entry> e_;
};

// Bottom context first. Every context above the bottom records the lvalue
// through which its region was entered.
struct CtxFrame {
  Ctx ctx;
  LVal entry;
};
using CtxStack = std::vector<CtxFrame>;

struct TypeError : std::runtime_error {
  std::string rule;
  Pos pos;
  TypeError(std::string r, Pos p, const std::string& m)
      : std::runtime_error(m), rule(std::move(r)), pos(p) {}
};

struct Typed {
  TypeP type;
  Ctx out;
};

// Two contexts over the same domain in the same order; types are joined and
// UNDEF absorbs. Throws TypeError if the domains differ.
Ctx merge_contexts(const Ctx& a, const Ctx& b);

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  // Class table, functions, then main. Returns the type of main.
  TypeP check_program();
  void check_classes();
  void check_functions();

  Typed check_use(const Ctx& g, const Use& u);
  Typed check_bound(const Ctx& g, const BoundP& b);
  Typed check_expr(const Ctx& g, const ExprP& e);
  Typed check_dyn(const CtxStack& s, const ExprP& de);

  const Program& program() const { return p_; }

 private:
  const Program& p_;
  std::map<std::string, Pos> last_assign_;

  [[noreturn]] void err(const std::string& rule, Pos p, const std::string& m) const;
  TypeP need(const Ctx& g, const std::string& x, const std::string& rule, Pos p) const;
  Typed thread_uses(const Ctx& g, const std::vector<Use>& us, std::vector<TypeP>& ts,
                    const std::string& rule);
  Typed check_enter(const Ctx& g, const BoundP& b);
  Typed check_typetest(const Ctx& g, const ExprP& e);
  Typed check_new(const Ctx& g, const BoundP& b);

 public:
  // Premises of leaving an entered block; returns the rebound outer context.
  Ctx exit_rebind(const Ctx& below, const LVal& lv, const Ctx& inner, const std::string& w,
                  const TypeP& result, Pos p);
};

}  // namespace reggio
