#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reggio/invariants.hpp"
#include "reggio/machine.hpp"
#include "reggio/syntax.hpp"
#include "reggio/typecheck.hpp"

namespace reggio {

using Renaming = std::map<std::string, std::string>;

ExprP subst(const ExprP& e, const Renaming& m);
BoundP subst(const BoundP& b, const Renaming& m);

Effect synth_effect(const std::string& x, const BoundP& b);

class CommandMachine {
 public:
  explicit CommandMachine(const Program& p) : p_(p) {}

  std::vector<std::pair<Effect, ExprP>> step(const ExprP& de);
  std::string fresh(const std::string& base);

 private:
  const Program& p_;
  long counter_ = 0;

  ExprP alpha(const ExprP& e, Renaming m);
  BoundP alpha(const BoundP& b, Renaming m);
};

enum class CheckMode { Off, Final, EachStep };

enum class Outcome { Done, Failed, Stuck, Violation, Budget };
const char* outcome_name(Outcome o);

struct StepInfo {
  long index = 0;
  const Effect* effect = nullptr;
  const Config* cfg = nullptr;
  const ExprP* de = nullptr;
  const Report* report = nullptr;  // set when invariants were checked this step
};

struct RunResult {
  Outcome outcome = Outcome::Done;
  long steps = 0;
  std::string detail;
  Report report;
  Config final_cfg;
  std::string result_var;
};

struct RunOptions {
  CheckMode check = CheckMode::Off;
  long budget = 100000;
  Bugs bugs;
};

// Runs a well-typed program, driving both machines with one agreed effect per step.
RunResult run_program(const Program& p, const RunOptions& opt,
                      const std::function<void(const StepInfo&)>& observer = {});

}  // namespace reggio
