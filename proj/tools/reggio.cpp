#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "reggio/command.hpp"
#include "reggio/fuzz.hpp"
#include "reggio/trace.hpp"
#include "reggio/typecheck.hpp"

using namespace reggio;

namespace {

enum Exit { kDone = 0, kTypeError = 1, kFailed = 2, kStuck = 3, kBudget = 4, kIO = 10 };

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

void diag(const std::string& file, Pos p, const std::string& rule, const std::string& msg) {
  std::cerr << file << ":" << p.line << ":" << p.col << ": error[" << rule << "]: " << msg << "\n";
}

// Returns an exit code, or -1 when the program is loaded and well typed.
int load(const std::string& path, Program& p, TypeP* main_type = nullptr) {
  std::string src;
  if (!read_file(path, src)) {
    std::cerr << path << ": error: cannot read file\n";
    return kIO;
  }
  try {
    p = parse(src);
  } catch (SyntaxError& e) {
    diag(path, e.pos, "syntax", e.what());
    return kTypeError;
  }
  try {
    auto t = Checker(p).check_program();
    if (main_type) *main_type = t;
  } catch (TypeError& e) {
    diag(path, e.pos, e.rule, e.what());
    return kTypeError;
  }
  return -1;
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Done: return kDone;
    case Outcome::Failed: return kFailed;
    case Outcome::Stuck:
    case Outcome::Violation: return kStuck;
    case Outcome::Budget: return kBudget;
  }
  return kStuck;
}

CheckMode parse_mode(const std::string& s) {
  if (s == "final") return CheckMode::Final;
  if (s == "each-step") return CheckMode::EachStep;
  return CheckMode::Off;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reggio: region-capability language checker and interpreter"};
  app.require_subcommand(1);

  std::string file, mode = "off", bug;
  long budget = 100000;

  auto* check = app.add_subcommand("check", "type check a program");
  check->add_option("file", file)->required();

  auto* run = app.add_subcommand("run", "run a program in the tandem semantics");
  run->add_option("file", file)->required();
  run->add_option("--invariant-check", mode, "off, final or each-step")
      ->check(CLI::IsMember({"off", "final", "each-step"}));
  run->add_option("--budget", budget, "step budget");
  run->add_option("--bug", bug, "plant a machine bug (testing only)");

  std::string trace_mode = "each-step";
  auto* trace = app.add_subcommand("trace", "print one JSON record per step");
  trace->add_option("file", file)->required();
  trace->add_option("--invariant-check", trace_mode, "off, final or each-step")
      ->check(CLI::IsMember({"off", "final", "each-step"}));
  trace->add_option("--budget", budget, "step budget");
  trace->add_option("--bug", bug, "plant a machine bug (testing only)");

  CampaignOptions co;
  std::string out = "fuzz_repro.rgo";
  long fuzz_budget = 10000;
  auto* fuzz = app.add_subcommand("fuzz", "generate and run well-typed programs");
  fuzz->add_option("--seeds", co.programs, "number of programs");
  fuzz->add_option("--depth", co.depth, "generation depth");
  fuzz->add_option("--seed", co.seed, "first seed");
  fuzz->add_option("--budget", fuzz_budget, "step budget per program");
  fuzz->add_option("--threads", co.threads, "worker threads (0 = all cores)");
  fuzz->add_option("--bug", bug, "plant a machine bug (testing only)");
  fuzz->add_option("--out", out, "where to write a shrunk reproducer");
  bool emit = false;
  fuzz->add_flag("--emit", emit, "print the program generated from --seed and exit");

  CLI11_PARSE(app, argc, argv);

  Bugs bugs;
  if (!bug.empty() && !bugs.set(bug)) {
    std::cerr << "unknown bug '" << bug << "'\n";
    return kIO;
  }

  if (*check) {
    Program p;
    TypeP t;
    int rc = load(file, p, &t);
    if (rc >= 0) return rc;
    std::cout << show(t) << "\n";
    return kDone;
  }

  if (*run || *trace) {
    Program p;
    int rc = load(file, p);
    if (rc >= 0) return rc;
    RunOptions o;
    o.check = parse_mode(*run ? mode : trace_mode);
    o.budget = budget;
    o.bugs = bugs;
    std::function<void(const StepInfo&)> obs;
    if (*trace) obs = [](const StepInfo& s) { std::cout << trace_record(s) << "\n"; };
    RunResult r = run_program(p, o, obs);
    if (*run) {
      std::cout << outcome_name(r.outcome) << " after " << r.steps << " steps";
      if (r.outcome == Outcome::Done) std::cout << ", result " << r.result_var;
      std::cout << "\n";
    }
    if (!r.detail.empty() && r.outcome != Outcome::Done && r.outcome != Outcome::Failed)
      std::cerr << r.detail << "\n";
    return exit_code(r.outcome);
  }

  if (*fuzz) {
    co.budget = fuzz_budget;
    co.bugs = bugs;
    if (emit) {
      GenConfig gc;
      gc.seed = co.seed;
      gc.depth = co.depth;
      gc.enter_nesting = co.enter_nesting;
      std::cout << pretty(generate(gc));
      return kDone;
    }
    auto res = run_campaign(co);
    std::cout << "programs " << res.run << " done " << res.done << " failed " << res.failed << " budget "
              << res.budget << " stuck " << res.stuck << " violations " << res.violations
              << " enter+freeze/merge " << res.with_enter_and_freeze << "\n";
    if (res.ok()) return kDone;
    std::cout << "first bad program at index " << res.first_bad << ": " << res.first_bad_detail << "\n";
    auto trig = [&](const Program& q) {
      auto r = soundness_run(q, co.budget, bugs);
      return r.outcome == Outcome::Stuck || r.outcome == Outcome::Violation;
    };
    Program small = shrink(res.first_bad_program, trig);
    std::ofstream os(out);
    os << pretty(small);
    std::cout << "shrunk reproducer (" << count_lets(small.main) << " lets) written to " << out << "\n";
    return kStuck;
  }
  return kDone;
}
