#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "reggio/command.hpp"
#include "reggio/syntax.hpp"

namespace reggio {

struct Weights {
  int new_obj = 8;
  int freeze = 3;
  int merge = 2;
  int deref = 5;
  int assign = 4;
  int var_new = 3;
  int var_assign = 3;
  int var_deref = 2;
  int enter = 6;
  int typetest = 2;
  int call = 2;
  int nested = 1;
};

struct GenConfig {
  uint64_t seed = 1;
  int depth = 8;
  int max_classes = 4;
  int max_fields = 3;
  int max_functions = 2;
  int enter_nesting = 3;
  Weights weights;
};

Program generate(const GenConfig& cfg);

bool has_enter(const Program& p);
bool has_freeze_or_merge(const Program& p);

RunResult soundness_run(const Program& p, long budget, const Bugs& bugs = {});

// Greedy one-step reductions until none still typechecks and triggers.
Program shrink(const Program& p, const std::function<bool(const Program&)>& triggers);

struct CampaignOptions {
  int programs = 1000;
  int depth = 8;
  int enter_nesting = 3;
  uint64_t seed = 1;
  long budget = 10000;
  Bugs bugs;
  int threads = 0;  // 0 picks the hardware concurrency
  bool stop_on_failure = true;
};

struct CampaignResult {
  int run = 0;
  int done = 0, failed = 0, budget = 0, stuck = 0, violations = 0;
  int with_enter_and_freeze = 0;
  long total_steps = 0;
  int first_bad = -1;  // index of the first Stuck or violating program
  std::string first_bad_detail;
  Program first_bad_program;
  bool ok() const { return stuck == 0 && violations == 0; }
};

CampaignResult run_campaign(const CampaignOptions& opt);

bool typechecks(const Program& p);

}  // namespace reggio
