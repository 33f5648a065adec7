#include "doctest.h"
#include "reggio/trace.hpp"
#include "util.hpp"

using namespace reggio;

namespace {

std::string trace_of(const Program& p) {
  std::string out;
  RunOptions o;
  o.check = CheckMode::EachStep;
  run_program(p, o, [&](const StepInfo& s) { out += trace_record(s) + "\n"; });
  return out;
}

}  // namespace

TEST_CASE("golden traces") {
  for (auto* name : {"listing1", "store_accept", "explore", "bridge_swap", "deep_freeze", "merge_nested",
                     "reenter_open"}) {
    CAPTURE(name);
    Program p = corpus(std::string(name) + ".rgo");
    std::string got = trace_of(p);
    CHECK(got == slurp(corpus_path(std::string("golden/") + name + ".jsonl")));
    CHECK(got == trace_of(p));
  }
}

TEST_CASE("trace record keys") {
  Program p = corpus("merge_nested.rgo");
  std::string t = trace_of(p);
  auto first = t.substr(0, t.find('\n'));
  CHECK(first.rfind(R"({"step":0,"effect":"halloc","args":)", 0) == 0);
  for (auto* k : {"\"rs\":", "\"open\":", "\"closed\":", "\"frozen\":", "\"verdict\":\"ok\""})
    CHECK(first.find(k) != std::string::npos);
  RunOptions off;
  std::string plain;
  run_program(p, off, [&](const StepInfo& s) { plain += trace_record(s); });
  CHECK(plain.find("verdict") == std::string::npos);
}

TEST_CASE("bare use has an empty trace") {
  Program p;
  p.main = mk_use("x");
  CHECK(trace_of(p).empty());
}
