#include "reggio/trace.hpp"

#include "json.hpp"

namespace reggio {

std::string trace_record(const StepInfo& s) {
  nlohmann::ordered_json j;
  j["step"] = s.index;
  j["effect"] = s.effect->name();
  j["args"] = s.effect->rendered_args();
  j["rs"] = s.cfg->region_stack();
  j["open"] = s.cfg->open.size();
  j["closed"] = s.cfg->closed.size();
  j["frozen"] = s.cfg->frozen.size();
  if (s.report) j["verdict"] = s.report->ok() ? "ok" : "violation";
  return j.dump();
}

}  // namespace reggio
