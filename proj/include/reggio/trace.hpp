#pragma once

#include <string>

#include "reggio/command.hpp"

namespace reggio {

// One JSON object per tandem step, keys in a fixed order:
// step, effect, args, rs, open, closed, frozen, and verdict when checked.
std::string trace_record(const StepInfo& s);

}  // namespace reggio
