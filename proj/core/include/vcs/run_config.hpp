#pragma once

#include <string>

#include "vcs/gap_tv.hpp"
#include "vcs/training.hpp"
#include "vcs/unfold_net.hpp"

namespace vcs {

/// JSON run configuration: {"train": {...}, "model": {...}, "gap_tv": {...}}.
/// Every section and key is optional (defaults apply); unknown keys are
/// rejected with the offending key named. parse -> serialize -> parse is the
/// identity.
struct RunConfig {
  TrainConfig train;
  UnfoldSpec model;
  GapTvConfig gap_tv;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);

RunConfig run_config_from_file(const std::string& path);

}  // namespace vcs
