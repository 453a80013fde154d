#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hasprof/simulator.hpp"

namespace hasprof {

/// Content model standing in for one video: VBR variability and length.
struct VbrPreset {
  std::string name;
  double sigma = 0.2;
  double correlation = 0.8;
  double duration_s = 560.0;
  std::uint64_t content_seed = 1;
};

/// low, medium and high motion.
const std::vector<VbrPreset>& vbr_presets();
const VbrPreset& vbr_preset(std::string_view name);

/// s1 .. s8.
const std::vector<std::string>& has_scenario_ids();
bool is_has_scenario(std::string_view id);
bool is_non_has_scenario(std::string_view id);  // download, web
bool is_known_scenario(std::string_view id);

/// Concrete script for one repetition; `seed` drives the random switch and
/// throttle times, rate jitter, start offset and ports.
SessionScript make_has_script(std::string_view scenario, const VbrPreset& preset, std::uint64_t seed);

NonHasParams make_non_has_params(std::string_view kind, std::uint64_t seed);

/// Any scenario id; the preset is ignored for non-HAS kinds.
LabeledTrace simulate_scenario(std::string_view scenario, const VbrPreset& preset, std::uint64_t seed);

}  // namespace hasprof
