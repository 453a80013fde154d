#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hasprof/packet_model.hpp"

namespace hasprof {

enum class LabelFamily : std::uint8_t { Service, Buffer };

/// Fixed class codes, shared by label files, datasets and model files.
namespace service {
inline constexpr int kNonHas = 0;
inline constexpr int kHas = 1;
}  // namespace service

namespace buffer_state {
inline constexpr int kFilling = 0;
inline constexpr int kSteady = 1;
inline constexpr int kDepleting = 2;
inline constexpr int kUnclear = 3;
}  // namespace buffer_state

struct Label {
  LabelFamily family = LabelFamily::Buffer;
  int code = 0;

  std::string_view name() const;
  static Label parse(std::string_view name);

  auto operator<=>(const Label&) const = default;
};

const std::vector<std::string>& class_names(LabelFamily family);

struct LabelInterval {
  FlowKey flow;
  Nanos start{0};  // inclusive
  Nanos end{0};    // exclusive
  Label label;

  bool contains(Nanos t) const { return start <= t && t < end; }
  bool operator==(const LabelInterval&) const = default;
};

/// Throws OverlapError if two intervals of one flow and family intersect, or
/// InvalidConfig for an empty or reversed interval.
void validate_labels(const std::vector<LabelInterval>& intervals);

/// Sorted per-(flow, family) lookup of the interval covering an instant.
class LabelIndex {
 public:
  explicit LabelIndex(std::vector<LabelInterval> intervals);

  const LabelInterval* find(const FlowKey& flow, LabelFamily family, Nanos t) const;
  bool has_flow(const FlowKey& flow) const;

 private:
  std::vector<LabelInterval> sorted_;
};

}  // namespace hasprof
