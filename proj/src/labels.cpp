#include "hasprof/labels.hpp"

#include <algorithm>
#include <tuple>

#include "hasprof/errors.hpp"
#include "hasprof/trace_io.hpp"

namespace hasprof {

namespace {

const std::vector<std::string> kServiceNames{"NonHAS", "HAS"};
const std::vector<std::string> kBufferNames{"Filling", "Steady", "Depleting", "Unclear"};

auto order_key(const LabelInterval& iv) { return std::tie(iv.flow, iv.label.family, iv.start, iv.end); }

std::string describe(const LabelInterval& iv) {
  return iv.flow.to_string() + " [" + format_seconds(iv.start) + ", " + format_seconds(iv.end) + ") " +
         std::string(iv.label.name());
}

}  // namespace

const std::vector<std::string>& class_names(LabelFamily family) {
  return family == LabelFamily::Service ? kServiceNames : kBufferNames;
}

std::string_view Label::name() const { return class_names(family).at(static_cast<std::size_t>(code)); }

Label Label::parse(std::string_view name) {
  for (LabelFamily family : {LabelFamily::Service, LabelFamily::Buffer}) {
    const auto& names = class_names(family);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return Label{family, static_cast<int>(i)};
    }
  }
  throw FormatError("unknown label: " + std::string(name));
}

void validate_labels(const std::vector<LabelInterval>& intervals) {
  for (const auto& iv : intervals) {
    if (!(iv.start < iv.end)) throw InvalidConfig("empty or reversed label interval " + describe(iv));
  }
  std::vector<const LabelInterval*> sorted;
  sorted.reserve(intervals.size());
  for (const auto& iv : intervals) sorted.push_back(&iv);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return order_key(*a) < order_key(*b); });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& prev = *sorted[i - 1];
    const auto& cur = *sorted[i];
    if (prev.flow == cur.flow && prev.label.family == cur.label.family && cur.start < prev.end) {
      throw OverlapError("overlapping label intervals: " + describe(prev) + " and " + describe(cur));
    }
  }
}

LabelIndex::LabelIndex(std::vector<LabelInterval> intervals) : sorted_(std::move(intervals)) {
  validate_labels(sorted_);
  std::sort(sorted_.begin(), sorted_.end(), [](const auto& a, const auto& b) { return order_key(a) < order_key(b); });
}

const LabelInterval* LabelIndex::find(const FlowKey& flow, LabelFamily family, Nanos t) const {
  // Last interval of (flow, family) starting at or before t.
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), std::tie(flow, family, t),
                             [](const auto& probe, const LabelInterval& iv) {
                               return probe < std::tie(iv.flow, iv.label.family, iv.start);
                             });
  if (it == sorted_.begin()) return nullptr;
  --it;
  if (it->flow != flow || it->label.family != family || !it->contains(t)) return nullptr;
  return &*it;
}

bool LabelIndex::has_flow(const FlowKey& flow) const {
  return std::any_of(sorted_.begin(), sorted_.end(), [&](const auto& iv) { return iv.flow == flow; });
}

}  // namespace hasprof
