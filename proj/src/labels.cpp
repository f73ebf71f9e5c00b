#include "adjseg/labels.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <utility>

#include "adjseg/errors.hpp"

namespace adjseg {

SelectionSet::SelectionSet(std::vector<LabeledPixel> entries) : entries_(std::move(entries)) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : entries_) {
    if (!seen.emplace(e.row, e.col).second) {
      throw DimensionError("SelectionSet: duplicate pixel (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                           ")");
    }
  }
}

void SelectionSet::validate(std::size_t height, std::size_t width, std::size_t num_classes) const {
  for (const auto& e : entries_) {
    if (e.row >= height || e.col >= width) {
      throw IndexError("SelectionSet: pixel (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                       ") outside " + std::to_string(height) + "x" + std::to_string(width));
    }
    if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= num_classes) {
      throw DimensionError("SelectionSet: class id " + std::to_string(e.class_id) + " outside [0," +
                           std::to_string(num_classes) + ")");
    }
  }
}

ClassMap::ClassMap(std::size_t height, std::size_t width, int fill)
    : height_(height), width_(width), ids_(height * width, fill) {}

ClassMap::ClassMap(std::size_t height, std::size_t width, std::vector<int> ids)
    : height_(height), width_(width), ids_(std::move(ids)) {
  if (ids_.size() != height * width) throw DimensionError("ClassMap: id count does not match dimensions");
}

std::size_t ClassMap::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(ids_.begin(), ids_.end(), [](int v) { return v != kUnlabeled; }));
}

ClassMap ClassMap::from_selection(const SelectionSet& q, std::size_t height, std::size_t width) {
  ClassMap map(height, width);
  for (const auto& e : q.entries()) {
    if (e.row >= height || e.col >= width) throw IndexError("ClassMap::from_selection: pixel out of bounds");
    map.at(e.row, e.col) = e.class_id;
  }
  return map;
}

}  // namespace adjseg
