#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace adjseg {

struct LabeledPixel {
  std::size_t row = 0;
  std::size_t col = 0;
  int class_id = 0;

  friend bool operator==(const LabeledPixel&, const LabeledPixel&) = default;
};

/// Sparse point annotations: the pixels where a class is known, in a fixed
/// order. Plays the role of the 0/1 selection operator Q together with the
/// label vector. No pixel appears twice.
class SelectionSet {
 public:
  SelectionSet() = default;
  explicit SelectionSet(std::vector<LabeledPixel> entries);

  const std::vector<LabeledPixel>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Throws IndexError if any entry falls outside height x width and
  // DimensionError if a class id is outside [0, num_classes).
  void validate(std::size_t height, std::size_t width, std::size_t num_classes) const;

  friend bool operator==(const SelectionSet&, const SelectionSet&) = default;

 private:
  std::vector<LabeledPixel> entries_;
};

/// Dense per-pixel class ids; kUnlabeled marks pixels without ground truth.
class ClassMap {
 public:
  static constexpr int kUnlabeled = -1;

  ClassMap() = default;
  ClassMap(std::size_t height, std::size_t width, int fill = kUnlabeled);
  ClassMap(std::size_t height, std::size_t width, std::vector<int> ids);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return ids_.size(); }

  int& at(std::size_t i, std::size_t j) { return ids_[i * width_ + j]; }
  int at(std::size_t i, std::size_t j) const { return ids_[i * width_ + j]; }
  const std::vector<int>& ids() const { return ids_; }

  std::size_t labeled_count() const;

  // Map that is unlabeled everywhere except at the selection's pixels.
  static ClassMap from_selection(const SelectionSet& q, std::size_t height, std::size_t width);

  friend bool operator==(const ClassMap&, const ClassMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<int> ids_;
};

}  // namespace adjseg
