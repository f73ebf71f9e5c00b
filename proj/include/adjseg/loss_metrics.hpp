#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "adjseg/labels.hpp"
#include "adjseg/network.hpp"

namespace adjseg {

struct XentResult {
  double value = 0.0;
  // d value / d logits for every entry, already divided by the entry count.
  std::vector<std::vector<double>> grads;
};

/// Mean softmax cross-entropy over the selected pixels, with max-subtraction
/// for stability. Throws ParameterError on an empty selection.
XentResult softmax_xent(const std::vector<LabeledLogits>& selected);

struct ClassIoU {
  int class_id = 0;
  std::size_t intersection = 0;
  std::size_t union_count = 0;
  std::optional<double> iou;  // absent when the union is empty
};

struct IoUReport {
  std::vector<ClassIoU> per_class;
  double miou = 0.0;  // mean over classes with a defined IoU
};

/// Per-class intersection over union, counted only where `truth` is labeled.
/// Classes whose union is empty are left out of the mean.
IoUReport iou(const ClassMap& pred, const ClassMap& truth, std::size_t num_classes);

// Rows "alpha,class_id,iou,miou" with a header line; undefined IoUs are
// written as "nan".
void write_iou_csv(const std::filesystem::path& path, double alpha, const IoUReport& report);

}  // namespace adjseg
