#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "adjseg/activation.hpp"
#include "adjseg/labels.hpp"
#include "adjseg/tensor.hpp"

namespace adjseg {

/// Parameters of the time-stepping ResNet
///   y_1 = lift(d),  y_j = y_{j-1} - h f(K_j y_{j-1}),  output = project(y_n).
/// Interior kernels map width -> width channels; lift and project are 1x1.
struct NetworkParams {
  double step_size = 1.0;
  Activation activation = Activation::Tanh;
  ConvKernelStack lift;
  std::vector<ConvKernelStack> layers;
  ConvKernelStack project;

  std::size_t width() const { return lift.out_channels(); }
  std::size_t input_channels() const { return lift.in_channels(); }
  std::size_t num_classes() const { return project.out_channels(); }
  // Number of recorded states n (interior steps + 1).
  std::size_t state_count() const { return layers.size() + 1; }

  // Throws DimensionError/ParameterError if the shapes or h violate the
  // invariants above.
  void validate() const;

  // Parameter blocks in canonical order: lift, layers..., project.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// The input d, states y_1..y_n, the activations f(K_j y_{j-1}) for
/// j = 2..n, and the projected output. The activations are kept so the
/// backward sweep can form f' without redoing the convolutions.
struct ForwardTrace {
  FeatureField input;
  std::vector<FeatureField> states;
  std::vector<FeatureField> activations;
  FeatureField output;
};

struct LabeledLogits {
  std::vector<double> logits;
  int class_id = 0;
};

ForwardTrace forward(const NetworkParams& params, const FeatureField& data);

// Reads the class-score column of `output` at every selected pixel, in order.
std::vector<LabeledLogits> select(const FeatureField& output, const SelectionSet& q);

// Per-pixel argmax over channels; ties go to the lowest class index.
ClassMap predict_classes(const FeatureField& output);

// Directory layout: manifest.txt (key=value), lift.ftf, project.ftf,
// layer_XX.ftf for each interior step.
void save_params(const std::filesystem::path& dir, const NetworkParams& params);
NetworkParams load_params(const std::filesystem::path& dir);

}  // namespace adjseg
