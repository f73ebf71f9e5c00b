#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "adjseg/labels.hpp"
#include "adjseg/tensor.hpp"

namespace adjseg {

/// A synthetic multi-band scene: piecewise-constant class regions, each class
/// with its own spectral signature, plus i.i.d. Gaussian noise.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t channels = 16;
  std::size_t num_classes = 2;
  std::size_t blob_count = 4;
  double noise_sigma = 6.0;
  // One vector of `channels` values per class. Left empty, signatures are
  // drawn from the seed and centered across classes.
  std::vector<std::vector<double>> signatures;

  void validate() const;
};

struct Scene {
  FeatureField data;
  ClassMap truth;
  std::vector<std::vector<double>> signatures;
};

/// Background class 0, then `blob_count` random rectangles and ellipses,
/// each painting a random class over what came before. Deterministic in the
/// seed.
Scene gen_scene(const SceneSpec& spec);

struct LabelBudget {
  std::size_t n_train = 200;
  std::size_t n_val = 50;
  std::uint64_t seed = 0;
};

/// Uniform draw without replacement over the labeled pixels of `truth`;
/// the first n_train draws form the training set, the next n_val the
/// validation set. Throws ParameterError when the budget exceeds the
/// labeled pixel count.
std::pair<SelectionSet, SelectionSet> sample_labels(const ClassMap& truth, const LabelBudget& budget);

enum class Transform { Identity, FlipHorizontal, FlipVertical, Rotate90, Rotate180, Rotate270 };

// Rotations are counterclockwise.
FeatureField apply_transform(const FeatureField& field, Transform t);
ClassMap apply_transform(const ClassMap& map, Transform t);
SelectionSet apply_transform(const SelectionSet& q, std::size_t height, std::size_t width, Transform t);

/// Transform for SGD step `step`, from a stream keyed on (seed, step). Quarter
/// turns are only drawn for square fields.
Transform draw_transform(std::uint64_t seed, std::uint64_t step, bool square);

struct Augmented {
  FeatureField data;
  SelectionSet labels;
  Transform transform = Transform::Identity;
};

Augmented augment(const FeatureField& data, const SelectionSet& labels, std::uint64_t seed, std::uint64_t step);

/// On-disk experiment inputs: data.ftf, truth.lbl, train.lbl, val.lbl and
/// scene.txt (key=value, including num_classes).
struct Dataset {
  FeatureField data;
  ClassMap truth;
  SelectionSet train;
  SelectionSet val;
  std::size_t num_classes = 2;
};

void save_dataset(const std::filesystem::path& dir, const Dataset& ds, const SceneSpec& spec);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace adjseg
