#include "adjseg/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "adjseg/errors.hpp"
#include "adjseg/io.hpp"
#include "adjseg/keyvalue.hpp"

namespace adjseg {

void SceneSpec::validate() const {
  if (height == 0 || width == 0 || channels == 0) throw ParameterError("SceneSpec: empty scene");
  if (num_classes < 2) throw ParameterError("SceneSpec: need at least two classes");
  if (!std::isfinite(noise_sigma) || noise_sigma < 0.0) throw ParameterError("SceneSpec: bad noise_sigma");
  if (!signatures.empty()) {
    if (signatures.size() != num_classes) throw ParameterError("SceneSpec: one signature per class required");
    for (const auto& s : signatures) {
      if (s.size() != channels) throw ParameterError("SceneSpec: signature length != channels");
    }
    for (std::size_t a = 0; a < signatures.size(); ++a)
      for (std::size_t b = a + 1; b < signatures.size(); ++b)
        if (signatures[a] == signatures[b]) throw ParameterError("SceneSpec: signatures must be distinct");
  }
}

Scene gen_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.signatures = spec.signatures;
  if (scene.signatures.empty()) {
    scene.signatures.assign(spec.num_classes, std::vector<double>(spec.channels));
    for (auto& s : scene.signatures)
      for (double& v : s) v = gauss(rng);
    for (std::size_t c = 0; c < spec.channels; ++c) {
      double mean = 0.0;
      for (const auto& s : scene.signatures) mean += s[c];
      mean /= static_cast<double>(spec.num_classes);
      for (auto& s : scene.signatures) s[c] -= mean;
    }
  }

  const double h = static_cast<double>(spec.height);
  const double w = static_cast<double>(spec.width);
  scene.truth = ClassMap(spec.height, spec.width, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(0, static_cast<int>(spec.num_classes) - 1);
  for (std::size_t b = 0; b < spec.blob_count; ++b) {
    const bool ellipse = unit(rng) < 0.5;
    const double cy = unit(rng) * h;
    const double cx = unit(rng) * w;
    const double ry = (0.06 + 0.19 * unit(rng)) * h;
    const double rx = (0.06 + 0.19 * unit(rng)) * w;
    const int cls = pick_class(rng);
    for (std::size_t i = 0; i < spec.height; ++i) {
      for (std::size_t j = 0; j < spec.width; ++j) {
        const double dy = (static_cast<double>(i) + 0.5 - cy) / ry;
        const double dx = (static_cast<double>(j) + 0.5 - cx) / rx;
        const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside) scene.truth.at(i, j) = cls;
      }
    }
  }

  scene.data = FeatureField(spec.channels, spec.height, spec.width);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    for (std::size_t i = 0; i < spec.height; ++i) {
      for (std::size_t j = 0; j < spec.width; ++j) {
        const auto cls = static_cast<std::size_t>(scene.truth.at(i, j));
        scene.data.at(c, i, j) = scene.signatures[cls][c] + spec.noise_sigma * gauss(rng);
      }
    }
  }
  return scene;
}

std::pair<SelectionSet, SelectionSet> sample_labels(const ClassMap& truth, const LabelBudget& budget) {
  std::vector<LabeledPixel> pool;
  for (std::size_t i = 0; i < truth.height(); ++i)
    for (std::size_t j = 0; j < truth.width(); ++j)
      if (truth.at(i, j) != ClassMap::kUnlabeled) pool.push_back({i, j, truth.at(i, j)});

  const std::size_t wanted = budget.n_train + budget.n_val;
  if (wanted > pool.size()) {
    throw ParameterError("sample_labels: budget of " + std::to_string(wanted) + " exceeds " +
                         std::to_string(pool.size()) + " labeled pixels");
  }
  std::mt19937_64 rng(budget.seed);
  for (std::size_t k = 0; k < wanted; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  const auto split = pool.begin() + static_cast<std::ptrdiff_t>(budget.n_train);
  return {SelectionSet({pool.begin(), split}),
          SelectionSet({split, pool.begin() + static_cast<std::ptrdiff_t>(wanted)})};
}

namespace {

bool swaps_axes(Transform t) { return t == Transform::Rotate90 || t == Transform::Rotate270; }

// Source coordinate in the original h x w grid for destination (r, c).
std::pair<std::size_t, std::size_t> source_of(std::size_t r, std::size_t c, std::size_t h, std::size_t w,
                                              Transform t) {
  switch (t) {
    case Transform::Identity:
      return {r, c};
    case Transform::FlipHorizontal:
      return {r, w - 1 - c};
    case Transform::FlipVertical:
      return {h - 1 - r, c};
    case Transform::Rotate90:
      return {c, w - 1 - r};
    case Transform::Rotate180:
      return {h - 1 - r, w - 1 - c};
    case Transform::Rotate270:
      return {h - 1 - c, r};
  }
  return {r, c};
}

// Destination coordinate of original pixel (r, c).
std::pair<std::size_t, std::size_t> destination_of(std::size_t r, std::size_t c, std::size_t h, std::size_t w,
                                                   Transform t) {
  switch (t) {
    case Transform::Identity:
      return {r, c};
    case Transform::FlipHorizontal:
      return {r, w - 1 - c};
    case Transform::FlipVertical:
      return {h - 1 - r, c};
    case Transform::Rotate90:
      return {w - 1 - c, r};
    case Transform::Rotate180:
      return {h - 1 - r, w - 1 - c};
    case Transform::Rotate270:
      return {c, h - 1 - r};
  }
  return {r, c};
}

}  // namespace

FeatureField apply_transform(const FeatureField& field, Transform t) {
  const std::size_t h = field.height(), w = field.width();
  const std::size_t oh = swaps_axes(t) ? w : h;
  const std::size_t ow = swaps_axes(t) ? h : w;
  FeatureField out(field.channels(), oh, ow);
  for (std::size_t c = 0; c < field.channels(); ++c)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t col = 0; col < ow; ++col) {
        const auto [sr, sc] = source_of(r, col, h, w, t);
        out.at(c, r, col) = field.at(c, sr, sc);
      }
  return out;
}

ClassMap apply_transform(const ClassMap& map, Transform t) {
  const std::size_t h = map.height(), w = map.width();
  const std::size_t oh = swaps_axes(t) ? w : h;
  const std::size_t ow = swaps_axes(t) ? h : w;
  ClassMap out(oh, ow);
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      const auto [sr, sc] = source_of(r, c, h, w, t);
      out.at(r, c) = map.at(sr, sc);
    }
  return out;
}

SelectionSet apply_transform(const SelectionSet& q, std::size_t height, std::size_t width, Transform t) {
  std::vector<LabeledPixel> moved;
  moved.reserve(q.size());
  for (const auto& e : q.entries()) {
    if (e.row >= height || e.col >= width) throw IndexError("apply_transform: label outside field");
    const auto [r, c] = destination_of(e.row, e.col, height, width, t);
    moved.push_back({r, c, e.class_id});
  }
  return SelectionSet(std::move(moved));
}

Transform draw_transform(std::uint64_t seed, std::uint64_t step, bool square) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  static constexpr Transform kAll[] = {Transform::Identity,  Transform::FlipHorizontal, Transform::FlipVertical,
                                       Transform::Rotate180, Transform::Rotate90,       Transform::Rotate270};
  std::uniform_int_distribution<int> pick(0, square ? 5 : 3);
  return kAll[pick(rng)];
}

Augmented augment(const FeatureField& data, const SelectionSet& labels, std::uint64_t seed, std::uint64_t step) {
  const Transform t = draw_transform(seed, step, data.height() == data.width());
  return {apply_transform(data, t), apply_transform(labels, data.height(), data.width(), t), t};
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds, const SceneSpec& spec) {
  std::filesystem::create_directories(dir);
  write_ftf(dir / "data.ftf", ds.data);
  write_class_map(dir / "truth.lbl", ds.truth);
  write_selection(dir / "train.lbl", ds.train, ds.data.height(), ds.data.width());
  write_selection(dir / "val.lbl", ds.val, ds.data.height(), ds.data.width());
  std::ofstream m(dir / "scene.txt");
  if (!m) throw ConfigError("cannot write scene.txt in '" + dir.string() + "'");
  m << "seed=" << spec.seed << '\n'
    << "height=" << spec.height << '\n'
    << "width=" << spec.width << '\n'
    << "bands=" << spec.channels << '\n'
    << "num_classes=" << ds.num_classes << '\n'
    << "blobs=" << spec.blob_count << '\n'
    << "noise=" << spec.noise_sigma << '\n'
    << "n_train=" << ds.train.size() << '\n'
    << "n_val=" << ds.val.size() << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  const auto kv = read_key_values(dir / "scene.txt");
  auto it = kv.find("num_classes");
  if (it == kv.end()) throw ConfigError("scene.txt: missing num_classes");
  const long long k = parse_integer("num_classes", it->second);
  if (k < 2) throw ConfigError("scene.txt: num_classes must be >= 2");
  ds.num_classes = static_cast<std::size_t>(k);
  ds.data = read_ftf(dir / "data.ftf");
  ds.truth = read_class_map(dir / "truth.lbl");
  ds.train = read_selection(dir / "train.lbl");
  ds.val = read_selection(dir / "val.lbl");
  if (ds.truth.height() != ds.data.height() || ds.truth.width() != ds.data.width()) {
    throw DimensionError("dataset: truth and data differ in size");
  }
  ds.train.validate(ds.data.height(), ds.data.width(), ds.num_classes);
  ds.val.validate(ds.data.height(), ds.data.width(), ds.num_classes);
  return ds;
}

}  // namespace adjseg
