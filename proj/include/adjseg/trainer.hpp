#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adjseg/activation.hpp"
#include "adjseg/adjoint.hpp"
#include "adjseg/data_synth.hpp"
#include "adjseg/loss_metrics.hpp"
#include "adjseg/network.hpp"
#include "adjseg/regularizer.hpp"

namespace adjseg {

struct ArchSpec {
  std::size_t input_channels = 16;
  std::size_t width = 32;
  std::size_t steps = 10;  // interior layers; the network records steps + 1 states
  std::size_t num_classes = 2;
  std::size_t kernel_size = 3;
  Activation activation = Activation::Tanh;
  double step_size = 1.0;
};

/// Gaussian kernels with standard deviation scale / sqrt(in * kh * kw).
/// scale = 0 gives an all-zero network.
NetworkParams init_params(const ArchSpec& arch, std::uint64_t seed, double scale = 1.0);

/// Every knob of one training run. Parsed from key=value text; unknown keys
/// are rejected.
struct TrainConfig {
  std::size_t iterations = 250;
  double lr0 = 0.01;
  double decay = 0.5;            // learning-rate factor applied every decay_every iterations
  std::size_t decay_every = 100;
  std::uint64_t seed = 0;        // initialization and augmentation stream
  bool augment = true;
  RegularizerSpec regularizer;
  std::size_t width = 32;
  std::size_t steps = 10;
  Activation activation = Activation::Tanh;
  double step_size = 1.0;
  std::size_t eval_every = 25;
  double init_scale = 1.0;
  // Global gradient-norm cap for the SGD step; 0 disables clipping.
  double clip_norm = 0.0;

  void validate() const;
  double learning_rate(std::size_t iteration) const;
  ArchSpec arch(std::size_t input_channels, std::size_t num_classes) const;

  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv);
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string to_text() const;
};

struct HistoryRow {
  std::size_t iteration = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
  double regularizer = 0.0;  // unscaled R(output)
  double objective = 0.0;
  double grad_norm = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_miou;
};

enum class RunStatus { Ok, Diverged };
std::string to_string(RunStatus s);

struct TrainResult {
  NetworkParams params;  // last finite parameters
  std::vector<HistoryRow> history;
  RunStatus status = RunStatus::Ok;
};

/// Plain SGD: per iteration augment -> adjoint gradient -> params -= lr * grad,
/// with the step-decay schedule and optional gradient-norm clipping. On a
/// non-finite objective the run stops with status Diverged and the last
/// parameters whose objective was finite.
TrainResult train(const TrainConfig& config, const FeatureField& data, const SelectionSet& train_labels,
                  const SelectionSet& val_labels, std::size_t num_classes);

/// Step `params` in place by -lr * grad.
void sgd_step(NetworkParams& params, const GradientBundle& grad, double lr);
double gradient_norm(const GradientBundle& grad);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

struct Evaluation {
  IoUReport report;
  ClassMap prediction;
};

Evaluation evaluate(const NetworkParams& params, const FeatureField& data, const ClassMap& truth);

// mIoU of the prediction restricted to the selected pixels.
double selection_miou(const NetworkParams& params, const FeatureField& data, const SelectionSet& q);

struct SweepRecord {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double val_miou = 0.0;
  double test_miou = 0.0;
  double wall_seconds = 0.0;
  RunStatus status = RunStatus::Ok;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // sorted by (alpha, seed)
  std::optional<double> best_alpha;  // argmax of the seed-median validation mIoU
};

/// One training run per (alpha, seed), the quadratic smoother as penalty.
/// `jobs` > 1 runs them on worker threads; results do not depend on it.
SweepResult sweep(const TrainConfig& base, const std::vector<double>& alphas, const std::vector<std::uint64_t>& seeds,
                  const Dataset& ds, std::size_t jobs = 1);

double median(std::vector<double> values);
// Median of `field` over the non-diverged rows with the given alpha.
std::optional<double> median_for_alpha(const std::vector<SweepRecord>& records, double alpha, double SweepRecord::*field);

// "alpha,seed,train_loss,val_miou,test_miou,status" rows, doubles as %.17g.
std::string sweep_csv(const std::vector<SweepRecord>& records);

struct GradcheckProblem {
  NetworkParams params;
  FeatureField data;
  SelectionSet labels;
};

/// Fixed small instance for adjoint checks: 8x8 scene with 3 bands and 2
/// classes, Tanh network with width 4 and two interior layers, 12 labels.
GradcheckProblem make_gradcheck_problem(std::uint64_t seed);

}  // namespace adjseg
