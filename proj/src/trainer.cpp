#include "adjseg/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "adjseg/adjoint.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/keyvalue.hpp"

namespace adjseg {

NetworkParams init_params(const ArchSpec& arch, std::uint64_t seed, double scale) {
  if (arch.input_channels == 0 || arch.width == 0 || arch.num_classes < 2) {
    throw ParameterError("init_params: bad architecture");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](std::size_t out, std::size_t in, std::size_t k) {
    ConvKernelStack stack(out, in, k, k);
    const double sd = scale / std::sqrt(static_cast<double>(in * k * k));
    for (double& w : stack.weights()) w = sd * gauss(rng);
    return stack;
  };
  NetworkParams p;
  p.step_size = arch.step_size;
  p.activation = arch.activation;
  p.lift = draw(arch.width, arch.input_channels, 1);
  for (std::size_t j = 0; j < arch.steps; ++j) p.layers.push_back(draw(arch.width, arch.width, arch.kernel_size));
  p.project = draw(arch.num_classes, arch.width, 1);
  p.validate();
  return p;
}

void TrainConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (!std::isfinite(lr0) || lr0 < 0.0) throw ConfigError("lr0 must be finite and >= 0");
  if (!std::isfinite(decay) || decay <= 0.0 || decay > 1.0) throw ConfigError("decay must lie in (0, 1]");
  if (decay_every == 0) throw ConfigError("decay_every must be positive");
  if (width == 0) throw ConfigError("width must be positive");
  if (!std::isfinite(step_size) || step_size < 0.0) throw ConfigError("h must be finite and >= 0");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (!std::isfinite(init_scale) || init_scale < 0.0) throw ConfigError("init_scale must be finite and >= 0");
  if (!std::isfinite(clip_norm) || clip_norm < 0.0) throw ConfigError("clip_norm must be finite and >= 0");
  if (!std::isfinite(regularizer.alpha) || regularizer.alpha < 0.0) throw ConfigError("alpha must be >= 0");
}

double TrainConfig::learning_rate(std::size_t iteration) const {
  return lr0 * std::pow(decay, static_cast<double>(iteration / decay_every));
}

ArchSpec TrainConfig::arch(std::size_t input_channels, std::size_t num_classes) const {
  ArchSpec a;
  a.input_channels = input_channels;
  a.width = width;
  a.steps = steps;
  a.num_classes = num_classes;
  a.activation = activation;
  a.step_size = step_size;
  return a;
}

TrainConfig TrainConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto count = [](const std::string& k, const std::string& v) {
    const long long n = parse_integer(k, v);
    if (n < 0) throw ConfigError("'" + k + "' must be non-negative");
    return static_cast<std::size_t>(n);
  };
  for (const auto& [key, value] : kv) {
    if (key == "iterations") c.iterations = count(key, value);
    else if (key == "lr0") c.lr0 = parse_double(key, value);
    else if (key == "decay") c.decay = parse_double(key, value);
    else if (key == "decay_every") c.decay_every = count(key, value);
    else if (key == "seed") c.seed = count(key, value);
    else if (key == "augment") c.augment = parse_bool(key, value);
    else if (key == "regularizer") c.regularizer.kind = parse_regularizer_kind(value);
    else if (key == "alpha") c.regularizer.alpha = parse_double(key, value);
    else if (key == "width") c.width = count(key, value);
    else if (key == "steps") c.steps = count(key, value);
    else if (key == "activation") c.activation = parse_activation(value);
    else if (key == "h") c.step_size = parse_double(key, value);
    else if (key == "eval_every") c.eval_every = count(key, value);
    else if (key == "init_scale") c.init_scale = parse_double(key, value);
    else if (key == "clip_norm") c.clip_norm = parse_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  return from_key_values(read_key_values(path));
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "iterations=" << iterations << '\n'
      << "lr0=" << num(lr0) << '\n'
      << "decay=" << num(decay) << '\n'
      << "decay_every=" << decay_every << '\n'
      << "seed=" << seed << '\n'
      << "augment=" << (augment ? "true" : "false") << '\n'
      << "regularizer=" << to_string(regularizer.kind) << '\n'
      << "alpha=" << num(regularizer.alpha) << '\n'
      << "width=" << width << '\n'
      << "steps=" << steps << '\n'
      << "activation=" << to_string(activation) << '\n'
      << "h=" << num(step_size) << '\n'
      << "eval_every=" << eval_every << '\n'
      << "init_scale=" << num(init_scale) << '\n'
      << "clip_norm=" << num(clip_norm) << '\n';
  return out.str();
}

std::string to_string(RunStatus s) { return s == RunStatus::Ok ? "ok" : "diverged"; }

void sgd_step(NetworkParams& params, const GradientBundle& grad, double lr) {
  auto p = params.blocks();
  auto g = grad.blocks();
  if (p.size() != g.size()) throw DimensionError("sgd_step: gradient does not match parameters");
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (p[b].size() != g[b].size()) throw DimensionError("sgd_step: gradient block size mismatch");
    for (std::size_t i = 0; i < p[b].size(); ++i) p[b][i] -= lr * g[b][i];
  }
}

double gradient_norm(const GradientBundle& grad) {
  double sq = 0.0;
  for (auto b : grad.blocks())
    for (double v : b) sq += v * v;
  return std::sqrt(sq);
}

namespace {

struct SelectionScore {
  double loss = 0.0;
  double miou = 0.0;
};

SelectionScore score_selection(const FeatureField& output, const SelectionSet& q) {
  SelectionScore s;
  if (q.empty()) return s;
  s.loss = softmax_xent(select(output, q)).value;
  const ClassMap truth = ClassMap::from_selection(q, output.height(), output.width());
  s.miou = iou(predict_classes(output), truth, output.channels()).miou;
  return s;
}

}  // namespace

TrainResult train(const TrainConfig& config, const FeatureField& data, const SelectionSet& train_labels,
                  const SelectionSet& val_labels, std::size_t num_classes) {
  config.validate();
  if (train_labels.empty()) throw ParameterError("train: no training labels");
  train_labels.validate(data.height(), data.width(), num_classes);
  val_labels.validate(data.height(), data.width(), num_classes);

  TrainResult result;
  result.params = init_params(config.arch(data.channels(), num_classes), config.seed, config.init_scale);
  const OutputPenalty penalty = make_penalty(config.regularizer.kind);
  const double alpha = config.regularizer.kind == RegularizerKind::None ? 0.0 : config.regularizer.alpha;

  // Parameters that produced the last finite objective; restored on divergence.
  NetworkParams checkpoint = result.params;
  auto diverge = [&] {
    result.params = std::move(checkpoint);
    result.status = RunStatus::Diverged;
  };

  for (std::size_t it = 0; it < config.iterations; ++it) {
    HistoryRow row;
    row.iteration = it;
    row.learning_rate = config.learning_rate(it);

    GradientBundle g;
    try {
      if (config.augment) {
        const Augmented aug = augment(data, train_labels, config.seed, it);
        g = gradient(result.params, aug.data, aug.labels, alpha, penalty);
      } else {
        g = gradient(result.params, data, train_labels, alpha, penalty);
      }
    } catch (const NumericalError&) {
      diverge();
      break;
    }
    row.loss = g.loss;
    row.regularizer = g.regularizer;
    row.objective = g.objective;
    row.grad_norm = gradient_norm(g);
    if (!std::isfinite(g.objective) || !std::isfinite(row.grad_norm)) {
      result.history.push_back(row);
      diverge();
      break;
    }
    checkpoint = result.params;

    double lr = row.learning_rate;
    if (config.clip_norm > 0.0 && row.grad_norm > config.clip_norm) lr *= config.clip_norm / row.grad_norm;
    sgd_step(result.params, g, lr);

    if ((it + 1) % config.eval_every == 0 || it + 1 == config.iterations) {
      try {
        const SelectionScore val = score_selection(forward(result.params, data).output, val_labels);
        if (!val_labels.empty()) {
          row.val_loss = val.loss;
          row.val_miou = val.miou;
        }
      } catch (const NumericalError&) {
        result.history.push_back(row);
        diverge();
        break;
      }
    }
    result.history.push_back(row);
  }
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << "iteration,learning_rate,loss,regularizer,objective,grad_norm,val_loss,val_miou\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,", r.iteration, r.learning_rate, r.loss,
                  r.regularizer, r.objective, r.grad_norm);
    out << buf;
    if (r.val_loss) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", *r.val_loss, *r.val_miou);
      out << buf;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

Evaluation evaluate(const NetworkParams& params, const FeatureField& data, const ClassMap& truth) {
  if (truth.height() != data.height() || truth.width() != data.width()) {
    throw DimensionError("evaluate: truth and data differ in size");
  }
  Evaluation e;
  e.prediction = predict_classes(forward(params, data).output);
  e.report = iou(e.prediction, truth, params.num_classes());
  return e;
}

double selection_miou(const NetworkParams& params, const FeatureField& data, const SelectionSet& q) {
  return score_selection(forward(params, data).output, q).miou;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> median_for_alpha(const std::vector<SweepRecord>& records, double alpha,
                                       double SweepRecord::*field) {
  std::vector<double> vals;
  for (const auto& r : records)
    if (r.alpha == alpha && r.status == RunStatus::Ok) vals.push_back(r.*field);
  if (vals.empty()) return std::nullopt;
  return median(std::move(vals));
}

namespace {

SweepRecord run_one(const TrainConfig& base, double alpha, std::uint64_t seed, const Dataset& ds) {
  const auto start = std::chrono::steady_clock::now();
  TrainConfig cfg = base;
  cfg.seed = seed;
  cfg.regularizer = {RegularizerKind::QuadraticSmoother, alpha};
  SweepRecord rec;
  rec.alpha = alpha;
  rec.seed = seed;
  const TrainResult run = train(cfg, ds.data, ds.train, ds.val, ds.num_classes);
  rec.status = run.status;
  try {
    const FeatureField output = forward(run.params, ds.data).output;
    rec.train_loss = softmax_xent(select(output, ds.train)).value;
    rec.val_miou = score_selection(output, ds.val).miou;
    rec.test_miou = iou(predict_classes(output), ds.truth, ds.num_classes).miou;
  } catch (const NumericalError&) {
    rec.status = RunStatus::Diverged;
    rec.train_loss = std::numeric_limits<double>::quiet_NaN();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

SweepResult sweep(const TrainConfig& base, const std::vector<double>& alphas, const std::vector<std::uint64_t>& seeds,
                  const Dataset& ds, std::size_t jobs) {
  if (alphas.empty() || seeds.empty()) throw ParameterError("sweep: need at least one alpha and one seed");
  for (double a : alphas) {
    if (!std::isfinite(a) || a < 0.0) throw ParameterError("sweep: alpha values must be finite and >= 0");
  }
  base.validate();

  std::vector<std::pair<double, std::uint64_t>> runs;
  for (double a : alphas)
    for (std::uint64_t s : seeds) runs.emplace_back(a, s);

  SweepResult result;
  result.records.resize(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      result.records[k] = run_one(base, runs[k].first, runs[k].second, ds);
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, runs.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::stable_sort(result.records.begin(), result.records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return a.alpha != b.alpha ? a.alpha < b.alpha : a.seed < b.seed;
  });

  const std::set<double> distinct(alphas.begin(), alphas.end());
  std::optional<double> best_score;
  for (double a : distinct) {  // ascending, so strict > keeps the smaller alpha on ties
    const auto m = median_for_alpha(result.records, a, &SweepRecord::val_miou);
    if (m && (!best_score || *m > *best_score)) {
      best_score = m;
      result.best_alpha = a;
    }
  }
  return result;
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out = "alpha,seed,train_loss,val_miou,test_miou,status\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.17g,%llu,%.17g,%.17g,%.17g,%s\n", r.alpha,
                  static_cast<unsigned long long>(r.seed), r.train_loss, r.val_miou, r.test_miou,
                  to_string(r.status).c_str());
    out += buf;
  }
  return out;
}

GradcheckProblem make_gradcheck_problem(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.height = 8;
  spec.width = 8;
  spec.channels = 3;
  spec.num_classes = 2;
  spec.blob_count = 3;
  spec.noise_sigma = 0.5;
  Scene scene = gen_scene(spec);
  auto [train_labels, val_labels] = sample_labels(scene.truth, {12, 0, seed});

  ArchSpec arch;
  arch.input_channels = spec.channels;
  arch.width = 4;
  arch.steps = 2;
  arch.num_classes = spec.num_classes;
  arch.activation = Activation::Tanh;
  return {init_params(arch, seed), std::move(scene.data), std::move(train_labels)};
}

}  // namespace adjseg
