#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adjseg/adjoint.hpp"
#include "adjseg/data_synth.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/io.hpp"
#include "adjseg/keyvalue.hpp"
#include "adjseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace adjseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct GenDataArgs {
  std::uint64_t seed = 0;
  std::string size = "64x64";
  std::size_t bands = 16;
  std::size_t classes = 2;
  double noise = SceneSpec{}.noise_sigma;
  std::size_t blobs = SceneSpec{}.blob_count;
  std::size_t n_train = 200;
  std::size_t n_val = 50;
  fs::path out;
};

struct TrainArgs {
  fs::path config, data, out;
};

struct SweepArgs {
  fs::path config, data, out;
  std::string alphas = "0,1e-3,1e-2,1e-1,1,10";
  std::string seeds = "1,2,3";
  std::size_t jobs = 1;
};

struct EvalArgs {
  fs::path params, data, out;
  double alpha = 0.0;
};

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::size_t samples = 50;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      items.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  items.push_back(cur);
  return items;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("--size: expected HxW, got '" + text + "'");
  return {static_cast<std::size_t>(parse_integer("--size", text.substr(0, x))),
          static_cast<std::size_t>(parse_integer("--size", text.substr(x + 1)))};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

int run_gen_data(const GenDataArgs& a) {
  SceneSpec spec;
  spec.seed = a.seed;
  std::tie(spec.height, spec.width) = parse_size(a.size);
  spec.channels = a.bands;
  spec.num_classes = a.classes;
  spec.noise_sigma = a.noise;
  spec.blob_count = a.blobs;
  const Scene scene = gen_scene(spec);
  auto [train_labels, val_labels] = sample_labels(scene.truth, {a.n_train, a.n_val, a.seed});
  fs::create_directories(a.out);
  save_dataset(a.out, {scene.data, scene.truth, train_labels, val_labels, spec.num_classes}, spec);
  std::printf("wrote %zux%zux%zu scene, %zu train / %zu val labels to %s\n", spec.channels, spec.height, spec.width,
              train_labels.size(), val_labels.size(), a.out.c_str());
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  const TrainConfig cfg = TrainConfig::from_file(a.config);
  const Dataset ds = load_dataset(a.data);
  const TrainResult run = train(cfg, ds.data, ds.train, ds.val, ds.num_classes);
  fs::create_directories(a.out);
  save_params(a.out / "params", run.params);
  write_history_csv(a.out / "history.csv", run.history);
  write_text(a.out / "config.txt", cfg.to_text());
  const Evaluation ev = evaluate(run.params, ds.data, ds.truth);
  write_iou_csv(a.out / "iou.csv", cfg.regularizer.alpha, ev.report);
  std::printf("status=%s iterations=%zu miou=%.6f\n", to_string(run.status).c_str(), run.history.size(),
              ev.report.miou);
  return run.status == RunStatus::Ok ? kExitOk : kExitDiverged;
}

int run_sweep(const SweepArgs& a) {
  const TrainConfig cfg = TrainConfig::from_file(a.config);
  std::vector<double> alphas;
  for (const auto& s : split_list(a.alphas)) alphas.push_back(parse_double("--alphas", s));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(a.seeds)) seeds.push_back(static_cast<std::uint64_t>(parse_integer("--seeds", s)));
  if (alphas.empty() || seeds.empty()) throw ConfigError("sweep needs at least one alpha and one seed");
  for (double alpha : alphas) RegularizerSpec{RegularizerKind::QuadraticSmoother, alpha}.validate();
  const Dataset ds = load_dataset(a.data);

  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult res = sweep(cfg, alphas, seeds, ds, a.jobs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(a.out);
  write_text(a.out / "sweep.csv", sweep_csv(res.records));
  std::string summary;
  char line[256];
  for (double alpha : alphas) {
    const auto val = median_for_alpha(res.records, alpha, &SweepRecord::val_miou);
    const auto test = median_for_alpha(res.records, alpha, &SweepRecord::test_miou);
    if (val && test) {
      std::snprintf(line, sizeof line, "alpha=%.17g median_val_miou=%.6f median_test_miou=%.6f\n", alpha, *val, *test);
    } else {
      std::snprintf(line, sizeof line, "alpha=%.17g diverged\n", alpha);
    }
    summary += line;
  }
  if (res.best_alpha) {
    std::snprintf(line, sizeof line, "best_alpha=%.17g\n", *res.best_alpha);
  } else {
    std::snprintf(line, sizeof line, "best_alpha=none\n");
  }
  summary += line;
  write_text(a.out / "summary.txt", summary);
  std::fputs(summary.c_str(), stdout);
  std::printf("%zu runs in %.1f s\n", res.records.size(), secs);
  return res.best_alpha ? kExitOk : kExitDiverged;
}

int run_eval(const EvalArgs& a) {
  const NetworkParams params = load_params(a.params);
  const Dataset ds = load_dataset(a.data);
  const Evaluation ev = evaluate(params, ds.data, ds.truth);
  fs::create_directories(a.out);
  write_class_map(a.out / "prediction.lbl", ev.prediction);
  write_iou_csv(a.out / "iou.csv", a.alpha, ev.report);
  for (const auto& c : ev.report.per_class) {
    if (c.iou) std::printf("class %d iou=%.6f\n", c.class_id, *c.iou);
  }
  std::printf("miou=%.6f\n", ev.report.miou);
  return kExitOk;
}

int run_gradcheck(const GradcheckArgs& a) {
  RegularizerSpec{RegularizerKind::QuadraticSmoother, a.alpha}.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckProblem p = make_gradcheck_problem(a.seed);
  GradcheckOptions opts;
  opts.seed = a.seed;
  opts.samples = a.samples;
  const GradcheckReport rep =
      gradcheck(p.params, p.data, p.labels, a.alpha, make_penalty(RegularizerKind::QuadraticSmoother), opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("coordinates=%zu max_rel_error=%.3e seconds=%.2f\n", rep.coordinates.size(), rep.max_relative_error,
              secs);
  return rep.max_relative_error < 1e-5 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adjseg: adjoint-trained ResNet segmentation with output regularization"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic scene with sparse labels");
  gen_cmd->add_option("--seed", gen.seed, "Scene and label seed");
  gen_cmd->add_option("--size", gen.size, "Scene size HxW")->capture_default_str();
  gen_cmd->add_option("--bands", gen.bands, "Spectral bands")->capture_default_str();
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Gaussian noise sigma")->capture_default_str();
  gen_cmd->add_option("--blobs", gen.blobs, "Number of blobs")->capture_default_str();
  gen_cmd->add_option("--train", gen.n_train, "Training labels")->capture_default_str();
  gen_cmd->add_option("--val", gen.n_val, "Validation labels")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one network");
  train_cmd->add_option("--config", tr.config, "key=value config file")->required();
  train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Cross-validate alpha over seeds");
  sweep_cmd->add_option("--config", sw.config, "key=value config file")->required();
  sweep_cmd->add_option("--alphas", sw.alphas, "Comma-separated alphas")->capture_default_str();
  sweep_cmd->add_option("--seeds", sw.seeds, "Comma-separated seeds")->capture_default_str();
  sweep_cmd->add_option("--data", sw.data, "Dataset directory")->required();
  sweep_cmd->add_option("--out", sw.out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", sw.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Predict a dense class map and score it");
  eval_cmd->add_option("--params", ev.params, "Parameter directory")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->add_option("--alpha", ev.alpha, "Alpha recorded in iou.csv")->capture_default_str();

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare adjoint gradient with central differences");
  gc_cmd->add_option("--seed", gc.seed, "Problem and coordinate seed")->required();
  gc_cmd->add_option("--alpha", gc.alpha, "Smoother weight")->capture_default_str();
  gc_cmd->add_option("--samples", gc.samples, "Coordinates to check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(tr);
    if (*sweep_cmd) return run_sweep(sw);
    if (*eval_cmd) return run_eval(ev);
    if (*gc_cmd) return run_gradcheck(gc);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
