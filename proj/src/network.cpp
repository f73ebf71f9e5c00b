#include "adjseg/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "adjseg/conv.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/io.hpp"
#include "adjseg/keyvalue.hpp"

namespace adjseg {

void NetworkParams::validate() const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
    throw ParameterError("NetworkParams: step size must be finite and non-negative");
  }
  if (lift.kernel_height() != 1 || lift.kernel_width() != 1 || project.kernel_height() != 1 ||
      project.kernel_width() != 1) {
    throw DimensionError("NetworkParams: lift and project must be 1x1 kernels");
  }
  if (width() == 0 || input_channels() == 0) throw DimensionError("NetworkParams: empty lift kernel");
  if (project.in_channels() != width()) throw DimensionError("NetworkParams: project input != width");
  if (num_classes() < 2) throw DimensionError("NetworkParams: need at least two classes");
  for (std::size_t j = 0; j < layers.size(); ++j) {
    if (layers[j].in_channels() != width() || layers[j].out_channels() != width()) {
      throw DimensionError("NetworkParams: interior layer " + std::to_string(j + 2) + " does not preserve width");
    }
  }
}

std::vector<std::span<double>> NetworkParams::blocks() {
  std::vector<std::span<double>> out{lift.weights()};
  for (auto& k : layers) out.push_back(k.weights());
  out.push_back(project.weights());
  return out;
}

std::vector<std::span<const double>> NetworkParams::blocks() const {
  std::vector<std::span<const double>> out{lift.weights()};
  for (const auto& k : layers) out.push_back(k.weights());
  out.push_back(project.weights());
  return out;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

ForwardTrace forward(const NetworkParams& params, const FeatureField& data) {
  params.validate();
  if (data.channels() != params.input_channels()) {
    throw DimensionError("forward: data has " + std::to_string(data.channels()) + " channels, lift expects " +
                         std::to_string(params.input_channels()));
  }
  ForwardTrace trace;
  trace.input = data;
  trace.states.reserve(params.state_count());
  trace.activations.reserve(params.layers.size());

  trace.states.push_back(conv2d(data, params.lift));
  if (!trace.states.back().all_finite()) throw NumericalError("forward: non-finite state after lift (layer 1)");

  const double h = params.step_size;
  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    const FeatureField& prev = trace.states.back();
    FeatureField a = conv2d(prev, params.layers[j]);
    for (double& v : a.values()) v = activate(v, params.activation);
    FeatureField next = prev;
    auto nv = next.values();
    auto av = a.values();
    for (std::size_t k = 0; k < nv.size(); ++k) nv[k] = nv[k] - h * av[k];
    if (!next.all_finite()) {
      throw NumericalError("forward: non-finite state at layer " + std::to_string(j + 2));
    }
    trace.activations.push_back(std::move(a));
    trace.states.push_back(std::move(next));
  }

  trace.output = conv2d(trace.states.back(), params.project);
  if (!trace.output.all_finite()) throw NumericalError("forward: non-finite network output");
  return trace;
}

std::vector<LabeledLogits> select(const FeatureField& output, const SelectionSet& q) {
  std::vector<LabeledLogits> out;
  out.reserve(q.size());
  for (const auto& e : q.entries()) {
    if (e.row >= output.height() || e.col >= output.width()) {
      throw IndexError("select: pixel (" + std::to_string(e.row) + "," + std::to_string(e.col) + ") outside " +
                       std::to_string(output.height()) + "x" + std::to_string(output.width()));
    }
    LabeledLogits item;
    item.class_id = e.class_id;
    item.logits.reserve(output.channels());
    for (std::size_t c = 0; c < output.channels(); ++c) item.logits.push_back(output.at(c, e.row, e.col));
    out.push_back(std::move(item));
  }
  return out;
}

ClassMap predict_classes(const FeatureField& output) {
  ClassMap map(output.height(), output.width(), 0);
  for (std::size_t i = 0; i < output.height(); ++i) {
    for (std::size_t j = 0; j < output.width(); ++j) {
      int best = 0;
      for (std::size_t c = 1; c < output.channels(); ++c) {
        if (output.at(c, i, j) > output.at(static_cast<std::size_t>(best), i, j)) best = static_cast<int>(c);
      }
      map.at(i, j) = best;
    }
  }
  return map;
}

namespace {

std::string layer_file(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%02zu.ftf", j);
  return buf;
}

std::size_t require_positive(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("params manifest: missing key '" + key + "'");
  const long long v = parse_integer(key, it->second);
  if (v <= 0) throw ConfigError("params manifest: '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

void save_params(const std::filesystem::path& dir, const NetworkParams& params) {
  params.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream m(dir / "manifest.txt");
    if (!m) throw ConfigError("cannot write manifest in '" + dir.string() + "'");
    char h[40];
    std::snprintf(h, sizeof h, "%.17g", params.step_size);
    m << "width=" << params.width() << '\n'
      << "num_classes=" << params.num_classes() << '\n'
      << "h=" << h << '\n'
      << "activation=" << to_string(params.activation) << '\n'
      << "n=" << params.state_count() << '\n'
      << "input_channels=" << params.input_channels() << '\n';
  }
  write_kernel(dir / "lift.ftf", params.lift);
  write_kernel(dir / "project.ftf", params.project);
  for (std::size_t j = 0; j < params.layers.size(); ++j) write_kernel(dir / layer_file(j + 2), params.layers[j]);
}

NetworkParams load_params(const std::filesystem::path& dir) {
  const auto kv = read_key_values(dir / "manifest.txt");
  for (const auto& [key, value] : kv) {
    if (key != "width" && key != "num_classes" && key != "h" && key != "activation" && key != "n" &&
        key != "input_channels") {
      throw ConfigError("params manifest: unknown key '" + key + "'");
    }
  }
  const std::size_t width = require_positive(kv, "width");
  const std::size_t classes = require_positive(kv, "num_classes");
  const std::size_t n = require_positive(kv, "n");
  auto act = kv.find("activation");
  auto h = kv.find("h");
  if (act == kv.end() || h == kv.end()) throw ConfigError("params manifest: missing 'activation' or 'h'");

  NetworkParams params;
  params.activation = parse_activation(act->second);
  params.step_size = parse_double("h", h->second);
  params.lift = read_kernel(dir / "lift.ftf", width);
  params.project = read_kernel(dir / "project.ftf", classes);
  for (std::size_t j = 2; j <= n; ++j) params.layers.push_back(read_kernel(dir / layer_file(j), width));
  if (auto ic = kv.find("input_channels"); ic != kv.end() && require_positive(kv, "input_channels") != params.input_channels()) {
    throw ConfigError("params manifest: input_channels disagrees with lift.ftf");
  }
  params.validate();
  return params;
}

}  // namespace adjseg
