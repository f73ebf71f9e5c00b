#include "adjseg/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "adjseg/activation.hpp"
#include "adjseg/conv.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/loss_metrics.hpp"

namespace adjseg {

namespace {

thread_local std::size_t g_live_multipliers = 0;
thread_local std::size_t g_peak_multipliers = 0;

void require_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) throw ParameterError("alpha must be finite and >= 0");
}

void require_complete(const ForwardTrace& trace, const NetworkParams& params) {
  if (trace.states.size() != params.state_count() || trace.activations.size() != params.layers.size() ||
      trace.output.empty() || trace.input.empty()) {
    throw StateError("backward: forward trace is incomplete (" + std::to_string(trace.states.size()) + " of " +
                     std::to_string(params.state_count()) + " states)");
  }
}

// diag(f'(K_j y_{j-1})) p_j
FeatureField gated(const ForwardTrace& trace, const NetworkParams& params, std::size_t j, const FeatureField& p_j) {
  FeatureField s = trace.activations[j - 2];
  auto sv = s.values();
  auto pv = p_j.values();
  for (std::size_t k = 0; k < sv.size(); ++k) sv[k] = activate_deriv_from_value(sv[k], params.activation) * pv[k];
  return s;
}

// p_j - h K_j^T s with s = diag(f') p_j already formed.
FeatureField step_back(const NetworkParams& params, std::size_t j, const FeatureField& p_j, const FeatureField& s) {
  const FeatureField back = conv2d_adjoint_input(s, params.layers[j - 2]);
  FeatureField p = p_j;
  auto pv = p.values();
  auto bv = back.values();
  const double h = params.step_size;
  for (std::size_t k = 0; k < pv.size(); ++k) pv[k] = pv[k] - h * bv[k];
  return p;
}

struct LossPart {
  double value = 0.0;
  FeatureField cotangent;
};

// Loss and its gradient scattered back onto the output field through Q.
LossPart labeled_loss(const FeatureField& output, const SelectionSet& q) {
  LossPart part{0.0, FeatureField(output.channels(), output.height(), output.width())};
  if (q.empty()) return part;
  q.validate(output.height(), output.width(), output.channels());
  const XentResult xent = softmax_xent(select(output, q));
  part.value = xent.value;
  for (std::size_t e = 0; e < q.size(); ++e) {
    const auto& px = q.entries()[e];
    for (std::size_t c = 0; c < output.channels(); ++c) part.cotangent.at(c, px.row, px.col) = xent.grads[e][c];
  }
  return part;
}

}  // namespace

AdjointState::AdjointState(FeatureField multiplier) : multiplier_(std::move(multiplier)) { acquire(); }

AdjointState::AdjointState(const AdjointState& other) : multiplier_(other.multiplier_) {
  if (other.counted_) acquire();
}

AdjointState::AdjointState(AdjointState&& other) noexcept
    : multiplier_(std::move(other.multiplier_)), counted_(other.counted_) {
  other.counted_ = false;
}

AdjointState& AdjointState::operator=(const AdjointState& other) {
  if (this != &other) {
    release();
    multiplier_ = other.multiplier_;
    if (other.counted_) acquire();
  }
  return *this;
}

AdjointState& AdjointState::operator=(AdjointState&& other) noexcept {
  if (this != &other) {
    release();
    multiplier_ = std::move(other.multiplier_);
    counted_ = other.counted_;
    other.counted_ = false;
  }
  return *this;
}

AdjointState::~AdjointState() { release(); }

void AdjointState::acquire() {
  counted_ = true;
  g_peak_multipliers = std::max(g_peak_multipliers, ++g_live_multipliers);
}

void AdjointState::release() {
  if (counted_) --g_live_multipliers;
  counted_ = false;
}

std::size_t AdjointState::live_count() { return g_live_multipliers; }
std::size_t AdjointState::peak_count() { return g_peak_multipliers; }
void AdjointState::reset_peak() { g_peak_multipliers = g_live_multipliers; }

std::vector<std::span<double>> GradientBundle::blocks() {
  std::vector<std::span<double>> out{lift.weights()};
  for (auto& k : layers) out.push_back(k.weights());
  out.push_back(project.weights());
  return out;
}

std::vector<std::span<const double>> GradientBundle::blocks() const {
  std::vector<std::span<const double>> out{lift.weights()};
  for (const auto& k : layers) out.push_back(k.weights());
  out.push_back(project.weights());
  return out;
}

TerminalMultiplier terminal_multiplier(const ForwardTrace& trace, const NetworkParams& params, const SelectionSet& q,
                                       double alpha, const OutputPenalty& penalty) {
  require_alpha(alpha);
  if (trace.output.empty() || trace.states.empty()) throw StateError("terminal_multiplier: empty forward trace");

  LossPart loss = labeled_loss(trace.output, q);
  // The penalty acts on the projected output, so its gradient joins the loss
  // cotangent before the project adjoint.
  PenaltyEval reg = penalty(trace.output);
  if (!reg.grad.same_shape(trace.output)) throw DimensionError("terminal_multiplier: penalty gradient has wrong shape");
  auto cv = loss.cotangent.values();
  auto rv = reg.grad.values();
  for (std::size_t k = 0; k < cv.size(); ++k) cv[k] += alpha * rv[k];

  TerminalMultiplier t;
  t.p_n = AdjointState(conv2d_adjoint_input(loss.cotangent, params.project));
  t.output_cotangent = std::move(loss.cotangent);
  t.loss = loss.value;
  t.regularizer = reg.value;
  t.alpha = alpha;
  return t;
}

TerminalMultiplier terminal_multiplier(const ForwardTrace& trace, const NetworkParams& params, const SelectionSet& q,
                                       const RegularizerSpec& spec) {
  spec.validate();
  return terminal_multiplier(trace, params, q, spec.alpha, make_penalty(spec.kind));
}

FeatureField previous_multiplier(const ForwardTrace& trace, const NetworkParams& params, std::size_t j,
                                 const FeatureField& p_j) {
  if (j < 2 || j > params.state_count() || trace.activations.size() + 1 < j) {
    throw StateError("previous_multiplier: state index out of range");
  }
  return step_back(params, j, p_j, gated(trace, params, j, p_j));
}

FeatureField lagrangian_state_gradient(const ForwardTrace& trace, const NetworkParams& params, std::size_t j,
                                       const FeatureField& p_j, const FeatureField& p_j_minus_1) {
  return previous_multiplier(trace, params, j, p_j) - p_j_minus_1;
}

GradientBundle backward(const ForwardTrace& trace, const NetworkParams& params, TerminalMultiplier terminal,
                        const MultiplierObserver& observer) {
  require_complete(trace, params);
  const std::size_t n = params.state_count();
  const double h = params.step_size;

  GradientBundle g;
  g.loss = terminal.loss;
  g.regularizer = terminal.regularizer;
  g.objective = terminal.loss + terminal.alpha * terminal.regularizer;
  g.project = conv2d_adjoint_weights(terminal.output_cotangent, trace.states[n - 1], params.project);
  g.layers.resize(params.layers.size());

  AdjointState p = std::move(terminal.p_n);
  for (std::size_t j = n; j >= 2; --j) {
    if (observer) observer(j, p.multiplier());
    const FeatureField s = gated(trace, params, j, p.multiplier());
    ConvKernelStack& gk = g.layers[j - 2];
    gk = conv2d_adjoint_weights(s, trace.states[j - 2], params.layers[j - 2]);
    for (double& w : gk.weights()) w *= -h;
    p = AdjointState(step_back(params, j, p.multiplier(), s));
  }
  if (observer) observer(1, p.multiplier());
  g.lift = conv2d_adjoint_weights(p.multiplier(), trace.input, params.lift);
  return g;
}

GradientBundle gradient(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                        const OutputPenalty& penalty) {
  const ForwardTrace trace = forward(params, data);
  return backward(trace, params, terminal_multiplier(trace, params, q, alpha, penalty));
}

GradientBundle gradient(const NetworkParams& params, const FeatureField& data, const SelectionSet& q,
                        const RegularizerSpec& spec) {
  spec.validate();
  return gradient(params, data, q, spec.alpha, make_penalty(spec.kind));
}

ObjectiveValue objective(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                         const OutputPenalty& penalty) {
  require_alpha(alpha);
  const ForwardTrace trace = forward(params, data);
  ObjectiveValue v;
  v.loss = labeled_loss(trace.output, q).value;
  v.regularizer = penalty(trace.output).value;
  v.objective = v.loss + alpha * v.regularizer;
  return v;
}

GradcheckReport gradcheck(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                          const OutputPenalty& penalty, const GradcheckOptions& options) {
  if (options.stencil_points != 2 && options.stencil_points != 4) {
    throw ParameterError("gradcheck: stencil_points must be 2 or 4");
  }
  if (!(options.fd_step > 0.0)) throw ParameterError("gradcheck: fd_step must be > 0");
  const GradientBundle analytic =
      gradient(params, data, q, alpha, options.adjoint_penalty ? *options.adjoint_penalty : penalty);
  const auto grad_blocks = analytic.blocks();

  // Flat (block, index) enumeration of every coordinate.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t b = 0; b < grad_blocks.size(); ++b)
    for (std::size_t i = 0; i < grad_blocks[b].size(); ++i) coords.emplace_back(b, i);
  if (options.samples < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.samples);
    std::sort(coords.begin(), coords.end());
  }

  NetworkParams probe = params;
  auto probe_blocks = probe.blocks();
  GradcheckReport report;
  for (const auto& [b, i] : coords) {
    double& w = probe_blocks[b][i];
    const double saved = w;
    auto at = [&](double offset) {
      w = saved + offset;
      return objective(probe, data, q, alpha, penalty).objective;
    };
    const double e = options.fd_step;
    double fd = 0.0;
    if (options.stencil_points == 4) {
      fd = (8.0 * (at(e) - at(-e)) - (at(2.0 * e) - at(-2.0 * e))) / (12.0 * e);
    } else {
      fd = (at(e) - at(-e)) / (2.0 * e);
    }
    w = saved;

    CoordinateCheck check;
    check.block = b;
    check.index = i;
    check.adjoint = grad_blocks[b][i];
    check.finite_difference = fd;
    check.relative_error =
        std::abs(check.adjoint - check.finite_difference) / (std::abs(check.finite_difference) + 1e-12);
    report.max_relative_error = std::max(report.max_relative_error, check.relative_error);
    report.coordinates.push_back(check);
  }
  return report;
}

}  // namespace adjseg
