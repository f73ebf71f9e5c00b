#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adjseg/labels.hpp"
#include "adjseg/network.hpp"
#include "adjseg/regularizer.hpp"
#include "adjseg/tensor.hpp"

namespace adjseg {

/// Lagrange multiplier p_j attached to the constraint that defines y_j.
///
/// Instances that own a buffer are counted per thread so tests can check how
/// many multipliers the backward sweep keeps alive. A moved-from state no
/// longer counts.
class AdjointState {
 public:
  AdjointState() = default;
  explicit AdjointState(FeatureField multiplier);
  AdjointState(const AdjointState& other);
  AdjointState(AdjointState&& other) noexcept;
  AdjointState& operator=(const AdjointState& other);
  AdjointState& operator=(AdjointState&& other) noexcept;
  ~AdjointState();

  const FeatureField& multiplier() const { return multiplier_; }

  static std::size_t live_count();
  static std::size_t peak_count();
  // Sets the peak to the current live count.
  static void reset_peak();

 private:
  void acquire();
  void release();

  FeatureField multiplier_;
  bool counted_ = false;
};

/// Gradients with respect to every parameter block plus the objective split
///   objective = loss + alpha * regularizer.
struct GradientBundle {
  ConvKernelStack lift;
  std::vector<ConvKernelStack> layers;
  ConvKernelStack project;
  double objective = 0.0;
  double loss = 0.0;
  double regularizer = 0.0;  // unscaled R(output)

  // Same order as NetworkParams::blocks().
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
};

/// Everything the backward sweep needs from the terminal condition.
struct TerminalMultiplier {
  AdjointState p_n;               // pulled back to the last state y_n
  FeatureField output_cotangent;  // d objective / d output, before the project adjoint
  double loss = 0.0;
  double regularizer = 0.0;  // unscaled R(output)
  double alpha = 0.0;
};

/// p_n = grad_{y_n} [ l(Q output, c) + alpha R(output) ] with output = project(y_n).
/// The loss part lives only on labeled pixels; an empty selection contributes
/// zero loss. Throws ParameterError for alpha < 0.
TerminalMultiplier terminal_multiplier(const ForwardTrace& trace, const NetworkParams& params, const SelectionSet& q,
                                       double alpha, const OutputPenalty& penalty);
TerminalMultiplier terminal_multiplier(const ForwardTrace& trace, const NetworkParams& params, const SelectionSet& q,
                                       const RegularizerSpec& spec);

/// One step of the multiplier recursion for the constraint y_j = y_{j-1} - h f(K_j y_{j-1}):
///   p_{j-1} = p_j - h K_j^T diag(f'(K_j y_{j-1})) p_j.
/// `j` is the 1-based state index, 2 <= j <= n.
FeatureField previous_multiplier(const ForwardTrace& trace, const NetworkParams& params, std::size_t j,
                                 const FeatureField& p_j);

/// Partial derivative of the Lagrangian with respect to y_{j-1}, assembled
/// from two given multipliers. Vanishes when p_{j-1} came from the recursion.
FeatureField lagrangian_state_gradient(const ForwardTrace& trace, const NetworkParams& params, std::size_t j,
                                       const FeatureField& p_j, const FeatureField& p_j_minus_1);

// Called once per multiplier p_j, j = n..1, during the backward sweep.
using MultiplierObserver = std::function<void(std::size_t j, const FeatureField& p_j)>;

/// Backward sweep: from p_n down to p_1, producing the kernel gradient of
/// each layer before its multiplier is overwritten. At most two multipliers
/// are alive at any time. Throws StateError if the trace is incomplete.
GradientBundle backward(const ForwardTrace& trace, const NetworkParams& params, TerminalMultiplier terminal,
                        const MultiplierObserver& observer = {});

/// forward -> terminal_multiplier -> backward.
GradientBundle gradient(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                        const OutputPenalty& penalty);
GradientBundle gradient(const NetworkParams& params, const FeatureField& data, const SelectionSet& q,
                        const RegularizerSpec& spec);

struct ObjectiveValue {
  double objective = 0.0;
  double loss = 0.0;
  double regularizer = 0.0;
};

ObjectiveValue objective(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                         const OutputPenalty& penalty);

struct GradcheckOptions {
  double fd_step = 3e-4;
  // 2: (J(w+e) - J(w-e)) / 2e. 4: the fourth-order central stencil, which
  // tolerates a larger step and so loses less to cancellation in J.
  int stencil_points = 4;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  // Penalty used on the adjoint side only; lets a test plant a faulty
  // gradient while the finite differences see the true objective.
  std::optional<OutputPenalty> adjoint_penalty;
};

struct CoordinateCheck {
  std::size_t block = 0;
  std::size_t index = 0;
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
};

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::vector<CoordinateCheck> coordinates;
};

/// Compares the adjoint gradient with central differences on a random sample
/// of parameter coordinates (all of them if there are fewer than `samples`).
/// Relative error is |adjoint - fd| / (|fd| + 1e-12).
GradcheckReport gradcheck(const NetworkParams& params, const FeatureField& data, const SelectionSet& q, double alpha,
                          const OutputPenalty& penalty, const GradcheckOptions& options = {});

}  // namespace adjseg
