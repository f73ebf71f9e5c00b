#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "adjseg/tensor.hpp"

namespace adjseg {

// Forward differences along rows (axis 1) and columns (axis 2). The last
// difference along each axis is dropped, i.e. stored as 0, so the result
// keeps the input's shape.
FeatureField forward_diff_rows(const FeatureField& y);
FeatureField forward_diff_cols(const FeatureField& y);
// Transposes of the two operators above.
FeatureField forward_diff_rows_adjoint(const FeatureField& g);
FeatureField forward_diff_cols_adjoint(const FeatureField& g);

/// Quadratic smoother R(y) = 1/2 |D_rows y|^2 + 1/2 |D_cols y|^2, summed over
/// channels. Zero for fields smaller than 2 pixels along both axes.
double smoother_value(const FeatureField& y);

/// Gradient of smoother_value, D_rows^T D_rows y + D_cols^T D_cols y, which is
/// the 5-point Laplacian with Neumann boundaries. Evaluated as a stencil.
FeatureField smoother_grad(const FeatureField& y);

enum class RegularizerKind { None, QuadraticSmoother };

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::None;
  double alpha = 0.0;

  // Throws ParameterError for negative or non-finite alpha.
  void validate() const;
};

struct RegularizerResult {
  double value = 0.0;  // alpha * R(y)
  FeatureField grad;   // alpha * grad R(y)
};

// (alpha R(y), alpha grad R(y)); kind None yields (0, zero field).
RegularizerResult apply(const RegularizerSpec& spec, const FeatureField& y);

/// Unscaled penalty R together with its gradient. The adjoint sweep takes one
/// of these so alternative penalties can be swapped in.
struct PenaltyEval {
  double value = 0.0;
  FeatureField grad;
};
using OutputPenalty = std::function<PenaltyEval(const FeatureField&)>;

OutputPenalty make_penalty(RegularizerKind kind);

std::string to_string(RegularizerKind kind);
RegularizerKind parse_regularizer_kind(std::string_view name);

}  // namespace adjseg
