#include "adjseg/regularizer.hpp"

#include <cmath>

#include "adjseg/errors.hpp"

namespace adjseg {

FeatureField forward_diff_rows(const FeatureField& y) {
  FeatureField d(y.channels(), y.height(), y.width());
  for (std::size_t c = 0; c < y.channels(); ++c)
    for (std::size_t i = 0; i + 1 < y.height(); ++i)
      for (std::size_t j = 0; j < y.width(); ++j) d.at(c, i, j) = y.at(c, i + 1, j) - y.at(c, i, j);
  return d;
}

FeatureField forward_diff_cols(const FeatureField& y) {
  FeatureField d(y.channels(), y.height(), y.width());
  for (std::size_t c = 0; c < y.channels(); ++c)
    for (std::size_t i = 0; i < y.height(); ++i)
      for (std::size_t j = 0; j + 1 < y.width(); ++j) d.at(c, i, j) = y.at(c, i, j + 1) - y.at(c, i, j);
  return d;
}

// (D^T g)(i) = g(i-1) - g(i), where g(-1) and the dropped last entry count as 0.
FeatureField forward_diff_rows_adjoint(const FeatureField& g) {
  FeatureField out(g.channels(), g.height(), g.width());
  const std::size_t h = g.height();
  for (std::size_t c = 0; c < g.channels(); ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < g.width(); ++j) {
        const double up = i > 0 ? g.at(c, i - 1, j) : 0.0;
        const double here = i + 1 < h ? g.at(c, i, j) : 0.0;
        out.at(c, i, j) = up - here;
      }
  return out;
}

FeatureField forward_diff_cols_adjoint(const FeatureField& g) {
  FeatureField out(g.channels(), g.height(), g.width());
  const std::size_t w = g.width();
  for (std::size_t c = 0; c < g.channels(); ++c)
    for (std::size_t i = 0; i < g.height(); ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double left = j > 0 ? g.at(c, i, j - 1) : 0.0;
        const double here = j + 1 < w ? g.at(c, i, j) : 0.0;
        out.at(c, i, j) = left - here;
      }
  return out;
}

double smoother_value(const FeatureField& y) {
  double sum = 0.0;
  for (std::size_t c = 0; c < y.channels(); ++c) {
    for (std::size_t i = 0; i < y.height(); ++i) {
      for (std::size_t j = 0; j < y.width(); ++j) {
        const double v = y.at(c, i, j);
        if (i + 1 < y.height()) {
          const double d = y.at(c, i + 1, j) - v;
          sum += d * d;
        }
        if (j + 1 < y.width()) {
          const double d = y.at(c, i, j + 1) - v;
          sum += d * d;
        }
      }
    }
  }
  return 0.5 * sum;
}

FeatureField smoother_grad(const FeatureField& y) {
  FeatureField g(y.channels(), y.height(), y.width());
  const std::size_t h = y.height();
  const std::size_t w = y.width();
  for (std::size_t c = 0; c < y.channels(); ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double v = y.at(c, i, j);
        double acc = 0.0;
        if (i > 0) acc += v - y.at(c, i - 1, j);
        if (i + 1 < h) acc += v - y.at(c, i + 1, j);
        if (j > 0) acc += v - y.at(c, i, j - 1);
        if (j + 1 < w) acc += v - y.at(c, i, j + 1);
        g.at(c, i, j) = acc;
      }
    }
  }
  return g;
}

void RegularizerSpec::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw ParameterError("regularization strength alpha must be finite and >= 0");
  }
}

RegularizerResult apply(const RegularizerSpec& spec, const FeatureField& y) {
  spec.validate();
  RegularizerResult r;
  if (spec.kind == RegularizerKind::None) {
    r.grad = FeatureField(y.channels(), y.height(), y.width());
    return r;
  }
  r.value = spec.alpha * smoother_value(y);
  r.grad = smoother_grad(y);
  r.grad *= spec.alpha;
  return r;
}

OutputPenalty make_penalty(RegularizerKind kind) {
  if (kind == RegularizerKind::None) {
    return [](const FeatureField& y) {
      return PenaltyEval{0.0, FeatureField(y.channels(), y.height(), y.width())};
    };
  }
  return [](const FeatureField& y) { return PenaltyEval{smoother_value(y), smoother_grad(y)}; };
}

std::string to_string(RegularizerKind kind) {
  return kind == RegularizerKind::None ? "none" : "quadratic_smoother";
}

RegularizerKind parse_regularizer_kind(std::string_view name) {
  if (name == "none") return RegularizerKind::None;
  if (name == "quadratic_smoother" || name == "smoother") return RegularizerKind::QuadraticSmoother;
  throw ConfigError("unknown regularizer '" + std::string(name) + "'");
}

}  // namespace adjseg
