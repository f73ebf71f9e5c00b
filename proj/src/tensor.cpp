#include "adjseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adjseg/errors.hpp"

namespace adjseg {

namespace {

void require_same_shape(const FeatureField& a, const FeatureField& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": field shapes differ");
  }
}

}  // namespace

FeatureField::FeatureField(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : channels_(channels), height_(height), width_(width), values_(channels * height * width, fill) {}

FeatureField::FeatureField(std::size_t channels, std::size_t height, std::size_t width,
                           std::vector<double> values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != channels * height * width) {
    throw DimensionError("FeatureField: value count " + std::to_string(values_.size()) +
                         " does not match " + std::to_string(channels) + "x" + std::to_string(height) +
                         "x" + std::to_string(width));
  }
}

bool FeatureField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void FeatureField::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

FeatureField& FeatureField::operator+=(const FeatureField& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

FeatureField& FeatureField::operator-=(const FeatureField& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

FeatureField& FeatureField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

FeatureField operator+(FeatureField a, const FeatureField& b) { return a += b; }
FeatureField operator-(FeatureField a, const FeatureField& b) { return a -= b; }
FeatureField operator*(double s, FeatureField a) { return a *= s; }

FeatureField hadamard(const FeatureField& a, const FeatureField& b) {
  require_same_shape(a, b, "hadamard");
  FeatureField out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] *= bv[k];
  return out;
}

double inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("inner: length mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double inner(const FeatureField& a, const FeatureField& b) {
  require_same_shape(a, b, "inner");
  return inner(a.values(), b.values());
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

ConvKernelStack::ConvKernelStack(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_height,
                                 std::size_t kernel_width, double fill)
    : out_(out_channels),
      in_(in_channels),
      kh_(kernel_height),
      kw_(kernel_width),
      weights_(out_channels * in_channels * kernel_height * kernel_width, fill) {
  if (kh_ % 2 == 0 || kw_ % 2 == 0) {
    throw DimensionError("ConvKernelStack: kernel extents must be odd");
  }
}

ConvKernelStack::ConvKernelStack(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_height,
                                 std::size_t kernel_width, std::vector<double> weights)
    : ConvKernelStack(out_channels, in_channels, kernel_height, kernel_width) {
  if (weights.size() != weights_.size()) {
    throw DimensionError("ConvKernelStack: weight count does not match shape");
  }
  weights_ = std::move(weights);
}

}  // namespace adjseg
