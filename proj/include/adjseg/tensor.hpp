#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adjseg {

/// A C x H x W field of doubles stored row-major as (channel, row, column).
///
/// Holds network states, Lagrange multipliers, input data and network
/// outputs. Value semantics; copying copies the buffer.
class FeatureField {
 public:
  FeatureField() = default;
  FeatureField(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  FeatureField(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(std::size_t c, std::size_t i, std::size_t j) { return values_[(c * height_ + i) * width_ + j]; }
  double at(std::size_t c, std::size_t i, std::size_t j) const { return values_[(c * height_ + i) * width_ + j]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> plane(std::size_t c) { return {values_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> plane(std::size_t c) const { return {values_.data() + c * plane_size(), plane_size()}; }

  bool same_shape(const FeatureField& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const;
  void fill(double v);

  FeatureField& operator+=(const FeatureField& other);
  FeatureField& operator-=(const FeatureField& other);
  FeatureField& operator*=(double s);

  // Bitwise equality of shape and contents.
  friend bool operator==(const FeatureField&, const FeatureField&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

FeatureField operator+(FeatureField a, const FeatureField& b);
FeatureField operator-(FeatureField a, const FeatureField& b);
FeatureField operator*(double s, FeatureField a);

// Elementwise product; shapes must agree.
FeatureField hadamard(const FeatureField& a, const FeatureField& b);

double inner(std::span<const double> a, std::span<const double> b);
double inner(const FeatureField& a, const FeatureField& b);
double max_abs(std::span<const double> a);

/// Weights of a bank of 2-D kernels, laid out (out, in, kh, kw).
///
/// Acts as the block matrix whose block rows are output channels and block
/// columns are input channels. Kernel extents are odd so that zero padding
/// keeps the spatial size fixed.
class ConvKernelStack {
 public:
  ConvKernelStack() = default;
  ConvKernelStack(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_height,
                  std::size_t kernel_width, double fill = 0.0);
  ConvKernelStack(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_height,
                  std::size_t kernel_width, std::vector<double> weights);

  std::size_t out_channels() const { return out_; }
  std::size_t in_channels() const { return in_; }
  std::size_t kernel_height() const { return kh_; }
  std::size_t kernel_width() const { return kw_; }
  std::size_t size() const { return weights_.size(); }

  double& at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) {
    return weights_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }
  double at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return weights_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }

  bool same_shape(const ConvKernelStack& other) const {
    return out_ == other.out_ && in_ == other.in_ && kh_ == other.kh_ && kw_ == other.kw_;
  }
  // Zero-filled stack with this stack's shape.
  ConvKernelStack zeros_like() const { return ConvKernelStack(out_, in_, kh_, kw_); }

  friend bool operator==(const ConvKernelStack&, const ConvKernelStack&) = default;

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::size_t kh_ = 0;
  std::size_t kw_ = 0;
  std::vector<double> weights_;
};

}  // namespace adjseg
