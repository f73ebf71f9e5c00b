#include "adjseg/conv.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adjseg/errors.hpp"

namespace adjseg {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

// Unfolds the zero-padded neighbourhoods of every pixel into columns. Row
// (c*kh + dy)*kw + dx holds in(c, i+dy-kh/2, j+dx-kw/2) at column i*W + j,
// which matches the (out, in, kh, kw) weight layout row for row.
//
// The unfolded matrix lives in a per-thread buffer reused across calls; the
// returned map is valid until the next im2col on the same thread.
ConstRowMap im2col(const FeatureField& x, std::size_t kh, std::size_t kw) {
  thread_local std::vector<double> scratch;
  const std::size_t h = x.height(), w = x.width();
  const auto py = static_cast<std::ptrdiff_t>(kh / 2), px = static_cast<std::ptrdiff_t>(kw / 2);
  scratch.resize(x.channels() * kh * kw * h * w);
  RowMap cols(scratch.data(), idx(x.channels() * kh * kw), idx(h * w));
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const double* src = x.plane(c).data();
    for (std::size_t dy = 0; dy < kh; ++dy) {
      for (std::size_t dx = 0; dx < kw; ++dx) {
        double* row = cols.row(idx((c * kh + dy) * kw + dx)).data();
        const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(dy) - py;
        const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(dx) - px;
        const std::size_t j0 = ox < 0 ? std::min<std::size_t>(w, static_cast<std::size_t>(-ox)) : 0;
        const std::size_t j1 = ox > 0 ? w - std::min<std::size_t>(w, static_cast<std::size_t>(ox)) : w;
        for (std::size_t i = 0; i < h; ++i) {
          double* d = row + i * w;
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + oy;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h) || j0 >= j1) {
            std::fill(d, d + w, 0.0);
            continue;
          }
          const double* s = src + static_cast<std::size_t>(si) * w;
          std::fill(d, d + j0, 0.0);
          for (std::size_t j = j0; j < j1; ++j) d[j] = s[static_cast<std::ptrdiff_t>(j) + ox];
          std::fill(d + j1, d + w, 0.0);
        }
      }
    }
  }
  return ConstRowMap(scratch.data(), cols.rows(), cols.cols());
}

ConstRowMap weight_matrix(const ConvKernelStack& k) {
  return ConstRowMap(k.weights().data(), idx(k.out_channels()),
                     idx(k.in_channels() * k.kernel_height() * k.kernel_width()));
}

ConstRowMap as_matrix(const FeatureField& f) {
  return ConstRowMap(f.values().data(), idx(f.channels()), idx(f.plane_size()));
}

RowMap as_matrix(FeatureField& f) { return RowMap(f.values().data(), idx(f.channels()), idx(f.plane_size())); }

bool is_pointwise(const ConvKernelStack& k) { return k.kernel_height() == 1 && k.kernel_width() == 1; }

// K^T as a kernel stack: swap the channel roles and rotate every tap by 180
// degrees, so that conv2d with it applies the adjoint.
ConvKernelStack transposed_flipped(const ConvKernelStack& k) {
  const std::size_t kh = k.kernel_height(), kw = k.kernel_width();
  ConvKernelStack t(k.in_channels(), k.out_channels(), kh, kw);
  for (std::size_t o = 0; o < k.out_channels(); ++o)
    for (std::size_t c = 0; c < k.in_channels(); ++c)
      for (std::size_t dy = 0; dy < kh; ++dy)
        for (std::size_t dx = 0; dx < kw; ++dx) t.at(c, o, kh - 1 - dy, kw - 1 - dx) = k.at(o, c, dy, dx);
  return t;
}

FeatureField apply_kernel(const FeatureField& input, const ConvKernelStack& k) {
  FeatureField out(k.out_channels(), input.height(), input.width());
  if (input.empty() || out.empty()) return out;
  if (is_pointwise(k)) {
    as_matrix(out).noalias() = weight_matrix(k) * as_matrix(input);
  } else {
    as_matrix(out).noalias() = weight_matrix(k) * im2col(input, k.kernel_height(), k.kernel_width());
  }
  return out;
}

}  // namespace

FeatureField conv2d(const FeatureField& input, const ConvKernelStack& k) {
  if (input.channels() != k.in_channels()) {
    throw DimensionError("conv2d: input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                         std::to_string(k.in_channels()));
  }
  return apply_kernel(input, k);
}

FeatureField conv2d_adjoint_input(const FeatureField& cotangent, const ConvKernelStack& k) {
  if (cotangent.channels() != k.out_channels()) {
    throw DimensionError("conv2d_adjoint_input: cotangent has " + std::to_string(cotangent.channels()) +
                         " channels, kernel produces " + std::to_string(k.out_channels()));
  }
  if (is_pointwise(k)) {
    FeatureField out(k.in_channels(), cotangent.height(), cotangent.width());
    if (!out.empty()) as_matrix(out).noalias() = weight_matrix(k).transpose() * as_matrix(cotangent);
    return out;
  }
  return apply_kernel(cotangent, transposed_flipped(k));
}

ConvKernelStack conv2d_adjoint_weights(const FeatureField& cotangent, const FeatureField& input,
                                       const ConvKernelStack& shape) {
  if (cotangent.channels() != shape.out_channels() || input.channels() != shape.in_channels()) {
    throw DimensionError("conv2d_adjoint_weights: channel counts do not match kernel shape");
  }
  if (cotangent.height() != input.height() || cotangent.width() != input.width()) {
    throw DimensionError("conv2d_adjoint_weights: cotangent and input differ in spatial size");
  }
  ConvKernelStack grad = shape.zeros_like();
  if (input.empty() || cotangent.empty()) return grad;
  RowMap g(grad.weights().data(), idx(shape.out_channels()),
           idx(shape.in_channels() * shape.kernel_height() * shape.kernel_width()));
  if (is_pointwise(shape)) {
    g.noalias() = as_matrix(cotangent) * as_matrix(input).transpose();
  } else {
    g.noalias() = as_matrix(cotangent) * im2col(input, shape.kernel_height(), shape.kernel_width()).transpose();
  }
  return grad;
}

}  // namespace adjseg
