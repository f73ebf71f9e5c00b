#pragma once

#include "adjseg/tensor.hpp"

namespace adjseg {

/// Same-size 2-D convolution (cross-correlation) with zero padding:
///   out(o,i,j) = sum_{c,dy,dx} K(o,c,dy,dx) * in(c, i+dy-kh/2, j+dx-kw/2).
/// Throws DimensionError when input.channels() != k.in_channels().
FeatureField conv2d(const FeatureField& input, const ConvKernelStack& k);

/// Applies K^T: the adjoint of conv2d with respect to its input, so that
/// <conv2d(v,k), u> == <v, conv2d_adjoint_input(u,k)>.
FeatureField conv2d_adjoint_input(const FeatureField& cotangent, const ConvKernelStack& k);

/// Gradient of w -> <conv2d(input, w), cotangent>. `shape` only supplies the
/// kernel dimensions; its weights are ignored.
ConvKernelStack conv2d_adjoint_weights(const FeatureField& cotangent, const FeatureField& input,
                                       const ConvKernelStack& shape);

}  // namespace adjseg
