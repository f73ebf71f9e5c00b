#pragma once

#include <string>
#include <string_view>

#include "adjseg/tensor.hpp"

namespace adjseg {

enum class Activation { ReLU, Tanh };

// ReLU'(0) is taken to be 0.
double activate(double x, Activation f);
double activate_deriv(double x, Activation f);

FeatureField activate(const FeatureField& x, Activation f);
FeatureField activate_deriv(const FeatureField& x, Activation f);

// f'(x) recovered from a = f(x): 1 - a^2 for Tanh, [a > 0] for ReLU.
double activate_deriv_from_value(double a, Activation f);

std::string to_string(Activation f);
// Accepts "relu" or "tanh" (case-insensitive); throws ConfigError otherwise.
Activation parse_activation(std::string_view name);

}  // namespace adjseg
