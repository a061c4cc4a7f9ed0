#pragma once

#include <string>
#include <vector>

#include "ldpx/model_io.hpp"

namespace ldpx::presets {

/// dX = dW, dY = dW~: mu(theta) = theta^2 / 2.
ModelConfig gaussian_baseline(std::size_t grid_n = 256);
/// V = 1, V_0 = 0, b = cos(2 pi x), sigma = 1.
ModelConfig mathieu(std::size_t grid_n = 256);
/// Gradient drift V_0 = -sin(2 pi x) with b = cos(2 pi x); stationary density prop. to exp(cos(2 pi x) / pi).
ModelConfig gradient_drift(std::size_t grid_n = 256);
/// Two states, all transitions 1/2, increment +1 into state 0 and -1 into state 1 (fair +-1 walk).
ModelConfig two_state_pm1();
/// Deterministic 2-cycle with unit increments: period 2, so the top of the spectrum is not simple.
ModelConfig checkerboard_chain();

std::vector<std::string> names();
/// Throws ConfigError for an unknown name.
ModelConfig by_name(const std::string& name, std::size_t grid_n = 256);

}  // namespace ldpx::presets
