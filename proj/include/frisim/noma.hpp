// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "frisim/errors.hpp"

// Two-user NOMA rates with successive interference cancellation, public
// (Carol) stream decoded first. Both streams use unit-power Gaussian codebooks.
namespace frisim::noma {

struct NomaParams {
  double beta = 0.9;            // share of power on the public stream
  double transmit_power = 0.2;  // W
  double noise_power = 1e-8;    // W

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("NomaParams: beta must lie in (0, 1)");
    if (!(transmit_power > 0.0)) throw DomainError("NomaParams: transmit power must be positive");
    if (!(noise_power > 0.0)) throw DomainError("NomaParams: noise power must be positive");
  }
};

// Public stream, decoded while treating the covert stream as interference.
inline double rate_carol(const NomaParams& np, double gain_c) {
  const double s = np.transmit_power * gain_c;
  return std::log2(1.0 + np.beta * s / ((1.0 - np.beta) * s + np.noise_power));
}

// Covert stream after the public stream has been cancelled.
inline double rate_bob(const NomaParams& np, double gain_b) {
  return std::log2(1.0 + (1.0 - np.beta) * np.transmit_power * gain_b / np.noise_power);
}

}  // namespace frisim::noma
