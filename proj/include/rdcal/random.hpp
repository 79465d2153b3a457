#pragma once

// Seeded Gaussian sampling. mt19937_64 output is fixed by the standard and
// the Box-Muller transform below avoids the implementation-defined
// std::normal_distribution, so a seed pins the stream bit-for-bit.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "rdcal/field.hpp"

namespace rdcal {

class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  // uniform in (0, 1]; never zero, so the log above is safe
  double uniform_open() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1p-53;
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline ScalarField white_noise_field(const GridPtr& grid,
                                     GaussianSampler& sampler) {
  ScalarField out(grid);
  for (int k = 0; k < out.size(); ++k) out[k] = sampler.next();
  return out;
}

}  // namespace rdcal
