#pragma once

// Observation operator and data misfit. Observations are state snapshots at
// selected time steps, covering the whole masked domain by default
// (MRI-slice semantics); point-sparse coverage is expressed with an optional
// 0/1 spatial mask per observation. The temporal Dirac weighting gives each
// observation step unit weight, with no dt factor, and the adjoint source
// injection mirrors that convention exactly.

#include <string>
#include <utility>
#include <vector>

#include "rdcal/forward.hpp"
#include "rdcal/random.hpp"

namespace rdcal {

struct ObservationSet {
  std::vector<int> steps;          // strictly increasing, within [0, Nt]
  std::vector<ScalarField> data;   // one snapshot per observation step
  std::vector<ScalarField> masks;  // empty = full coverage; else 0/1 per step
  double sigma_noise = 1.0;        // misfit weight is 1/(2 sigma^2)

  /// An empty step list is a valid (pure-regularization) setup.
  static ObservationSet create(std::vector<int> steps,
                               std::vector<ScalarField> data, double sigma,
                               std::vector<ScalarField> masks = {}) {
    require(steps.size() == data.size(),
            "observation set: one data field per step required");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      require(steps[i] >= 0, "observation set: negative step index");
      if (i > 0)
        require(steps[i] > steps[i - 1],
                "observation set: steps must be strictly increasing");
      if (i > 0) require_same_grid(data[i], data[0], "observation set");
    }
    require(sigma > 0.0, "observation set: sigma_noise must be positive");
    if (!masks.empty()) {
      require(masks.size() == steps.size(),
              "observation set: one spatial mask per step required");
      for (std::size_t i = 0; i < masks.size(); ++i) {
        require_same_grid(masks[i], data[i], "observation set");
        for (int k = 0; k < masks[i].size(); ++k)
          require(masks[i][k] == 0.0 || masks[i][k] == 1.0,
                  "observation set: spatial masks must be 0/1 valued");
      }
    }
    ObservationSet obs;
    obs.steps = std::move(steps);
    obs.data = std::move(data);
    obs.masks = std::move(masks);
    obs.sigma_noise = sigma;
    return obs;
  }

  /// Position of `step` in `steps`, or -1 when not observed.
  int find(int step) const {
    for (std::size_t i = 0; i < steps.size(); ++i)
      if (steps[i] == step) return static_cast<int>(i);
    return -1;
  }
};

/// B*B applied to a field at one time step: pointwise restriction to the
/// observation support. Identity on full-coverage observation steps, zero
/// off observation steps.
inline ScalarField obs_restrict(const ObservationSet& obs, int step,
                                const ScalarField& v) {
  const int i = obs.find(step);
  if (i < 0) return ScalarField(v.grid(), 0.0);
  if (obs.masks.empty()) return v;
  return hadamard(obs.masks[i], v);
}

/// (1 / 2 sigma^2) * sum_k inner(u_k - d_k, u_k - d_k) over observed steps.
inline double misfit_cost(const StateTrajectory& traj,
                          const ObservationSet& obs) {
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.steps.size(); ++i) {
    const int k = obs.steps[i];
    if (k > traj.time.steps) {
      throw Error("misfit_cost: observation step " + std::to_string(k) +
                  " beyond trajectory");
    }
    const ScalarField r = obs_restrict(obs, k, traj.at(k) - obs.data[i]);
    sum += inner(r, r);
  }
  return 0.5 / (obs.sigma_noise * obs.sigma_noise) * sum;
}

/// (1/sigma^2) B*B (u_step - d_step) at an observed step, zero otherwise.
inline ScalarField obs_adjoint_source(const StateTrajectory& traj,
                                      const ObservationSet& obs, int step) {
  require(step >= 0 && step <= traj.time.steps,
          "obs_adjoint_source: step out of range");
  const int i = obs.find(step);
  if (i < 0) return ScalarField(traj.at(0).grid(), 0.0);
  ScalarField r = obs_restrict(obs, step, traj.at(step) - obs.data[i]);
  r *= 1.0 / (obs.sigma_noise * obs.sigma_noise);
  return r;
}

/// Run the forward model at the given parameters and extract noisy
/// observations. `sigma` is the noise standard deviation; sigma = 0 gives
/// noiseless data and a unit misfit weight (the stored sigma_noise must be
/// positive, so 1.0 is recorded in that case).
inline ObservationSet generate_synthetic(const ParamPair& params_true,
                                         const ScalarField& u0,
                                         const TimeGrid& time,
                                         const std::vector<int>& obs_steps,
                                         double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "generate_synthetic: sigma must be >= 0");
  for (int k : obs_steps)
    require(k >= 0 && k <= time.steps,
            "generate_synthetic: observation step out of range");
  const StateTrajectory traj = solve_forward(params_true, u0, time);
  GaussianSampler sampler(seed);
  std::vector<ScalarField> data;
  data.reserve(obs_steps.size());
  for (int k : obs_steps) {
    ScalarField d = traj.at(k);
    if (sigma > 0.0) {
      for (int c = 0; c < d.size(); ++c) d[c] += sigma * sampler.next();
    }
    data.push_back(std::move(d));
  }
  return ObservationSet::create(obs_steps, std::move(data),
                                sigma > 0.0 ? sigma : 1.0);
}

}  // namespace rdcal
