#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace rdcal;
using namespace testsupport;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("perfect fit gives zero misfit", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ObservationSet obs = ObservationSet::create(
      {3, 7}, {traj.at(3), traj.at(7)}, 0.5);
  REQUIRE(misfit_cost(traj, obs) == 0.0);
}

TEST_CASE("unit residual on a full 4x4 grid gives cost 8", "[observation]") {
  auto grid = build_grid(4, 4, 1.0, 1.0, full_mask(4, 4));
  ParamPair params{ScalarField(grid, 0.0), ScalarField(grid, 0.0)};
  ScalarField u0(grid, 0.5);
  StateTrajectory traj = solve_forward(params, u0, TimeGrid(1.0, 2));
  ScalarField d = traj.at(2);
  for (int k = 0; k < d.size(); ++k) d[k] -= 1.0;  // u - d = 1 everywhere
  ObservationSet obs = ObservationSet::create({2}, {d}, 1.0);
  REQUIRE_THAT(misfit_cost(traj, obs), WithinRel(8.0, 1e-14));
}

TEST_CASE("misfit matches the direct summation oracle", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  GaussianSampler sampler(19);
  const double sigma = 0.3;
  std::vector<int> steps{2, 5, 9};
  std::vector<ScalarField> data;
  for (int s : steps) {
    ScalarField d = traj.at(s);
    for (int k = 0; k < d.size(); ++k) d[k] += 0.1 * sampler.next();
    data.push_back(d);
  }
  ObservationSet obs = ObservationSet::create(steps, data, sigma);
  double expected = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    for (int k = 0; k < fx.grid->num_active(); ++k) {
      const double r = traj.at(steps[i])[k] - data[i][k];
      expected += r * r * fx.grid->cell_area();
    }
  }
  expected *= 0.5 / (sigma * sigma);
  REQUIRE_THAT(misfit_cost(traj, obs), WithinRel(expected, 1e-13));
}

TEST_CASE("misfit scales exactly as 1/sigma^2", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ScalarField d = traj.at(5);
  for (int k = 0; k < d.size(); ++k) d[k] += 0.01 * (k % 3 - 1);
  ObservationSet obs1 = ObservationSet::create({5}, {d}, 0.05);
  ObservationSet obs2 = ObservationSet::create({5}, {d}, 0.1);
  REQUIRE(misfit_cost(traj, obs1) == 4.0 * misfit_cost(traj, obs2));
}

TEST_CASE("misfit rejects out-of-range steps", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ObservationSet obs =
      ObservationSet::create({fx.time.steps + 1}, {fx.u0}, 1.0);
  REQUIRE_THROWS_WITH(misfit_cost(traj, obs),
                      Catch::Matchers::ContainsSubstring("beyond"));
}

TEST_CASE("adjoint source is supported on observation steps only",
          "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ScalarField d = traj.at(4);
  ObservationSet obs = ObservationSet::create({4}, {d}, 2.0);

  // non-observation step: zero field
  ScalarField off = obs_adjoint_source(traj, obs, 3);
  REQUIRE(max_abs(off) == 0.0);
  // u = d at the observation step: zero field
  ScalarField on = obs_adjoint_source(traj, obs, 4);
  REQUIRE(max_abs(on) == 0.0);
}

TEST_CASE("adjoint source scaling", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ScalarField d = traj.at(6);
  GaussianSampler sampler(77);
  ScalarField r = white_noise_field(fx.grid, sampler);
  d -= r;  // u - d approximately r
  ObservationSet obs = ObservationSet::create({6}, {d}, 2.0);
  ScalarField src = obs_adjoint_source(traj, obs, 6);
  for (int k = 0; k < src.size(); ++k) {
    const double residual = traj.at(6)[k] - d[k];
    REQUIRE(src[k] == residual / 4.0);  // sigma = 2: exact quarter weight
  }
}

TEST_CASE("B*B acts as the identity on observed steps", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ObservationSet obs = ObservationSet::create(
      {5}, {ScalarField(fx.grid, 0.0)}, 1.0);  // sigma = 1, d = 0
  ScalarField once = obs_adjoint_source(traj, obs, 5);
  // feed the restriction back through the operator a second time
  StateTrajectory echo = traj;
  echo.states[5] = once;
  ScalarField twice = obs_adjoint_source(echo, obs, 5);
  for (int k = 0; k < once.size(); ++k) REQUIRE(twice[k] == once[k]);
}

TEST_CASE("synthetic data is noiseless when sigma is zero", "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {2, 8}, 0.0, 123);
  REQUIRE(obs.sigma_noise == 1.0);  // unit misfit weight for noiseless data
  for (int k = 0; k < fx.grid->num_active(); ++k) {
    REQUIRE(obs.data[0][k] == traj.at(2)[k]);
    REQUIRE(obs.data[1][k] == traj.at(8)[k]);
  }
}

TEST_CASE("synthetic data is deterministic in the seed", "[observation]") {
  Fixture fx = small_disk_fixture();
  ObservationSet a =
      generate_synthetic(fx.truth, fx.u0, fx.time, {4, 9}, 0.05, 42);
  ObservationSet b =
      generate_synthetic(fx.truth, fx.u0, fx.time, {4, 9}, 0.05, 42);
  ObservationSet c =
      generate_synthetic(fx.truth, fx.u0, fx.time, {4, 9}, 0.05, 43);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    for (int k = 0; k < a.data[i].size(); ++k) {
      identical = identical && a.data[i][k] == b.data[i][k];
      differs = differs || a.data[i][k] != c.data[i][k];
    }
  }
  REQUIRE(identical);
  REQUIRE(differs);
}

TEST_CASE("noise standard deviation matches the requested sigma",
          "[observation]") {
  auto grid = build_grid(100, 100, 1.0, 1.0, full_mask(100, 100));
  ScalarField u0(grid, 0.5);
  ParamPair params{ScalarField(grid, 0.0), ScalarField(grid, 0.0)};
  TimeGrid tg(1.0, 1);
  const double sigma = 0.05;
  ObservationSet obs = generate_synthetic(params, u0, tg, {1}, sigma, 7);
  double sum = 0.0, sum2 = 0.0;
  const int n = obs.data[0].size();
  for (int k = 0; k < n; ++k) {
    const double e = obs.data[0][k] - 0.5;
    sum += e;
    sum2 += e * e;
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  REQUIRE_THAT(std::sqrt(var), WithinRel(sigma, 0.05));
}

TEST_CASE("spatial masks restrict the misfit and its adjoint source",
          "[observation]") {
  Fixture fx = small_disk_fixture();
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  GaussianSampler sampler(83);
  ScalarField d = traj.at(5);
  d.axpy(0.1, white_noise_field(fx.grid, sampler));
  ScalarField mask(fx.grid, 0.0);
  for (int k = 0; k < mask.size(); ++k) mask[k] = (k % 3 == 0) ? 1.0 : 0.0;
  const double sigma = 0.4;
  ObservationSet masked = ObservationSet::create({5}, {d}, sigma, {mask});

  // misfit counts only covered cells (naive loop oracle)
  double expected = 0.0;
  for (int k = 0; k < fx.grid->num_active(); ++k) {
    if (mask[k] == 0.0) continue;
    const double r = traj.at(5)[k] - d[k];
    expected += r * r * fx.grid->cell_area();
  }
  expected *= 0.5 / (sigma * sigma);
  REQUIRE_THAT(misfit_cost(traj, masked), WithinRel(expected, 1e-13));

  // the adjoint source vanishes exactly on uncovered cells
  ScalarField src = obs_adjoint_source(traj, masked, 5);
  for (int k = 0; k < src.size(); ++k) {
    if (mask[k] == 0.0) {
      REQUIRE(src[k] == 0.0);
    } else {
      REQUIRE(src[k] == (traj.at(5)[k] - d[k]) / (sigma * sigma));
    }
  }

  // restriction is idempotent
  ScalarField once = obs_restrict(masked, 5, traj.at(5));
  ScalarField twice = obs_restrict(masked, 5, once);
  for (int k = 0; k < once.size(); ++k) REQUIRE(twice[k] == once[k]);
}

TEST_CASE("observation set validation", "[observation]") {
  auto grid = build_grid(3, 3, 1.0, 1.0, full_mask(3, 3));
  ScalarField d(grid, 0.0);
  REQUIRE_THROWS(ObservationSet::create({2, 2}, {d, d}, 1.0));
  REQUIRE_THROWS(ObservationSet::create({3, 2}, {d, d}, 1.0));
  REQUIRE_THROWS(ObservationSet::create({-1}, {d}, 1.0));
  REQUIRE_THROWS(ObservationSet::create({1}, {d}, 0.0));
  REQUIRE_NOTHROW(ObservationSet::create({}, {}, 1.0));
}
