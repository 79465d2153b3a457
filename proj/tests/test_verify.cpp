#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace rdcal;
using namespace testsupport;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ProblemSetup make_setup(const Fixture& fx, const ObservationSet& obs) {
  return ProblemSetup{fx.u0, fx.time, obs, fx.reg_op_d, fx.reg_op_g};
}

}  // namespace

TEST_CASE("gradient check on a quadratic problem leaves the pure Taylor term",
          "[verify]") {
  // no observations: the cost is quadratic, so the one-sided difference
  // residual is exactly eps/2 * <H d, d> and r/eps is constant
  Fixture fx = small_disk_fixture();
  ObservationSet none = empty_observations(fx.grid);
  ProblemSetup setup = make_setup(fx, none);
  const std::uint64_t seed = 11;
  FDCheckReport rep = fd_gradient_check(fx.truth, setup,
                                        {1e-2, 1e-3, 1e-4}, seed);
  GaussianSampler sampler(seed);
  FieldPair dir{white_noise_field(fx.grid, sampler),
                white_noise_field(fx.grid, sampler)};
  const double half_curvature =
      0.5 * std::abs(inner(reg_hess_apply(dir.D, fx.reg_op_d), dir.D) +
                     inner(reg_hess_apply(dir.G, fx.reg_op_g), dir.G));
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
    REQUIRE_THAT(rep.residuals[i],
                 WithinRel(rep.epsilons[i] * half_curvature, 1e-6));
  }
}

TEST_CASE("gradient check slope is one on the full problem", "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {5, 9}, 0.02, 5);
  ProblemSetup setup = make_setup(fx, obs);
  FDCheckReport rep =
      fd_gradient_check(fx.truth, setup, default_epsilons(), 11);
  REQUIRE(rep.slope > 0.8);
  REQUIRE(rep.slope < 1.2);
  // roundoff upturn at tiny eps is reported, not failed
  REQUIRE(rep.epsilons.size() == default_epsilons().size());
  REQUIRE(rep.residuals.size() == rep.epsilons.size());
  REQUIRE(rep.direction_seed == 11);
}

TEST_CASE("hessian check is exact on a pure regularization problem",
          "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet none = empty_observations(fx.grid);
  ProblemSetup setup = make_setup(fx, none);
  FDCheckReport rep = fd_hessian_check(fx.truth, setup,
                                       {1e-2, 1e-4, 1e-6}, 11);
  // H is exact and the gradient is linear: only roundoff remains
  GaussianSampler sampler(11);
  FieldPair dir{white_noise_field(fx.grid, sampler),
                white_noise_field(fx.grid, sampler)};
  const double scale = norm(FieldPair{reg_hess_apply(dir.D, fx.reg_op_d),
                                      reg_hess_apply(dir.G, fx.reg_op_g)});
  for (double r : rep.residuals) REQUIRE(r <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("hessian check slope is one on the full problem", "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {5, 9}, 0.02, 5);
  ProblemSetup setup = make_setup(fx, obs);
  FDCheckReport rep =
      fd_hessian_check(fx.truth, setup, default_epsilons(), 11);
  REQUIRE(rep.slope > 0.8);
  REQUIRE(rep.slope < 1.2);
}

TEST_CASE("fd reports are reproducible bit for bit", "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {5, 9}, 0.02, 5);
  ProblemSetup setup = make_setup(fx, obs);
  FDCheckReport a = fd_hessian_check(fx.truth, setup, {1e-2, 1e-3, 1e-4}, 21);
  FDCheckReport b = fd_hessian_check(fx.truth, setup, {1e-2, 1e-3, 1e-4}, 21);
  FDCheckReport c = fd_hessian_check(fx.truth, setup, {1e-2, 1e-3, 1e-4}, 22);
  REQUIRE(a.residuals == b.residuals);
  REQUIRE(a.slope == b.slope);
  REQUIRE(a.residuals != c.residuals);
}

TEST_CASE("epsilon sweep validation", "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet none = empty_observations(fx.grid);
  ProblemSetup setup = make_setup(fx, none);
  REQUIRE_THROWS(fd_gradient_check(fx.truth, setup, {}, 1));
  REQUIRE_THROWS(fd_gradient_check(fx.truth, setup, {1e-3, 1e-2}, 1));
  REQUIRE_THROWS(fd_gradient_check(fx.truth, setup, {2.0, 1e-2}, 1));
}

TEST_CASE("symmetry check is at roundoff for the regularization problem",
          "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet none = empty_observations(fx.grid);
  ProblemSetup setup = make_setup(fx, none);
  REQUIRE(hessian_symmetry_check(fx.truth, setup, 3, 17) <= 1e-12);
}

TEST_CASE("symmetry check passes the acceptance threshold on the full problem",
          "[verify]") {
  Fixture fx = small_disk_fixture();
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {5, 9}, 0.02, 5);
  ProblemSetup setup = make_setup(fx, obs);
  REQUIRE(hessian_symmetry_check(fx.truth, setup, 5, 17) <= 1e-8);
}

TEST_CASE("negative control: flipped reaction coupling is caught by the "
          "gradient-difference check, not by symmetry",
          "[verify]") {
  // The second-order reaction coupling enters the Hessian as the diagonal
  // state-state block: <W uhat(v), uhat(w)>. Because this implementation
  // keeps the incremental solves exactly transpose-consistent, flipping the
  // coupling sign perturbs the Hessian symmetrically, and the symmetry
  // diagnostic cannot see it. The finite-difference check against the true
  // gradient difference catches the flip decisively; that check is the
  // operative adjudicator of the coupling sign.
  Fixture fx = small_disk_fixture();
  ObservationSet obs =
      generate_synthetic(fx.truth, fx.u0, fx.time, {5, 9}, 0.02, 5);
  ProblemSetup setup = make_setup(fx, obs);

  HessianOptions flipped;
  flipped.second_order_reaction_sign = -1.0;

  // the flip changes the operator materially...
  StateTrajectory traj = solve_forward(fx.truth, fx.u0, fx.time);
  AdjointTrajectory adj = solve_adjoint(traj, fx.truth, obs);
  HessianContext ctx_good = make_hessian_context(
      fx.truth, traj, adj, obs, fx.reg_op_d, fx.reg_op_g);
  HessianContext ctx_bad = make_hessian_context(
      fx.truth, traj, adj, obs, fx.reg_op_d, fx.reg_op_g, flipped);
  GaussianSampler sampler(19);
  FieldPair v{white_noise_field(fx.grid, sampler),
              white_noise_field(fx.grid, sampler)};
  GradientPair hv_good = apply_hessian(ctx_good, v);
  GradientPair hv_bad = apply_hessian(ctx_bad, v);
  REQUIRE(norm(hv_good - hv_bad) > 1e-3 * norm(hv_good));

  // ...the FD check fails loudly with the wrong sign...
  FDCheckReport good = fd_hessian_check(fx.truth, setup,
                                        {1e-2, 1e-3, 1e-4, 1e-5}, 19);
  FDCheckReport bad = fd_hessian_check(fx.truth, setup,
                                       {1e-2, 1e-3, 1e-4, 1e-5}, 19,
                                       1e-5, 1e-2, flipped);
  REQUIRE(good.slope > 0.8);
  REQUIRE(good.slope < 1.2);
  REQUIRE(bad.slope < 0.5);  // residual plateaus at ||dH v|| instead of decaying
  REQUIRE(bad.residuals.back() > 0.1 * bad.residuals.front());
  REQUIRE(bad.residuals.back() > 1e2 * good.residuals.back());

  // ...while the symmetry diagnostic stays quiet under the flip.
  const double asym_flipped =
      hessian_symmetry_check(fx.truth, setup, 3, 19, flipped);
  REQUIRE(asym_flipped <= 1e-8);
}
