// Command-line front end:
//   rdcal forward|synth|calibrate|verify-grad|verify-hess
//         --config <path> [--out <dir>] [--seed <n>]
//
// --out overrides out.dir; --seed overrides the seed relevant to the
// subcommand (obs.seed for forward/synth/calibrate, fd.seed for verify-*).
// Exit status 0 on success, nonzero with an "error: <reason>" line on
// stderr otherwise.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rdcal/rdcal.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--seed", args.seed, "seed override for this subcommand")
      ->check(CLI::NonNegativeNumber);
}

rdcal::RunConfig load(const CommonArgs& args, bool seed_is_fd) {
  rdcal::RunConfig cfg = rdcal::load_config(args.config_path);
  if (!args.out_dir.empty()) {
    std::filesystem::path p = args.out_dir;
    cfg.out_dir = p.is_absolute()
                      ? p
                      : std::filesystem::absolute(std::filesystem::current_path() / p);
  }
  if (args.seed >= 0) {
    const auto seed = static_cast<std::uint64_t>(args.seed);
    if (seed_is_fd) {
      cfg.fd_seed = seed;
    } else {
      cfg.obs_seed = seed;
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rdcal: reaction-diffusion tumor growth model calibration"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* cmd_forward = app.add_subcommand(
      "forward", "solve the forward model and dump the trajectory");
  CLI::App* cmd_synth = app.add_subcommand(
      "synth", "generate a synthetic observation bundle");
  CLI::App* cmd_calibrate = app.add_subcommand(
      "calibrate", "run the Newton-CG calibration");
  CLI::App* cmd_verify_grad = app.add_subcommand(
      "verify-grad", "finite-difference check of the gradient");
  CLI::App* cmd_verify_hess = app.add_subcommand(
      "verify-hess", "finite-difference and symmetry checks of the Hessian");
  for (CLI::App* cmd : {cmd_forward, cmd_synth, cmd_calibrate,
                        cmd_verify_grad, cmd_verify_hess}) {
    add_common(cmd, args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_forward->parsed()) {
      rdcal::run_forward(load(args, false));
    } else if (cmd_synth->parsed()) {
      rdcal::run_synth(load(args, false));
    } else if (cmd_calibrate->parsed()) {
      const rdcal::CalibrationResult result =
          rdcal::run_calibrate(load(args, false));
      if (!result.converged) {
        std::cerr << "error: calibration did not converge: " << result.reason
                  << '\n';
        return 2;
      }
    } else if (cmd_verify_grad->parsed()) {
      rdcal::run_verify_grad(load(args, true));
    } else if (cmd_verify_hess->parsed()) {
      rdcal::run_verify_hess(load(args, true));
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
