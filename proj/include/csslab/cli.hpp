#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csslab/grid.hpp"
#include "csslab/io.hpp"

namespace csslab {

enum ExitCode { kExitPass = 0, kExitValidation = 1, kExitNumerical = 2, kExitRuntime = 3 };

/// Every knob of every subcommand. Zero grid radii mean "subcommand default" and
/// are resolved before the manifest is written.
struct RunConfig {
  std::string subcommand;
  int m = 1;
  double eta = 0.0;
  std::vector<double> eta_list{0.04, 0.02, 0.01};
  // grid
  int n = 4096;
  double r_max = 0.0;
  double core = 0.0;
  int degree = 8;
  // integrator
  double dt = 1e-4;
  double t0 = -1.0, t1 = -0.5;
  int max_iter = 8;
  double step_tol = 1e-12;
  std::vector<double> snapshots;
  std::string data = "q";  // q | s | qeta | zbump | file
  std::string mode = "css";  // css | tilde | potential
  std::string file;
  // profiles
  double B = 10.0;
  double shoot_tol = 1e-12;
  // instability
  double tau = 0.2;
  std::string zstar = "bump:0.01";  // none | file | bump:alpha
  double alpha_star = 1.0;
  double dt_factor = 0.006;
  int sample_every = 10;
  bool lyapunov = false;
  // envcheck
  std::string series;
  double s = 1.25, p = 1.0, q = -1.0;
  // report
  std::string input;
  std::string out = "out";
  std::uint64_t seed = 1;
};

json to_json(const RunConfig& c);
RunConfig config_from_json(const json& j);
// Field-level validation; throws ValidationError naming the field.
void validate(const RunConfig& c);
// Fill subcommand-dependent defaults (grid radii).
RunConfig resolved(RunConfig c);
GridSpec grid_spec(const RunConfig& c);

struct IdentityCheck {
  std::string name;
  double residual = 0, tolerance = 0;
  bool pass = false;
};
// Residual ledger of the closed-form and self-dual identities at index m.
std::vector<IdentityCheck> identity_ledger(const RunConfig& c);

// Runs a validated config; returns the exit code and writes artifacts under c.out.
int run(const RunConfig& c, std::ostream& log);
// Parses argv (subcommand, flags, optional --config JSON) and runs.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace csslab
