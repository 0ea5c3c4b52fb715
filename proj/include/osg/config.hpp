#pragma once

#include <cstdint>
#include <string>

#include "osg/core_types.hpp"
#include "osg/protocol.hpp"

namespace osg {

// Flat key-value run configuration, loadable from a JSON object with exactly
// these keys (unknown keys are rejected). Negative values in the fields
// marked "-1 = derived" select the documented defaults at resolve time.
struct RunConfig {
  // medium and coupling
  double mass = 1e-26;           // [kg]
  double epsilon = 1e5;          // coupling rate [1/s]
  double lambda = 1e-5;          // mode wavelength [m]; wavenumber k = 2*pi/lambda
  double hbar = kHbar;           // [J s]
  bool dimensionless = false;    // work in hbar = m = epsilon = 1 units
  std::string region = "nodal";  // "nodal" | "antinodal"

  // carrier qubit on the second atom
  double theta = kPi / 3.0;
  double phi = kPi / 4.0;

  // packet widths and centroids (-1 = derived: width lambda/10)
  double sigma_x1 = -1.0;
  double sigma_x2 = -1.0;
  double probe_sigma_x = -1.0;
  double x0_1 = 0.0, p0_1 = 0.0;
  double x0_2 = 0.0, p0_2 = 0.0;

  // timing, all in units of 1/epsilon (-1 = derived)
  double eps_tau1 = 6.0;
  double eps_tau2 = 6.0;
  double eps_gap = 0.0;
  double eps_drift = -1.0;        // default: eps_tau1 + eps_gap + eps_tau2
  double eps_tau_probe = 16.0;
  double eps_probe_drift = -1.0;  // default: eps_tau_probe
  double probe_confidence = 0.01;

  // measurement and sampling
  std::string classifier = "sampled_position";  // | "ideal" | "sampled_momentum"
  std::string antinodal_frequency = "eigenvalue_scaled";  // | "unscaled"
  std::uint64_t n_trials = 100000;
  std::uint64_t base_seed = 12345;

  // sweep and self-check controls
  double eps_tau_min = 0.0;
  double eps_tau_max = 8.0;
  int sweep_steps = 81;
  int overlap_n = 0;       // deflection manifold index for sweeps
  int grid_points = 0;     // 0 = automatic grid sizing
  double grid_eps_dt = 1e-3;  // grid step in units of 1/epsilon
  int oracle_draws = 20;
  std::uint64_t oracle_seed = 777;
  double oracle_tolerance_scale = 1.0;

  std::string out;  // output path; empty = per-command default name
};

// Parses a JSON object; throws std::invalid_argument on malformed input,
// unknown keys, or out-of-range values.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Serializes with a fixed key order; from_json(to_json(c)) round-trips.
std::string run_config_to_json(const RunConfig& c);

// Run configuration resolved into concrete simulation inputs.
struct Resolved {
  PhysicalParams params;
  ProtocolConfig protocol;
  GaussianState probe_packet;
  double tau_probe = 0.0;
  double probe_drift = 0.0;
  double probe_confidence = 0.01;
  double grid_dt = 0.0;
};

// Applies the derived defaults and unit conventions. In dimensionless mode
// the parameter set becomes hbar = mass = epsilon = 1 with the wavenumber
// carrying the original dimensionless groups; explicit lengths/momenta in the
// config are then read in those natural units, while derived defaults are
// converted so both modes describe the same physical run.
Resolved resolve(const RunConfig& c);

}  // namespace osg
