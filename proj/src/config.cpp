#include "osg/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace osg {

namespace {

using ordered_json = nlohmann::ordered_json;

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

template <typename T>
void read_key(const ordered_json& j, const char* key, T& slot) {
  if (!j.contains(key)) return;
  try {
    slot = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(std::string("config key has the wrong type: ") + key);
  }
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("config root must be a JSON object");

  static const char* known[] = {
      "mass", "epsilon", "lambda", "hbar", "dimensionless", "region",
      "theta", "phi",
      "sigma_x1", "sigma_x2", "probe_sigma_x",
      "x0_1", "p0_1", "x0_2", "p0_2",
      "eps_tau1", "eps_tau2", "eps_gap", "eps_drift",
      "eps_tau_probe", "eps_probe_drift", "probe_confidence",
      "classifier", "antinodal_frequency", "n_trials", "base_seed",
      "eps_tau_min", "eps_tau_max", "sweep_steps", "overlap_n",
      "grid_points", "grid_eps_dt", "oracle_draws", "oracle_seed",
      "oracle_tolerance_scale", "out"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail("unknown config key: " + item.key());
  }

  RunConfig c;
  read_key(j, "mass", c.mass);
  read_key(j, "epsilon", c.epsilon);
  read_key(j, "lambda", c.lambda);
  read_key(j, "hbar", c.hbar);
  read_key(j, "dimensionless", c.dimensionless);
  read_key(j, "region", c.region);
  read_key(j, "theta", c.theta);
  read_key(j, "phi", c.phi);
  read_key(j, "sigma_x1", c.sigma_x1);
  read_key(j, "sigma_x2", c.sigma_x2);
  read_key(j, "probe_sigma_x", c.probe_sigma_x);
  read_key(j, "x0_1", c.x0_1);
  read_key(j, "p0_1", c.p0_1);
  read_key(j, "x0_2", c.x0_2);
  read_key(j, "p0_2", c.p0_2);
  read_key(j, "eps_tau1", c.eps_tau1);
  read_key(j, "eps_tau2", c.eps_tau2);
  read_key(j, "eps_gap", c.eps_gap);
  read_key(j, "eps_drift", c.eps_drift);
  read_key(j, "eps_tau_probe", c.eps_tau_probe);
  read_key(j, "eps_probe_drift", c.eps_probe_drift);
  read_key(j, "probe_confidence", c.probe_confidence);
  read_key(j, "classifier", c.classifier);
  read_key(j, "antinodal_frequency", c.antinodal_frequency);
  read_key(j, "n_trials", c.n_trials);
  read_key(j, "base_seed", c.base_seed);
  read_key(j, "eps_tau_min", c.eps_tau_min);
  read_key(j, "eps_tau_max", c.eps_tau_max);
  read_key(j, "sweep_steps", c.sweep_steps);
  read_key(j, "overlap_n", c.overlap_n);
  read_key(j, "grid_points", c.grid_points);
  read_key(j, "grid_eps_dt", c.grid_eps_dt);
  read_key(j, "oracle_draws", c.oracle_draws);
  read_key(j, "oracle_seed", c.oracle_seed);
  read_key(j, "oracle_tolerance_scale", c.oracle_tolerance_scale);
  read_key(j, "out", c.out);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str());
}

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["mass"] = c.mass;
  j["epsilon"] = c.epsilon;
  j["lambda"] = c.lambda;
  j["hbar"] = c.hbar;
  j["dimensionless"] = c.dimensionless;
  j["region"] = c.region;
  j["theta"] = c.theta;
  j["phi"] = c.phi;
  j["sigma_x1"] = c.sigma_x1;
  j["sigma_x2"] = c.sigma_x2;
  j["probe_sigma_x"] = c.probe_sigma_x;
  j["x0_1"] = c.x0_1;
  j["p0_1"] = c.p0_1;
  j["x0_2"] = c.x0_2;
  j["p0_2"] = c.p0_2;
  j["eps_tau1"] = c.eps_tau1;
  j["eps_tau2"] = c.eps_tau2;
  j["eps_gap"] = c.eps_gap;
  j["eps_drift"] = c.eps_drift;
  j["eps_tau_probe"] = c.eps_tau_probe;
  j["eps_probe_drift"] = c.eps_probe_drift;
  j["probe_confidence"] = c.probe_confidence;
  j["classifier"] = c.classifier;
  j["antinodal_frequency"] = c.antinodal_frequency;
  j["n_trials"] = c.n_trials;
  j["base_seed"] = c.base_seed;
  j["eps_tau_min"] = c.eps_tau_min;
  j["eps_tau_max"] = c.eps_tau_max;
  j["sweep_steps"] = c.sweep_steps;
  j["overlap_n"] = c.overlap_n;
  j["grid_points"] = c.grid_points;
  j["grid_eps_dt"] = c.grid_eps_dt;
  j["oracle_draws"] = c.oracle_draws;
  j["oracle_seed"] = c.oracle_seed;
  j["oracle_tolerance_scale"] = c.oracle_tolerance_scale;
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

Resolved resolve(const RunConfig& c) {
  if (!(c.mass > 0.0) || !(c.epsilon > 0.0) || !(c.lambda > 0.0) ||
      !(c.hbar > 0.0))
    fail("mass, epsilon, lambda and hbar must be positive");
  if (!(c.eps_tau1 >= 0.0) || !(c.eps_tau2 >= 0.0) || !(c.eps_gap >= 0.0))
    fail("transit and gap durations must be >= 0");
  if (!(c.eps_tau_probe >= 0.0)) fail("probe transit must be >= 0");
  if (!(c.probe_confidence > 0.0 && c.probe_confidence < 1.0))
    fail("probe_confidence must lie in (0, 1)");
  if (c.sweep_steps < 2) fail("sweep_steps must be at least 2");
  if (!(c.eps_tau_max > c.eps_tau_min)) fail("empty sweep range");
  if (c.overlap_n < 0 || c.overlap_n > kFockCap)
    fail("overlap_n outside the supported ladder");
  if (c.oracle_draws < 1) fail("oracle_draws must be at least 1");
  if (!(c.oracle_tolerance_scale > 0.0))
    fail("oracle_tolerance_scale must be positive");
  if (!(c.grid_eps_dt > 0.0)) fail("grid_eps_dt must be positive");
  if (c.grid_points != 0 &&
      (c.grid_points < 256 || (c.grid_points & (c.grid_points - 1)) != 0))
    fail("grid_points must be 0 or a power of two >= 256");

  Resolved r;
  const PhysicalParams si =
      make_params(c.mass, c.epsilon, 2.0 * kPi / c.lambda, c.hbar);
  // Scale factor taking an explicit SI length to its natural-unit value.
  double length_scale = 1.0;
  if (c.dimensionless) {
    r.params = dimensionless_params(si);
    length_scale = si.k / r.params.k;
  } else {
    r.params = si;
  }

  ProtocolConfig& pc = r.protocol;
  pc.params = r.params;

  if (c.region == "nodal") pc.region = Region::nodal;
  else if (c.region == "antinodal") pc.region = Region::antinodal;
  else fail("region must be \"nodal\" or \"antinodal\"");

  if (c.classifier == "ideal") pc.classifier = ClassifierMode::ideal;
  else if (c.classifier == "sampled_position")
    pc.classifier = ClassifierMode::sampled_position;
  else if (c.classifier == "sampled_momentum")
    pc.classifier = ClassifierMode::sampled_momentum;
  else
    fail("classifier must be \"ideal\", \"sampled_position\" or "
         "\"sampled_momentum\"");

  if (c.antinodal_frequency == "eigenvalue_scaled")
    pc.freq_convention = AntinodalFrequencyConvention::eigenvalue_scaled;
  else if (c.antinodal_frequency == "unscaled")
    pc.freq_convention = AntinodalFrequencyConvention::unscaled;
  else
    fail("antinodal_frequency must be \"eigenvalue_scaled\" or \"unscaled\"");

  pc.carrier = QubitState{c.theta, c.phi};
  validate_qubit(pc.carrier);

  const double default_sigma = (c.lambda / 10.0) * length_scale;
  const double s1 = c.sigma_x1 > 0.0 ? c.sigma_x1 : default_sigma;
  const double s2 = c.sigma_x2 > 0.0 ? c.sigma_x2 : default_sigma;
  const double sprobe = c.probe_sigma_x > 0.0 ? c.probe_sigma_x : default_sigma;
  if (c.sigma_x1 == 0.0 || c.sigma_x2 == 0.0 || c.probe_sigma_x == 0.0)
    fail("packet widths must be positive (or negative for the default)");

  pc.g1 = minimum_uncertainty_packet(c.x0_1, c.p0_1, s1, r.params.hbar);
  pc.g2 = minimum_uncertainty_packet(c.x0_2, c.p0_2, s2, r.params.hbar);
  r.probe_packet =
      minimum_uncertainty_packet(0.0, 0.0, sprobe, r.params.hbar);

  pc.tau1 = c.eps_tau1 / r.params.epsilon;
  pc.tau2 = c.eps_tau2 / r.params.epsilon;
  pc.gap = c.eps_gap / r.params.epsilon;
  const double eps_drift =
      c.eps_drift >= 0.0 ? c.eps_drift : c.eps_tau1 + c.eps_gap + c.eps_tau2;
  pc.drift = eps_drift / r.params.epsilon;

  r.tau_probe = c.eps_tau_probe / r.params.epsilon;
  const double eps_probe_drift =
      c.eps_probe_drift >= 0.0 ? c.eps_probe_drift : c.eps_tau_probe;
  r.probe_drift = eps_probe_drift / r.params.epsilon;
  r.probe_confidence = c.probe_confidence;
  r.grid_dt = c.grid_eps_dt / r.params.epsilon;
  return r;
}

}  // namespace osg
