#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "osg/core_types.hpp"
#include "osg/dynamics.hpp"
#include "osg/phase_space.hpp"

namespace osg {

// Deterministic random stream: a fixed 64-bit generator mapped to uniform
// doubles in [0,1) and cached Box-Muller normals, so results are identical
// across platforms for a given seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}
  double uniform();
  double gauss();

 private:
  std::mt19937_64 eng_;
  bool has_cache_ = false;
  double cache_ = 0.0;
};

// How the deflection branches are read out at the detector:
//  - ideal: a two-outcome orthogonalized measurement on the branch pair, with
//    the exact post-measurement states (imperfect for overlapping branches);
//  - sampled_position / sampled_momentum: draw one position/momentum sample
//    from the register's marginal distribution, classify it against the
//    midpoint between the branch centroids, and keep the matching branch.
enum class ClassifierMode { ideal, sampled_position, sampled_momentum };

enum class Status { success_direct, success_after_rotation, failure };

// Joint outcome rows of the final measurement record: photon number, the
// second atom's internal state, and (in the post-selected rows) the two path
// labels. The path suffix order is (first atom, second atom).
enum class TableRow {
  n2_fail,
  n1_e2_fail,
  n1_g2_pp,
  n1_g2_pm,
  n1_g2_mp,
  n1_g2_mm,
  n0_g2_fail,
  n0_e2_pp,
  n0_e2_pm,
  n0_e2_mp,
  n0_e2_mm,
};
inline constexpr int kTableRowCount = 11;
const char* row_name(TableRow row);

// Probability of each outcome row for carrier polar angle theta, in the
// regime where the deflection branches are effectively orthogonal.
double row_probability(TableRow row, double theta);

struct Classification {
  Status status;
  TableRow row;
};

// Maps one measurement record to its outcome row and the required carrier
// correction. Success rows need both path labels (std::invalid_argument
// otherwise): matching labels hand the carrier over directly, opposite
// labels require the phase-flip correction.
Classification classify(int photon_n, InternalLabel atom2,
                        std::optional<PathLabel> path1,
                        std::optional<PathLabel> path2);

struct ProtocolConfig {
  PhysicalParams params;
  Region region = Region::nodal;
  QubitState carrier;   // unknown qubit carried by the second atom
  GaussianState g1;     // first atom's packet
  GaussianState g2;     // second atom's packet
  double tau1 = 0.0;    // first atom's transit duration
  double tau2 = 0.0;    // second atom's transit duration
  double gap = 0.0;     // idle time between the two transits
  double drift = 0.0;   // exit-to-detection free-flight time
  ClassifierMode classifier = ClassifierMode::sampled_position;
  AntinodalFrequencyConvention freq_convention =
      AntinodalFrequencyConvention::eigenvalue_scaled;
};

inline double atom2_entry_time(const ProtocolConfig& c) {
  return c.tau1 + c.gap;
}
inline double protocol_exit_time(const ProtocolConfig& c) {
  return c.tau1 + c.gap + c.tau2;
}
inline double detection_time(const ProtocolConfig& c) {
  return protocol_exit_time(c) + c.drift;
}

// Runs both cavity transits and returns the normalized pre-measurement state.
CompositeState evolve_protocol_state(const ProtocolConfig& config);

// Exact population of each photon-number sector (index = photon number).
std::array<double, kFockCap + 1> photon_probabilities(
    const CompositeState& state);

// Projective measurement of the photon number / the second atom's internal
// state: draws an outcome and returns it with the collapsed state.
std::pair<int, CompositeState> measure_photon_number(const CompositeState& s,
                                                     RngStream& rng);
std::pair<InternalLabel, CompositeState> measure_atom2(const CompositeState& s,
                                                       RngStream& rng);

struct PathResult {
  PathLabel label = PathLabel::plus;
  CompositeState state;      // post-measurement state
  bool unreliable = false;   // branch centroids too close to separate
};

// Reads out one atom's deflection branch at detect_time (entry-frame packets
// are flown forward internally). The register must split into exactly two
// branches; the label "plus" always denotes the branch detected at larger
// mean position. Throws std::invalid_argument if there are not two branches.
PathResult measure_path(const CompositeState& state, int atom,
                        ClassifierMode mode, const PhysicalParams& pp,
                        double detect_time, RngStream& rng);

// Probability that a single position sample lands on the wrong side of the
// midpoint between the two branch centroids at detect_time.
double path_misclassification_rate(const CompositeState& state, int atom,
                                   const PhysicalParams& pp,
                                   double detect_time);

// Flips the sign of every ground-internal amplitude of the first atom: the
// phase-flip correction called for by the opposite-label success rows.
CompositeState apply_rotation_correction(const CompositeState& state);

// Overlap-squared between the first atom's internal state and the target
// qubit, with every other register traced out.
double fidelity_to_target(const CompositeState& state,
                          const QubitState& target);

// Same figure for a bare amplitude pair.
double qubit_fidelity(complexd amp_e, complexd amp_g, const QubitState& target);

struct OutcomeRecord {
  int photon_n = 0;
  InternalLabel atom2 = InternalLabel::g;
  std::optional<PathLabel> path1;
  std::optional<PathLabel> path2;
  Status result = Status::failure;
  TableRow row = TableRow::n2_fail;
  std::optional<double> fidelity;  // carrier fidelity, success rows only
  std::uint64_t seed = 0;
  bool unreliable = false;
};

struct TrialStats {
  std::uint64_t n_trials = 0;
  std::array<std::uint64_t, kTableRowCount> row_counts{};
  std::uint64_t n_success_direct = 0;
  std::uint64_t n_success_rotated = 0;
  std::uint64_t n_failure = 0;
  std::uint64_t n_unreliable = 0;
  double success_rate = 0.0;
  double fidelity_mean = 0.0;  // over success trials; 0 when there were none
  double fidelity_min = 0.0;
};

// One full protocol run with the given seed: photon-number readout, then the
// second atom's internal readout, then (in post-selected rows) both path
// readouts, classification, and carrier fidelity after correction.
OutcomeRecord run_trial(const ProtocolConfig& config, std::uint64_t seed);

// Repeats run_trial for seeds base_seed, base_seed+1, ... The heavy state
// preparation is shared across trials, so the cost per trial is a few draws.
TrialStats run_monte_carlo(const ProtocolConfig& config, std::uint64_t n_trials,
                           std::uint64_t base_seed);

// Deterministic projection onto one (photon number, second-atom internal)
// sector, normalized. Throws std::invalid_argument if the sector is empty.
CompositeState conditioned_state(const CompositeState& state, int photon_n,
                                 InternalLabel atom2);

struct ProbeResult {
  int origin_n = 0;          // photon number before the probe interaction
  bool unreliable = false;   // bands overlap more than the confidence allows
  CompositeState state;      // collapsed state, probe register kept
};

// Position readout of a probe register previously attached by apply_probe.
// The probe's deflection magnitude grows with the photon number it met, so
// its |position| at detect_time falls into bands labelled by that number
// (a probe that absorbed the quantum is counted towards its origin band).
// The constructor does the heavy overlap analysis once; sample() is cheap.
class ProbeReadout {
 public:
  ProbeReadout(const CompositeState& state, const PhysicalParams& pp,
               double detect_time, double confidence);
  ProbeResult sample(RngStream& rng) const;
  // Mean |position| of each band at detection, keyed by origin photon number.
  const std::vector<std::pair<int, double>>& band_centers() const {
    return bands_;
  }
  bool unreliable() const { return unreliable_; }

 private:
  CompositeState state_;
  std::vector<GaussianState> dets_;
  std::vector<std::vector<complexd>> gram_;
  std::vector<std::pair<int, double>> bands_;  // (origin, |x| center)
  bool unreliable_ = false;
};

// One-shot convenience wrapper around ProbeReadout.
ProbeResult probe_measure_photon(const CompositeState& state,
                                 const PhysicalParams& pp, double detect_time,
                                 double confidence, RngStream& rng);

}  // namespace osg
