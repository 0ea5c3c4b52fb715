#pragma once

#include <array>

#include "osg/core_types.hpp"
#include "osg/phase_space.hpp"

namespace osg {

// Initial configuration of the two-atom relay: the first atom enters excited,
// the cavity field is empty, and the second atom carries the unknown internal
// qubit. Packets g1/g2 are the translational states of the two atoms, stored
// in the co-drifting (time-zero) frame used throughout CompositeState.
CompositeState build_initial_state(const QubitState& carrier,
                                   const GaussianState& g1,
                                   const GaussianState& g2,
                                   double hbar = kHbar);

// Passes one atom (1 or 2) through the cavity for a duration tau starting at
// entry_time. Each term is decomposed into the dressed eigenstates of the
// atom-field coupling, every dressed component's packet receives the matching
// branch kick, and the result is re-expressed in the bare basis. Terms with
// the atom in its ground state and an empty field are left untouched (they
// are decoupled). Throws std::runtime_error if a term would be driven past
// the supported photon-number cap.
CompositeState apply_atom_cavity(const CompositeState& state, int atom,
                                 Region region, const PhysicalParams& pp,
                                 double tau, double entry_time = 0.0);

// Sends an auxiliary ground-state probe atom through the cavity, appending a
// probe register to every term. A term with an empty field leaves the probe
// packet untouched; otherwise the probe splits into two deflection branches
// whose kick strength reflects the photon number, which is what later makes
// the field population readable from the probe's position. Throws
// std::invalid_argument if a probe register is already present.
CompositeState apply_probe(const CompositeState& state,
                           const PhysicalParams& pp, Region region, double tau,
                           const GaussianState& g_probe,
                           double entry_time = 0.0);

enum class BellState { chi_plus, chi_minus, xi_plus, xi_minus };
enum class Pauli { identity, sigma_z, sigma_x, i_sigma_y };

// One entry of the Bell-basis regrouping: for a fixed deflection branch of
// the first atom, the joint (second-atom internal x field) register is
// projected on one Bell pair, leaving a qubit state on the first atom's
// internal levels with coefficients (content_e, content_g). That content
// equals sign * pauli applied to the carrier qubit, up to the common 1/(2*sqrt(2))
// prefactor already folded into the contents.
struct BellTerm {
  BellState bell;
  int eta = 1;  // first atom's deflection branch (+1 or -1)
  complexd content_e{0.0, 0.0};
  complexd content_g{0.0, 0.0};
  Pauli pauli = Pauli::identity;
  int sign = 1;
};

// Exact regrouping of the mid-protocol state (first atom done, second atom
// not yet coupled) into eight Bell-labelled entries. branch_plus/branch_minus
// are the first atom's two packets, g2 the second atom's spectator packet,
// and (amp_e, amp_g) the carrier amplitudes recovered from the entries.
struct BellFormView {
  std::array<BellTerm, 8> entries{};
  complexd amp_e{0.0, 0.0};
  complexd amp_g{0.0, 0.0};
  GaussianState branch_plus{};
  GaussianState branch_minus{};
  GaussianState g2{};
  double hbar = kHbar;
};

// Builds the Bell-basis view of an 8-term mid-protocol state. Throws
// std::invalid_argument when the state does not have the expected shape
// (two clean first-atom branches, a single spectator packet, field <= 1).
BellFormView bell_form(const CompositeState& state);

// Expands a Bell-basis view back into the bare-basis composite state; the
// round trip bell_form -> reassemble reproduces the input state exactly.
CompositeState reassemble(const BellFormView& view);

}  // namespace osg
