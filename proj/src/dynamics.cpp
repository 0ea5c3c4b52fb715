#include "osg/dynamics.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace osg {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Amplitude pattern of one dressed-basis round trip. An excited atom with n
// photons splits over the two dressed states of the (n+1)-quantum manifold;
// a ground-state atom with n >= 1 photons over those of the n-quantum
// manifold. Either way both deflection branches receive the kick of the
// manifold's lower photon index.
struct DressedSplit {
  InternalLabel label;
  int n_field;
  double weight;  // amplitude factor for this component at branch sign eta
};

}  // namespace

CompositeState build_initial_state(const QubitState& carrier,
                                   const GaussianState& g1,
                                   const GaussianState& g2, double hbar) {
  validate_qubit(carrier);
  CompositeState state;
  state.hbar = hbar;
  Term t;
  t.s1 = InternalLabel::e;
  t.n_field = 0;
  t.g1 = g1;
  t.g2 = g2;

  t.amp = qubit_amp_e(carrier);
  t.s2 = InternalLabel::e;
  state.terms.push_back(t);

  t.amp = qubit_amp_g(carrier);
  t.s2 = InternalLabel::g;
  state.terms.push_back(t);

  state = merged(state);
  validate_state(state);
  return state;
}

CompositeState apply_atom_cavity(const CompositeState& state, int atom,
                                 Region region, const PhysicalParams& pp,
                                 double tau, double entry_time) {
  if (atom != 1 && atom != 2)
    throw std::invalid_argument("atom index must be 1 or 2");
  if (!(tau >= 0.0)) throw std::invalid_argument("duration must be >= 0");

  CompositeState out;
  out.hbar = state.hbar;
  for (const Term& t : state.terms) {
    const InternalLabel s = atom == 1 ? t.s1 : t.s2;
    const GaussianState& g = atom == 1 ? t.g1 : t.g2;

    if (s == InternalLabel::g && t.n_field == 0) {
      out.terms.push_back(t);  // decoupled: no dressed partner exists
      continue;
    }
    if (s == InternalLabel::e && t.n_field >= kFockCap)
      throw std::runtime_error("photon ladder cap exceeded by cavity coupling");

    const int kick_n =
        s == InternalLabel::e ? t.n_field : t.n_field - 1;
    for (const int eta : {1, -1}) {
      const GaussianState kicked =
          branch_kick(g, pp, region, kick_n, eta, entry_time, tau);
      DressedSplit parts[2];
      if (s == InternalLabel::e) {
        parts[0] = {InternalLabel::e, t.n_field, 0.5};
        parts[1] = {InternalLabel::g, t.n_field + 1, 0.5 * eta};
      } else {
        parts[0] = {InternalLabel::e, t.n_field - 1, 0.5 * eta};
        parts[1] = {InternalLabel::g, t.n_field, 0.5};
      }
      for (const DressedSplit& part : parts) {
        Term nt = t;
        nt.amp = t.amp * part.weight;
        nt.n_field = part.n_field;
        if (atom == 1) {
          nt.s1 = part.label;
          nt.g1 = kicked;
        } else {
          nt.s2 = part.label;
          nt.g2 = kicked;
        }
        out.terms.push_back(nt);
      }
    }
  }
  return merged(out);
}

CompositeState apply_probe(const CompositeState& state,
                           const PhysicalParams& pp, Region region, double tau,
                           const GaussianState& g_probe, double entry_time) {
  if (!(tau >= 0.0)) throw std::invalid_argument("duration must be >= 0");

  CompositeState out;
  out.hbar = state.hbar;
  for (const Term& t : state.terms) {
    if (t.gp.has_value())
      throw std::invalid_argument("probe register already present");
    if (t.n_field == 0) {
      Term nt = t;
      nt.sp = InternalLabel::g;
      nt.gp = g_probe;
      out.terms.push_back(nt);
      continue;
    }
    const int kick_n = t.n_field - 1;
    for (const int eta : {1, -1}) {
      const GaussianState kicked =
          branch_kick(g_probe, pp, region, kick_n, eta, entry_time, tau);
      Term up = t;  // probe absorbs one quantum
      up.amp = t.amp * (0.5 * eta);
      up.sp = InternalLabel::e;
      up.n_field = t.n_field - 1;
      up.gp = kicked;
      out.terms.push_back(up);

      Term down = t;  // probe returns the quantum
      down.amp = t.amp * 0.5;
      down.sp = InternalLabel::g;
      down.n_field = t.n_field;
      down.gp = kicked;
      out.terms.push_back(down);
    }
  }
  return merged(out);
}

namespace {

struct PauliAction {
  Pauli pauli;
  complexd e, g;  // result of pauli acting on (amp_e, amp_g), e-component/g-component
};

std::array<PauliAction, 4> pauli_table(complexd ae, complexd ag) {
  return {{{Pauli::identity, ae, ag},
           {Pauli::sigma_z, -ae, ag},
           {Pauli::sigma_x, ag, ae},
           {Pauli::i_sigma_y, -ag, ae}}};
}

}  // namespace

BellFormView bell_form(const CompositeState& state) {
  const CompositeState s = merged(state);
  if (s.terms.empty()) throw std::invalid_argument("empty state");

  // The first atom's packets must fall into exactly two branches.
  std::vector<GaussianState> reps;
  std::vector<int> cluster_of(s.terms.size(), -1);
  for (size_t i = 0; i < s.terms.size(); ++i) {
    const Term& t = s.terms[i];
    if (t.gp.has_value())
      throw std::invalid_argument("probe register not supported here");
    if (t.n_field < 0 || t.n_field > 1)
      throw std::invalid_argument("field population outside the qubit range");
    bool found = false;
    for (size_t c = 0; c < reps.size(); ++c) {
      if (gaussians_close(reps[c], t.g1)) {
        cluster_of[i] = static_cast<int>(c);
        found = true;
        break;
      }
    }
    if (!found) {
      reps.push_back(t.g1);
      cluster_of[i] = static_cast<int>(reps.size()) - 1;
    }
  }
  if (reps.size() != 2)
    throw std::invalid_argument("state does not have two first-atom branches");

  // All terms must share one spectator packet for the second atom.
  for (const Term& t : s.terms)
    if (!gaussians_close(t.g2, s.terms.front().g2))
      throw std::invalid_argument("second atom's packet is not a spectator");

  // Branch sign convention: the +1 branch is the one pushed to lower momentum.
  int plus_cluster = 0;
  if (reps[0].p0 != reps[1].p0) {
    plus_cluster = reps[0].p0 < reps[1].p0 ? 0 : 1;
  } else if (reps[0].x0 != reps[1].x0) {
    plus_cluster = reps[0].x0 < reps[1].x0 ? 0 : 1;
  } else {
    throw std::invalid_argument("first-atom branches are indistinguishable");
  }

  // amp[s1][s2][n][branch] with e mapped to index 1.
  complexd amp[2][2][2][2] = {};
  bool seen[2][2][2][2] = {};
  for (size_t i = 0; i < s.terms.size(); ++i) {
    const Term& t = s.terms[i];
    const int i1 = t.s1 == InternalLabel::e ? 1 : 0;
    const int i2 = t.s2 == InternalLabel::e ? 1 : 0;
    const int ib = cluster_of[i] == plus_cluster ? 0 : 1;
    if (seen[i1][i2][t.n_field][ib])
      throw std::invalid_argument("duplicate term in one branch");
    seen[i1][i2][t.n_field][ib] = true;
    amp[i1][i2][t.n_field][ib] = t.amp;
  }

  BellFormView view;
  view.hbar = s.hbar;
  view.branch_plus = reps[static_cast<size_t>(plus_cluster)];
  view.branch_minus = reps[static_cast<size_t>(1 - plus_cluster)];
  view.g2 = s.terms.front().g2;

  int slot = 0;
  for (const int eta : {1, -1}) {
    const int ib = eta == 1 ? 0 : 1;
    const std::array<std::pair<BellState, int>, 4> combos = {
        {{BellState::chi_plus, +1},
         {BellState::chi_minus, -1},
         {BellState::xi_plus, +1},
         {BellState::xi_minus, -1}}};
    for (const auto& [bell, rel] : combos) {
      BellTerm entry;
      entry.bell = bell;
      entry.eta = eta;
      const bool chi = bell == BellState::chi_plus || bell == BellState::chi_minus;
      // chi pairs (e,0) with (g,1); xi pairs (e,1) with (g,0).
      const int na = chi ? 0 : 1;
      const int nb = chi ? 1 : 0;
      for (const int i1 : {1, 0}) {
        const complexd c = (amp[i1][1][na][ib] +
                            static_cast<double>(rel) * amp[i1][0][nb][ib]) *
                           kInvSqrt2;
        (i1 == 1 ? entry.content_e : entry.content_g) = c;
      }
      view.entries[static_cast<size_t>(slot++)] = entry;
    }
  }

  // Recover the carrier amplitudes from the first entry (chi_plus, eta=+1):
  // its content equals (amp_e, amp_g) / (2*sqrt(2)).
  const double two_sqrt2 = 2.0 * std::sqrt(2.0);
  view.amp_e = view.entries[0].content_e * two_sqrt2;
  view.amp_g = view.entries[0].content_g * two_sqrt2;

  // Label every entry with the relabelling it applies to the carrier.
  const double scale = std::abs(view.amp_e) + std::abs(view.amp_g);
  const double tol = 1e-9 * (scale > 0.0 ? scale : 1.0);
  for (BellTerm& entry : view.entries) {
    const complexd ce = entry.content_e * two_sqrt2;
    const complexd cg = entry.content_g * two_sqrt2;
    bool matched = false;
    for (const PauliAction& pa : pauli_table(view.amp_e, view.amp_g)) {
      for (const int sign : {1, -1}) {
        const double err = std::abs(ce - static_cast<double>(sign) * pa.e) +
                           std::abs(cg - static_cast<double>(sign) * pa.g);
        if (err < tol) {
          entry.pauli = pa.pauli;
          entry.sign = sign;
          matched = true;
          break;
        }
      }
      if (matched) break;
    }
    if (!matched)
      throw std::invalid_argument(
          "entry content is not a relabelled carrier qubit");
  }
  return view;
}

CompositeState reassemble(const BellFormView& view) {
  CompositeState out;
  out.hbar = view.hbar;
  for (const BellTerm& entry : view.entries) {
    const bool chi =
        entry.bell == BellState::chi_plus || entry.bell == BellState::chi_minus;
    const int rel = (entry.bell == BellState::chi_plus ||
                     entry.bell == BellState::xi_plus)
                        ? 1
                        : -1;
    const GaussianState& g1 =
        entry.eta == 1 ? view.branch_plus : view.branch_minus;
    // Expand the Bell pair back into its two bare components.
    struct Component {
      InternalLabel s2;
      int n;
      double coef;
    };
    const Component comps[2] = {
        {InternalLabel::e, chi ? 0 : 1, kInvSqrt2},
        {InternalLabel::g, chi ? 1 : 0, kInvSqrt2 * rel}};
    for (const Component& comp : comps) {
      for (const int i1 : {1, 0}) {
        const complexd content =
            i1 == 1 ? entry.content_e : entry.content_g;
        if (std::abs(content) == 0.0) continue;
        Term t;
        t.amp = content * comp.coef;
        t.s1 = i1 == 1 ? InternalLabel::e : InternalLabel::g;
        t.s2 = comp.s2;
        t.n_field = comp.n;
        t.g1 = g1;
        t.g2 = view.g2;
        out.terms.push_back(t);
      }
    }
  }
  return merged(out);
}

}  // namespace osg
