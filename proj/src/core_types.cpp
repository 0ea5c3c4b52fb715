#include "osg/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>

namespace osg {

namespace {

constexpr double kMergeTol = 1e-12;
constexpr double kDropAmp = 1e-14;

struct Abc {
  complexd A, B, C;
};

complexd a_param(const GaussianState& g, double hbar) {
  const double alpha = 1.0 / (4.0 * g.var_x);
  const double beta = -g.cov_xp / (2.0 * hbar * g.var_x);
  return {alpha, beta};
}

Abc to_abc(const GaussianState& g, double hbar) {
  const complexd a = a_param(g, hbar);
  const complexd i(0.0, 1.0);
  const double alpha = a.real();
  Abc q;
  q.A = i * hbar * a;
  q.B = complexd(g.p0, 0.0) - 2.0 * i * hbar * a * g.x0;
  q.C = i * hbar * a * g.x0 * g.x0 - i * (hbar / 4.0) * std::log(2.0 * alpha / kPi) -
        g.p0 * g.x0 + hbar * g.phase;
  return q;
}

GaussianState from_abc(const Abc& q, double hbar) {
  const double im_a = q.A.imag();
  if (!(im_a > 0.0)) throw std::runtime_error("gaussian flow lost positivity");
  const double alpha = im_a / hbar;
  const double beta = -q.A.real() / hbar;
  GaussianState g;
  g.x0 = -q.B.imag() / (2.0 * im_a);
  g.p0 = q.B.real() + 2.0 * q.A.real() * g.x0;
  g.var_x = 1.0 / (4.0 * alpha);
  g.cov_xp = -hbar * beta / (2.0 * alpha);
  g.var_p = (hbar * hbar / 4.0 + g.cov_xp * g.cov_xp) / g.var_x;
  g.phase = wrap_phase((q.C.real() + g.p0 * g.x0 + hbar * beta * g.x0 * g.x0) / hbar);
  return g;
}

// One exact step of the quadratic-Hamiltonian flow. Restricted (by the caller,
// for kappa > 0) to arcs short enough that the principal complex logarithm of
// the width factor u is continuous.
GaussianState quad_flow_step(const GaussianState& g, double mass, double kappa,
                             double energy_offset, double t, double hbar) {
  const Abc s = to_abc(g, hbar);
  const double q = -kappa / mass;
  double cs, sn;
  if (kappa == 0.0) {
    cs = 1.0;
    sn = t;
  } else if (kappa > 0.0) {
    const double w = std::sqrt(kappa / mass);
    cs = std::cos(w * t);
    sn = std::sin(w * t) / w;
  } else {
    const double w = std::sqrt(-kappa / mass);
    cs = std::cosh(w * t);
    sn = std::sinh(w * t) / w;
  }
  const complexd r = 2.0 * s.A / mass;
  const complexd u = cs + r * sn;
  if (std::abs(std::arg(u)) > 2.0)
    throw std::runtime_error("gaussian flow step too long for continuous phase");
  Abc out;
  out.A = 0.5 * mass * (q * sn + r * cs) / u;
  out.B = s.B / u;
  out.C = s.C - (s.B * s.B / (2.0 * mass)) * (sn / u) +
          complexd(0.0, 0.5 * hbar) * std::log(u) - energy_offset * t;
  return from_abc(out, hbar);
}

int excitation_or_throw(const Term& t) {
  if (t.n_field < 0 || t.n_field > kFockCap)
    throw std::invalid_argument("Fock label outside supported ladder");
  return term_excitation(t);
}

std::tuple<int, int, int, int> discrete_key(const Term& t) {
  return {static_cast<int>(t.s1), static_cast<int>(t.s2), t.n_field,
          (t.gp ? 2 : 0) + static_cast<int>(t.sp)};
}

bool packet_less(const GaussianState& a, const GaussianState& b) {
  return std::tie(a.x0, a.p0, a.var_x, a.cov_xp, a.phase) <
         std::tie(b.x0, b.p0, b.var_x, b.cov_xp, b.phase);
}

bool term_less(const Term& a, const Term& b) {
  const auto ka = discrete_key(a);
  const auto kb = discrete_key(b);
  if (ka != kb) return ka < kb;
  if (packet_less(a.g1, b.g1)) return true;
  if (packet_less(b.g1, a.g1)) return false;
  if (packet_less(a.g2, b.g2)) return true;
  if (packet_less(b.g2, a.g2)) return false;
  if (a.gp && b.gp) {
    if (packet_less(*a.gp, *b.gp)) return true;
    if (packet_less(*b.gp, *a.gp)) return false;
  }
  return false;
}

bool term_mergeable(const Term& a, const Term& b) {
  if (discrete_key(a) != discrete_key(b)) return false;
  if (!gaussians_close(a.g1, b.g1, kMergeTol)) return false;
  if (!gaussians_close(a.g2, b.g2, kMergeTol)) return false;
  if (a.gp && b.gp && !gaussians_close(*a.gp, *b.gp, kMergeTol)) return false;
  return true;
}

}  // namespace

PhysicalParams make_params(double mass, double epsilon, double k, double hbar) {
  if (!(mass > 0.0) || !(epsilon > 0.0) || !(k > 0.0) || !(hbar > 0.0))
    throw std::invalid_argument("physical parameters must be strictly positive");
  PhysicalParams p;
  p.mass = mass;
  p.epsilon = epsilon;
  p.k = k;
  p.hbar = hbar;
  p.lambda = 2.0 * kPi / k;
  p.a0 = hbar * k * epsilon / mass;
  return p;
}

PhysicalParams reference_params() {
  return make_params(1e-26, 1e5, 2.0 * kPi / 1e-5);
}

PhysicalParams dimensionless_params(const PhysicalParams& si) {
  const double k = std::sqrt(si.hbar * si.k * si.k / (si.mass * si.epsilon));
  return make_params(1.0, 1.0, k, 1.0);
}

void validate_qubit(const QubitState& q) {
  if (!(q.theta >= 0.0 && q.theta <= kPi) || !std::isfinite(q.phi) ||
      q.phi < 0.0 || q.phi > kPi)
    throw std::invalid_argument("qubit angles must satisfy theta,phi in [0, pi]");
}

complexd qubit_amp_e(const QubitState& q) { return {std::cos(q.theta / 2.0), 0.0}; }

complexd qubit_amp_g(const QubitState& q) {
  return std::polar(std::sin(q.theta / 2.0), q.phi);
}

double wrap_phase(double phase) { return std::remainder(phase, 2.0 * kPi); }

GaussianState minimum_uncertainty_packet(double x0, double p0, double sigma_x,
                                         double hbar) {
  if (!(sigma_x > 0.0)) throw std::invalid_argument("sigma_x must be positive");
  GaussianState g;
  g.x0 = x0;
  g.p0 = p0;
  g.var_x = sigma_x * sigma_x;
  g.var_p = (hbar / (2.0 * sigma_x)) * (hbar / (2.0 * sigma_x));
  g.cov_xp = 0.0;
  g.phase = 0.0;
  return g;
}

GaussianState make_pure_gaussian(double x0, double p0, double var_x, double cov_xp,
                                 double phase, double hbar) {
  if (!(var_x > 0.0)) throw std::invalid_argument("var_x must be positive");
  GaussianState g;
  g.x0 = x0;
  g.p0 = p0;
  g.var_x = var_x;
  g.cov_xp = cov_xp;
  g.var_p = (hbar * hbar / 4.0 + cov_xp * cov_xp) / var_x;
  g.phase = wrap_phase(phase);
  return g;
}

complexd evaluate(const GaussianState& g, double x, double hbar) {
  const complexd a = a_param(g, hbar);
  const double alpha = a.real();
  const double dx = x - g.x0;
  const complexd expo = -a * dx * dx + complexd(0.0, g.p0 * dx / hbar + g.phase);
  return std::pow(2.0 * alpha / kPi, 0.25) * std::exp(expo);
}

complexd gaussian_overlap(const GaussianState& a, const GaussianState& b,
                          double hbar) {
  const complexd a1 = std::conj(a_param(a, hbar));
  const complexd a2 = a_param(b, hbar);
  const complexd i(0.0, 1.0);
  const complexd A = a1 + a2;
  const complexd B =
      2.0 * a1 * a.x0 + 2.0 * a2 * b.x0 + i * (b.p0 - a.p0) / hbar;
  const complexd C = -a1 * a.x0 * a.x0 - a2 * b.x0 * b.x0 +
                     i * (a.p0 * a.x0 - b.p0 * b.x0) / hbar;
  const double pref = std::pow(4.0 * a1.real() * a2.real(), 0.25);
  return pref / std::sqrt(A) * std::exp(B * B / (4.0 * A) + C) *
         std::exp(i * (b.phase - a.phase));
}

GaussianState free_evolve(const GaussianState& g, double mass, double t,
                          double hbar) {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (t == 0.0) return g;
  return quad_flow_step(g, mass, 0.0, 0.0, t, hbar);
}

GaussianState harmonic_evolve(const GaussianState& g, double mass, double kappa,
                              double energy_offset, double t, double hbar) {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (t == 0.0 && energy_offset == 0.0) return g;
  if (kappa > 0.0) {
    // Bound case: the width factor u(t) winds around the origin, so the
    // evolution is composed from arcs short enough for a continuous phase.
    const double w = std::sqrt(kappa / mass);
    const int nseg = std::max(1, static_cast<int>(std::ceil(std::abs(w * t) / 0.25)));
    GaussianState out = g;
    const double h = t / nseg;
    for (int i = 0; i < nseg; ++i)
      out = quad_flow_step(out, mass, kappa, energy_offset, h, hbar);
    return out;
  }
  return quad_flow_step(g, mass, kappa, energy_offset, t, hbar);
}

GaussianState phase_space_displace(const GaussianState& g, double lam, double mu,
                                   double hbar) {
  GaussianState out = g;
  out.x0 -= mu;
  out.p0 += lam;
  out.phase = wrap_phase(g.phase + lam * g.x0 / hbar - lam * mu / (2.0 * hbar));
  return out;
}

GaussianState with_phase(const GaussianState& g, double delta) {
  GaussianState out = g;
  out.phase = wrap_phase(g.phase + delta);
  return out;
}

GaussianState momentum_representation(const GaussianState& g, double hbar) {
  const complexd a = a_param(g, hbar);
  const complexd at = 1.0 / (4.0 * a * hbar * hbar);
  const double alpha_t = at.real();
  GaussianState out;
  out.x0 = g.p0;
  out.p0 = -g.x0;
  out.var_x = 1.0 / (4.0 * alpha_t);
  out.cov_xp = -hbar * at.imag() / (2.0 * alpha_t);
  out.var_p = (hbar * hbar / 4.0 + out.cov_xp * out.cov_xp) / out.var_x;
  out.phase = wrap_phase(g.phase - g.p0 * g.x0 / hbar - 0.5 * std::arg(a));
  return out;
}

bool gaussians_close(const GaussianState& a, const GaussianState& b, double tol) {
  const double sx = std::sqrt(std::max(a.var_x, b.var_x));
  const double sp = std::sqrt(std::max(a.var_p, b.var_p));
  if (std::abs(a.x0 - b.x0) > tol * sx * 1e3) return false;
  if (std::abs(a.p0 - b.p0) > tol * sp * 1e3) return false;
  if (std::abs(a.var_x - b.var_x) > tol * std::max(a.var_x, b.var_x)) return false;
  if (std::abs(a.var_p - b.var_p) > tol * std::max(a.var_p, b.var_p)) return false;
  if (std::abs(a.cov_xp - b.cov_xp) > tol * std::max({std::abs(a.cov_xp), std::abs(b.cov_xp), sx * sp}))
    return false;
  if (std::abs(wrap_phase(a.phase - b.phase)) > tol * 1e3) return false;
  return true;
}

int term_excitation(const Term& t) {
  int n = t.n_field;
  if (t.s1 == InternalLabel::e) ++n;
  if (t.s2 == InternalLabel::e) ++n;
  if (t.gp && t.sp == InternalLabel::e) ++n;
  return n;
}

complexd term_basis_overlap(const Term& a, const Term& b, double hbar) {
  if (a.s1 != b.s1 || a.s2 != b.s2 || a.n_field != b.n_field) return {0.0, 0.0};
  if (static_cast<bool>(a.gp) != static_cast<bool>(b.gp))
    throw std::invalid_argument("terms disagree on the presence of a probe register");
  if (a.gp && a.sp != b.sp) return {0.0, 0.0};
  complexd ov = gaussian_overlap(a.g1, b.g1, hbar) * gaussian_overlap(a.g2, b.g2, hbar);
  if (a.gp) ov *= gaussian_overlap(*a.gp, *b.gp, hbar);
  return ov;
}

complexd state_inner(const CompositeState& a, const CompositeState& b) {
  complexd acc(0.0, 0.0);
  for (const Term& ta : a.terms)
    for (const Term& tb : b.terms)
      acc += std::conj(ta.amp) * tb.amp * term_basis_overlap(ta, tb, a.hbar);
  return acc;
}

double state_norm(const CompositeState& s) {
  const double n2 = state_inner(s, s).real();
  return std::sqrt(std::max(0.0, n2));
}

double norm_distance(const CompositeState& a, const CompositeState& b) {
  const double d2 = state_inner(a, a).real() + state_inner(b, b).real() -
                    2.0 * state_inner(a, b).real();
  return std::sqrt(std::max(0.0, d2));
}

CompositeState merged(const CompositeState& s) {
  CompositeState out;
  out.hbar = s.hbar;
  std::vector<Term> sorted = s.terms;
  std::sort(sorted.begin(), sorted.end(), term_less);
  for (const Term& t : sorted) {
    (void)excitation_or_throw(t);
    bool coalesced = false;
    for (Term& kept : out.terms) {
      if (term_mergeable(kept, t)) {
        kept.amp += t.amp;
        coalesced = true;
        break;
      }
    }
    if (!coalesced) out.terms.push_back(t);
  }
  out.terms.erase(std::remove_if(out.terms.begin(), out.terms.end(),
                                 [](const Term& t) { return std::abs(t.amp) < kDropAmp; }),
                  out.terms.end());
  return out;
}

CompositeState normalized(const CompositeState& s) {
  const double n = state_norm(s);
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a null state");
  CompositeState out = s;
  for (Term& t : out.terms) t.amp /= n;
  return out;
}

void validate_state(const CompositeState& s, double tol_norm) {
  if (s.terms.empty()) throw std::invalid_argument("state has no terms");
  std::set<int> counts;
  for (const Term& t : s.terms) counts.insert(excitation_or_throw(t));
  if (counts.size() > 2)
    throw std::invalid_argument("state mixes more than two excitation sectors");
  const double n = state_norm(s);
  if (std::abs(n - 1.0) > tol_norm)
    throw std::invalid_argument("state norm deviates from unity");
}

}  // namespace osg
