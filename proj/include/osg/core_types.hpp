#pragma once

// Core value types for the cavity-QED teleportation simulator: physical
// parameter sets, internal qubit states, Gaussian translational wavepackets
// (with exact closed-form evolution under constant, linear and quadratic
// potentials), and multi-register composite states expanded over products of
// internal labels, a Fock label and per-atom Gaussian packets.

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

namespace osg {

using complexd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kHbar = 1.054571817e-34;  // J s
inline constexpr int kFockCap = 2;                // highest cavity Fock label

// ---------------------------------------------------------------------------
// Physical parameters
// ---------------------------------------------------------------------------

struct PhysicalParams {
  double mass;     // atomic mass [kg]
  double epsilon;  // atom-field coupling rate [1/s]
  double k;        // cavity-mode wavenumber [1/m]
  double hbar;     // action scale [J s]
  double lambda;   // derived: mode wavelength 2*pi/k [m]
  double a0;       // derived: single-excitation acceleration hbar*k*epsilon/mass [m/s^2]
};

// Builds a validated parameter set; throws std::invalid_argument when any of
// mass, epsilon, k or hbar is not strictly positive.
PhysicalParams make_params(double mass, double epsilon, double k, double hbar = kHbar);

// Reference configuration used throughout the tests and demos:
// mass 1e-26 kg, coupling 1e5 1/s, wavelength 1e-5 m.
PhysicalParams reference_params();

// Natural-unit twin of a given SI parameter set: hbar = mass = epsilon = 1 and
// the wavenumber chosen so that the dimensionless group hbar*k^2/(mass*epsilon)
// is preserved. Times are then measured in units of 1/epsilon and lengths in
// units where the packet-geometry group k*sigma_x carries over unchanged.
PhysicalParams dimensionless_params(const PhysicalParams& si);

// ---------------------------------------------------------------------------
// Internal qubit
// ---------------------------------------------------------------------------

// Bloch angles restricted to theta in [0, pi], phi in [0, pi]; the encoded
// state is cos(theta/2)|e> + e^{i phi} sin(theta/2)|g>.
struct QubitState {
  double theta;
  double phi;
};

void validate_qubit(const QubitState& q);  // throws std::invalid_argument
complexd qubit_amp_e(const QubitState& q);
complexd qubit_amp_g(const QubitState& q);

// ---------------------------------------------------------------------------
// Gaussian wavepackets
// ---------------------------------------------------------------------------

// A pure Gaussian wavepacket
//   psi(x) = (2 alpha / pi)^{1/4} e^{i phase}
//            exp[ -(alpha + i beta)(x - x0)^2 + i p0 (x - x0)/hbar ]
// stored through its moments: alpha = 1/(4 var_x), beta = -cov_xp/(2 hbar var_x).
// var_p is kept redundantly and satisfies var_x*var_p - cov_xp^2 = hbar^2/4
// exactly for every state produced by this module (pure-state saturation of
// the Robertson-Schroedinger bound); var_x*var_p >= hbar^2/4 always, with
// equality iff cov_xp = 0 (minimum-uncertainty packets). `phase` is a global
// phase in radians, wrapped to (-pi, pi].
struct GaussianState {
  double x0;      // mean position [m]
  double p0;      // mean momentum [kg m/s]
  double var_x;   // position variance [m^2]
  double var_p;   // momentum variance [(kg m/s)^2]
  double cov_xp;  // symmetrized covariance <{x,p}>/2 - <x><p> [J s]
  double phase;   // global phase [rad]
};

// Minimum-uncertainty packet: var_x = sigma_x^2, var_p = (hbar/(2 sigma_x))^2,
// cov_xp = 0, phase = 0. Throws std::invalid_argument for sigma_x <= 0.
GaussianState minimum_uncertainty_packet(double x0, double p0, double sigma_x,
                                         double hbar = kHbar);

// General pure Gaussian with var_p derived from the saturation identity.
GaussianState make_pure_gaussian(double x0, double p0, double var_x, double cov_xp,
                                 double phase, double hbar = kHbar);

double wrap_phase(double phase);  // IEEE remainder into (-pi, pi]

// Pointwise value of the wavefunction.
complexd evaluate(const GaussianState& g, double x, double hbar = kHbar);

// Exact inner product <a|b> of two pure Gaussians (phases included).
// |result| <= 1 and gaussian_overlap(a,b) == conj(gaussian_overlap(b,a)).
complexd gaussian_overlap(const GaussianState& a, const GaussianState& b,
                          double hbar = kHbar);

// Exact evolution under H = p^2/(2m): spreading of widths, drifting centroid,
// and the exact quantum phase (Gouy-like factor included). t may be negative.
GaussianState free_evolve(const GaussianState& g, double mass, double t,
                          double hbar = kHbar);

// Exact evolution under H = p^2/(2m) + (kappa/2) x^2 + energy_offset for any
// sign of kappa (kappa > 0 bound/oscillatory, kappa < 0 inverted/hyperbolic,
// kappa = 0 free). The global phase is tracked continuously across focusing
// points of the bound case.
GaussianState harmonic_evolve(const GaussianState& g, double mass, double kappa,
                              double energy_offset, double t, double hbar = kHbar);

// Exact action of exp[(i/hbar)(lam*x + mu*p)]: shifts x0 by -mu, p0 by +lam,
// and advances the global phase by lam*x0/hbar - lam*mu/(2 hbar).
GaussianState phase_space_displace(const GaussianState& g, double lam, double mu,
                                   double hbar = kHbar);

// Adds delta to the global phase (wrapped).
GaussianState with_phase(const GaussianState& g, double delta);

// The same state expressed in the momentum representation, reusing the struct
// with the role swap (x0,p0) -> (p0,-x0); widths and phase transform exactly so
// that evaluate(momentum_representation(g), p) is the Fourier transform
// (2 pi hbar)^{-1/2} Integral psi(x) e^{-i p x / hbar} dx.
GaussianState momentum_representation(const GaussianState& g, double hbar = kHbar);

// Field-wise closeness test used for term coalescing: centroids are compared
// relative to the packet widths, variances/covariance relatively, and the
// phase modulo 2*pi.
bool gaussians_close(const GaussianState& a, const GaussianState& b,
                     double tol = 1e-12);

// ---------------------------------------------------------------------------
// Discrete labels
// ---------------------------------------------------------------------------

enum class InternalLabel { g, e };
enum class Region { nodal, antinodal };
enum class PathLabel { plus, minus };

// A deflection branch: field excitation index n (0..kFockCap) and branch sign
// eta in {+1,-1}; eta = +1 is the branch deflected toward negative x in the
// nodal configuration.
struct BranchIndex {
  int n;
  int eta;
};

// ---------------------------------------------------------------------------
// Composite states
// ---------------------------------------------------------------------------

// One product term  amp * |s1>|s2>|n_field> (x) g1 (x) g2 [ (x) |sp> gp ],
// where s1/s2 are the internal labels of atoms 1 and 2, n_field the cavity
// Fock label, g1/g2 the translational packets of the two atoms, and the
// optional probe register (sp, gp) appears only after a probe transit.
struct Term {
  complexd amp;
  InternalLabel s1;
  InternalLabel s2;
  int n_field;
  GaussianState g1;
  GaussianState g2;
  InternalLabel sp = InternalLabel::g;
  std::optional<GaussianState> gp;
};

struct CompositeState {
  std::vector<Term> terms;
  double hbar = kHbar;
};

// Number of excitation quanta in one term: e-labels count 1 each (probe
// included when present), plus the Fock label.
int term_excitation(const Term& t);

// Overlap of the non-amplitude factors of two terms: product of Kronecker
// deltas on discrete labels and Gaussian overlaps on the registers.
complexd term_basis_overlap(const Term& a, const Term& b, double hbar);

// Gram-matrix inner product <a|b> = sum_jk conj(amp_j) amp_k <basis_j|basis_k>.
complexd state_inner(const CompositeState& a, const CompositeState& b);

// sqrt(<s|s>); terms with coinciding labels and packets contribute coherently.
double state_norm(const CompositeState& s);

// || a - b ||, insensitive to term ordering or splitting.
double norm_distance(const CompositeState& a, const CompositeState& b);

// Canonical form: terms sorted by discrete labels then packet moments, terms
// whose labels coincide and whose packets agree within the coalescing
// tolerance merged by amplitude addition, and negligible amplitudes dropped.
CompositeState merged(const CompositeState& s);

// Rescales amplitudes so that state_norm == 1; throws on a zero-norm state.
CompositeState normalized(const CompositeState& s);

// Checks the representation contract: Fock labels within [0, kFockCap], unit
// norm within tol_norm, and every term carrying one of at most two distinct
// excitation counts (each term's count is conserved exactly by the dynamics).
void validate_state(const CompositeState& s, double tol_norm = 1e-10);

}  // namespace osg
