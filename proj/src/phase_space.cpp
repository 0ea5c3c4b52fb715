#include "osg/phase_space.hpp"

#include <cmath>
#include <stdexcept>

namespace osg {

namespace {

void validate_branch_args(int n, int eta, double tau) {
  if (n < 0 || n > kFockCap)
    throw std::invalid_argument("branch index n outside supported ladder");
  if (eta != 1 && eta != -1)
    throw std::invalid_argument("branch sign must be +1 or -1");
  if (!(tau >= 0.0)) throw std::invalid_argument("transit duration must be >= 0");
}

}  // namespace

double antinodal_frequency(const PhysicalParams& pp, int n,
                           AntinodalFrequencyConvention conv) {
  if (n < 0 || n > kFockCap)
    throw std::invalid_argument("branch index n outside supported ladder");
  const double scale =
      conv == AntinodalFrequencyConvention::eigenvalue_scaled ? std::sqrt(n + 1.0) : 1.0;
  return std::sqrt(pp.hbar * pp.epsilon * scale * pp.k * pp.k / pp.mass);
}

GaussianState antinodal_matched_packet(const PhysicalParams& pp, double x0, double p0,
                                       AntinodalFrequencyConvention conv, int n) {
  const double w = antinodal_frequency(pp, n, conv);
  return minimum_uncertainty_packet(x0, p0, std::sqrt(pp.hbar / (2.0 * pp.mass * w)),
                                    pp.hbar);
}

GaussianState propagate_nodal(const GaussianState& g, const PhysicalParams& pp,
                              int n, int eta, double tau) {
  validate_branch_args(n, eta, tau);
  const double c = eta * pp.hbar * pp.epsilon * pp.k * std::sqrt(n + 1.0);
  const double lam = -c * tau;
  const double mu = lam * tau / (2.0 * pp.mass);
  GaussianState out = phase_space_displace(g, lam, mu, pp.hbar);
  out = free_evolve(out, pp.mass, tau, pp.hbar);
  const double cubic = pp.hbar * pp.epsilon * pp.epsilon * pp.k * pp.k * (n + 1.0) *
                       tau * tau * tau / (12.0 * pp.mass);
  return with_phase(out, cubic);
}

GaussianState propagate_antinodal(const GaussianState& g, const PhysicalParams& pp,
                                  int n, int eta, double tau) {
  validate_branch_args(n, eta, tau);
  const double s = std::sqrt(n + 1.0);
  const double kappa = -eta * pp.hbar * pp.epsilon * s * pp.k * pp.k;
  const double offset = eta * pp.hbar * pp.epsilon * s;
  return harmonic_evolve(g, pp.mass, kappa, offset, tau, pp.hbar);
}

GaussianState propagate_branch(const GaussianState& g, const PhysicalParams& pp,
                               Region region, int n, int eta, double tau) {
  return region == Region::nodal ? propagate_nodal(g, pp, n, eta, tau)
                                 : propagate_antinodal(g, pp, n, eta, tau);
}

GaussianState branch_kick(const GaussianState& g, const PhysicalParams& pp,
                          Region region, int n, int eta, double entry_time,
                          double duration) {
  if (!(entry_time >= 0.0))
    throw std::invalid_argument("transit entry time must be >= 0");
  GaussianState out = free_evolve(g, pp.mass, entry_time, pp.hbar);
  out = propagate_branch(out, pp, region, n, eta, duration);
  return free_evolve(out, pp.mass, -(entry_time + duration), pp.hbar);
}

complexd branch_overlap_nodal(const PhysicalParams& pp, const GaussianState& g0,
                              int n, double tau) {
  validate_branch_args(n, 1, tau);
  const double c = pp.hbar * pp.epsilon * pp.k * std::sqrt(n + 1.0);
  const double lam = 2.0 * c * tau;
  const double mu = c * tau * tau / pp.mass;
  const double phase = (lam * g0.x0 + mu * g0.p0) / pp.hbar;
  const double damp = (lam * lam * g0.var_x + mu * mu * g0.var_p +
                       2.0 * lam * mu * g0.cov_xp) /
                      (2.0 * pp.hbar * pp.hbar);
  return std::exp(complexd(-damp, phase));
}

complexd branch_overlap_antinodal_n1(const PhysicalParams& pp, const GaussianState& g0,
                                     double tau, AntinodalFrequencyConvention conv) {
  if (!(tau >= 0.0)) throw std::invalid_argument("transit duration must be >= 0");
  const double w = antinodal_frequency(pp, 1, conv);
  const double matched = pp.hbar / (2.0 * pp.mass * w);
  if (std::abs(g0.var_x - matched) > 1e-9 * matched ||
      std::abs(g0.cov_xp) > 1e-9 * pp.hbar)
    throw std::invalid_argument(
        "closed-form antinodal overlap requires the matched packet width");
  const double theta = w * tau;
  const complexd z(g0.x0 * std::sqrt(pp.mass * w / (2.0 * pp.hbar)),
                   g0.p0 / std::sqrt(2.0 * pp.mass * pp.hbar * w));
  const complexd zb = std::conj(z);
  const complexd emi = std::exp(complexd(0.0, -theta));
  const double ch = std::cosh(theta);
  const double th = std::tanh(theta);
  const complexd i(0.0, 1.0);
  return std::exp(i * (2.0 * pp.epsilon * std::sqrt(2.0) * tau - theta / 2.0)) /
         std::sqrt(ch) *
         std::exp(-0.5 * i * th * (zb * zb + z * z * emi * emi) +
                  std::norm(z) * (emi / ch - 1.0));
}

double distinguishability(complexd overlap) {
  const double m = std::abs(overlap);
  if (m > 1.0 + 1e-12)
    throw std::invalid_argument("overlap magnitude exceeds unity");
  return std::sqrt(std::max(0.0, 1.0 - m * m));
}

std::vector<BranchTrajectory> path_trace(const PhysicalParams& pp,
                                         const GaussianState& g0, int n, int eta,
                                         const std::vector<double>& tau_grid) {
  std::vector<BranchTrajectory> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    const GaussianState g = propagate_nodal(g0, pp, n, eta, tau);
    BranchTrajectory row;
    row.tau = tau;
    row.x_mean = g.x0;
    row.p_mean = g.p0;
    row.sigma_x = std::sqrt(g.var_x);
    row.sigma_p = std::sqrt(g.var_p);
    row.omega_phase = 2.0 * pp.epsilon * pp.k * std::sqrt(n + 1.0) *
                      (g0.x0 + g0.p0 * tau / (2.0 * pp.mass)) * tau;
    out.push_back(row);
  }
  return out;
}

}  // namespace osg
