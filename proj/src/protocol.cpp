#include "osg/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace osg {

double RngStream::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::gauss() {
  if (has_cache_) {
    has_cache_ = false;
    return cache_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * kPi * u2;
  cache_ = r * std::sin(a);
  has_cache_ = true;
  return r * std::cos(a);
}

const char* row_name(TableRow row) {
  switch (row) {
    case TableRow::n2_fail: return "n2_fail";
    case TableRow::n1_e2_fail: return "n1_e2_fail";
    case TableRow::n1_g2_pp: return "n1_g2_pp";
    case TableRow::n1_g2_pm: return "n1_g2_pm";
    case TableRow::n1_g2_mp: return "n1_g2_mp";
    case TableRow::n1_g2_mm: return "n1_g2_mm";
    case TableRow::n0_g2_fail: return "n0_g2_fail";
    case TableRow::n0_e2_pp: return "n0_e2_pp";
    case TableRow::n0_e2_pm: return "n0_e2_pm";
    case TableRow::n0_e2_mp: return "n0_e2_mp";
    case TableRow::n0_e2_mm: return "n0_e2_mm";
  }
  return "unknown";
}

double row_probability(TableRow row, double theta) {
  const double c = std::cos(theta);
  switch (row) {
    case TableRow::n2_fail: return (1.0 + c) / 8.0;
    case TableRow::n1_e2_fail: return (1.0 + c) / 8.0;
    case TableRow::n0_g2_fail: return (1.0 - c) / 4.0;
    default: return 1.0 / 16.0;  // the eight post-selected path rows
  }
}

Classification classify(int photon_n, InternalLabel atom2,
                        std::optional<PathLabel> path1,
                        std::optional<PathLabel> path2) {
  if (photon_n < 0 || photon_n > kFockCap)
    throw std::invalid_argument("photon count outside the supported range");
  if (photon_n >= 2) return {Status::failure, TableRow::n2_fail};
  if (photon_n == 1 && atom2 == InternalLabel::e)
    return {Status::failure, TableRow::n1_e2_fail};
  if (photon_n == 0 && atom2 == InternalLabel::g)
    return {Status::failure, TableRow::n0_g2_fail};

  if (!path1.has_value() || !path2.has_value())
    throw std::invalid_argument("post-selected rows need both path labels");
  const bool p1 = *path1 == PathLabel::plus;
  const bool p2 = *path2 == PathLabel::plus;
  const Status status =
      p1 == p2 ? Status::success_direct : Status::success_after_rotation;
  TableRow row;
  if (photon_n == 1) {
    row = p1 ? (p2 ? TableRow::n1_g2_pp : TableRow::n1_g2_pm)
             : (p2 ? TableRow::n1_g2_mp : TableRow::n1_g2_mm);
  } else {
    row = p1 ? (p2 ? TableRow::n0_e2_pp : TableRow::n0_e2_pm)
             : (p2 ? TableRow::n0_e2_mp : TableRow::n0_e2_mm);
  }
  return {status, row};
}

CompositeState evolve_protocol_state(const ProtocolConfig& config) {
  CompositeState state = build_initial_state(config.carrier, config.g1,
                                             config.g2, config.params.hbar);
  state = apply_atom_cavity(state, 1, config.region, config.params,
                            config.tau1, 0.0);
  state = apply_atom_cavity(state, 2, config.region, config.params,
                            config.tau2, atom2_entry_time(config));
  state = normalized(state);
  validate_state(state);
  return state;
}

namespace {

using Mat = std::vector<std::vector<complexd>>;

enum class Reg { atom1, atom2, probe };

const GaussianState& reg_gauss(const Term& t, Reg r) {
  switch (r) {
    case Reg::atom1: return t.g1;
    case Reg::atom2: return t.g2;
    default: break;
  }
  if (!t.gp.has_value())
    throw std::invalid_argument("term has no probe register");
  return *t.gp;
}

void set_reg_gauss(Term& t, Reg r, const GaussianState& g) {
  switch (r) {
    case Reg::atom1: t.g1 = g; return;
    case Reg::atom2: t.g2 = g; return;
    default: t.gp = g; return;
  }
}

struct RegisterClusters {
  std::vector<GaussianState> reps;  // entry-frame packets, one per branch
  std::vector<int> of;              // term index -> cluster index
  Mat R;                            // R[a][b] = <rest_a | rest_b>
  std::vector<double> mass;         // Re R[a][a]
};

RegisterClusters analyze_register(const CompositeState& s, Reg r) {
  RegisterClusters rc;
  rc.of.assign(s.terms.size(), -1);
  for (size_t i = 0; i < s.terms.size(); ++i) {
    const GaussianState& g = reg_gauss(s.terms[i], r);
    for (size_t c = 0; c < rc.reps.size(); ++c) {
      if (gaussians_close(rc.reps[c], g)) {
        rc.of[i] = static_cast<int>(c);
        break;
      }
    }
    if (rc.of[i] < 0) {
      rc.reps.push_back(g);
      rc.of[i] = static_cast<int>(rc.reps.size()) - 1;
    }
  }

  // Overlaps of everything but the measured register: substitute one common
  // packet for it so its factor in the term overlap is exactly one.
  const GaussianState unit = minimum_uncertainty_packet(0.0, 0.0, 1.0, s.hbar);
  std::vector<Term> stripped = s.terms;
  for (Term& t : stripped) set_reg_gauss(t, r, unit);

  const size_t k = rc.reps.size();
  rc.R.assign(k, std::vector<complexd>(k, complexd(0.0, 0.0)));
  for (size_t i = 0; i < stripped.size(); ++i) {
    for (size_t j = 0; j < stripped.size(); ++j) {
      const size_t a = static_cast<size_t>(rc.of[i]);
      const size_t b = static_cast<size_t>(rc.of[j]);
      rc.R[a][b] += std::conj(s.terms[i].amp) * s.terms[j].amp *
                    term_basis_overlap(stripped[i], stripped[j], s.hbar);
    }
  }
  rc.mass.resize(k);
  for (size_t a = 0; a < k; ++a)
    rc.mass[a] = std::max(0.0, rc.R[a][a].real());
  return rc;
}

// Draws one sample from the marginal distribution of the measured register:
// density(x) = sum_ab R[a][b] conj(phi_a(x)) phi_b(x), bounded above by
// 2 * sum_a R[a][a] |phi_a(x)|^2 because R is positive semidefinite.
double sample_register_marginal(const std::vector<GaussianState>& gs,
                                const Mat& R, double hbar, RngStream& rng) {
  const size_t k = gs.size();
  std::vector<double> mass(k);
  double total = 0.0;
  for (size_t a = 0; a < k; ++a) {
    mass[a] = std::max(R[a][a].real(), 0.0);
    total += mass[a];
  }
  if (total <= 0.0) throw std::runtime_error("register carries no weight");

  for (int iter = 0; iter < 100000; ++iter) {
    double u = rng.uniform() * total;
    size_t pick = k - 1;
    for (size_t a = 0; a < k; ++a) {
      if (u < mass[a]) {
        pick = a;
        break;
      }
      u -= mass[a];
    }
    const double x = gs[pick].x0 + std::sqrt(gs[pick].var_x) * rng.gauss();

    std::vector<complexd> vals(k);
    for (size_t a = 0; a < k; ++a) vals[a] = evaluate(gs[a], x, hbar);
    complexd dens(0.0, 0.0);
    double envelope = 0.0;
    for (size_t a = 0; a < k; ++a) {
      envelope += mass[a] * std::norm(vals[a]);
      for (size_t b = 0; b < k; ++b)
        dens += R[a][b] * std::conj(vals[a]) * vals[b];
    }
    if (envelope <= 0.0) continue;
    const double accept = dens.real() / (2.0 * envelope);
    if (rng.uniform() < std::clamp(accept, 0.0, 1.0)) return x;
  }
  throw std::runtime_error("marginal sampling did not converge");
}

using M2 = std::array<std::array<complexd, 2>, 2>;

M2 sqrt_psd_2x2(const M2& g) {
  const complexd det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
  const double s = std::sqrt(std::max(0.0, det.real()));
  const double tr = (g[0][0] + g[1][1]).real();
  const double denom = std::sqrt(std::max(tr + 2.0 * s, 1e-300));
  M2 out = g;
  out[0][0] += s;
  out[1][1] += s;
  for (auto& rowv : out)
    for (auto& v : rowv) v /= denom;
  return out;
}

M2 inv_2x2(const M2& a) {
  const complexd det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  if (std::abs(det) < 1e-300)
    throw std::runtime_error("branch pair is numerically degenerate");
  return {{{a[1][1] / det, -a[0][1] / det},
           {-a[1][0] / det, a[0][0] / det}}};
}

// Everything needed to read out one atom's branch pair: the exact two-outcome
// measurement data plus the single-sample classification data.
struct StagePrep {
  std::array<GaussianState, 2> det_pos;  // detection-time packets, position
  std::array<GaussianState, 2> coord;    // packets in the sampled coordinate
  Mat R;
  std::array<double, 2> p_cluster{};     // exact outcome probabilities
  std::array<CompositeState, 2> post;    // post states per cluster
  std::array<PathLabel, 2> label_of{};   // cluster -> path label
  double mid = 0.0;                      // classification midpoint
  int hi_coord = 0;                      // cluster on the >= mid side
  bool unreliable = false;
  ClassifierMode mode = ClassifierMode::ideal;
};

StagePrep prepare_path_stage(const CompositeState& state, int atom,
                             ClassifierMode mode, const PhysicalParams& pp,
                             double detect_time) {
  if (atom != 1 && atom != 2)
    throw std::invalid_argument("atom index must be 1 or 2");
  const Reg reg = atom == 1 ? Reg::atom1 : Reg::atom2;
  const RegisterClusters rc = analyze_register(state, reg);
  if (rc.reps.size() != 2)
    throw std::invalid_argument(
        "register does not split into exactly two branches");

  StagePrep sp;
  sp.mode = mode;
  sp.R = rc.R;
  for (int c = 0; c < 2; ++c) {
    const size_t cu = static_cast<size_t>(c);
    sp.det_pos[cu] = free_evolve(rc.reps[cu], pp.mass, detect_time, state.hbar);
    sp.coord[cu] = mode == ClassifierMode::sampled_momentum
                       ? momentum_representation(sp.det_pos[cu], state.hbar)
                       : sp.det_pos[cu];
  }

  // "plus" is the branch seen at larger mean position (momentum breaks ties).
  const double dx = sp.det_pos[0].x0 - sp.det_pos[1].x0;
  const double dp = sp.det_pos[0].p0 - sp.det_pos[1].p0;
  int hi_pos;
  if (dx != 0.0)
    hi_pos = dx > 0.0 ? 0 : 1;
  else if (dp != 0.0)
    hi_pos = dp > 0.0 ? 0 : 1;
  else
    hi_pos = sp.det_pos[0].var_x <= sp.det_pos[1].var_x ? 0 : 1;
  sp.label_of[static_cast<size_t>(hi_pos)] = PathLabel::plus;
  sp.label_of[static_cast<size_t>(1 - hi_pos)] = PathLabel::minus;

  const double widths = std::sqrt(sp.det_pos[0].var_x) +
                        std::sqrt(sp.det_pos[1].var_x);
  sp.unreliable = std::abs(dx) < 1e-3 * widths;

  sp.mid = 0.5 * (sp.coord[0].x0 + sp.coord[1].x0);
  sp.hi_coord = sp.coord[0].x0 >= sp.coord[1].x0 ? 0 : 1;

  if (mode == ClassifierMode::ideal) {
    // Orthogonalize the branch pair and build the exact post states: outcome
    // h keeps a two-packet register superposition and mixes a little of the
    // other branch's partner state in, vanishing as the branches separate.
    M2 g{};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        g[static_cast<size_t>(a)][static_cast<size_t>(b)] = gaussian_overlap(
            rc.reps[static_cast<size_t>(a)], rc.reps[static_cast<size_t>(b)],
            state.hbar);
    const M2 sq = sqrt_psd_2x2(g);
    const M2 invsq = inv_2x2(sq);

    double total = 0.0;
    for (int h = 0; h < 2; ++h) {
      const size_t hu = static_cast<size_t>(h);
      CompositeState post;
      post.hbar = state.hbar;
      for (size_t i = 0; i < state.terms.size(); ++i) {
        const size_t ci = static_cast<size_t>(rc.of[i]);
        for (int b = 0; b < 2; ++b) {
          const size_t bu = static_cast<size_t>(b);
          Term t = state.terms[i];
          t.amp *= invsq[bu][hu] * sq[hu][ci];
          set_reg_gauss(t, reg, rc.reps[bu]);
          post.terms.push_back(t);
        }
      }
      post = merged(post);
      const double w = state_norm(post);
      sp.p_cluster[hu] = w * w;
      total += w * w;
      sp.post[hu] = normalized(post);
    }
    if (total <= 0.0) throw std::runtime_error("measurement lost all weight");
    for (double& p : sp.p_cluster) p /= total;
  } else {
    double total = rc.mass[0] + rc.mass[1];
    if (total <= 0.0) throw std::runtime_error("measurement lost all weight");
    for (int h = 0; h < 2; ++h) {
      const size_t hu = static_cast<size_t>(h);
      CompositeState post;
      post.hbar = state.hbar;
      for (size_t i = 0; i < state.terms.size(); ++i)
        if (rc.of[i] == h) post.terms.push_back(state.terms[i]);
      sp.post[hu] = normalized(merged(post));
      sp.p_cluster[hu] = rc.mass[hu] / total;
    }
  }
  return sp;
}

int draw_stage_cluster(const StagePrep& sp, double hbar, RngStream& rng) {
  if (sp.mode == ClassifierMode::ideal)
    return rng.uniform() < sp.p_cluster[0] ? 0 : 1;
  const std::vector<GaussianState> gs(sp.coord.begin(), sp.coord.end());
  const double x = sample_register_marginal(gs, sp.R, hbar, rng);
  return x >= sp.mid ? sp.hi_coord : 1 - sp.hi_coord;
}

}  // namespace

std::array<double, kFockCap + 1> photon_probabilities(
    const CompositeState& state) {
  std::array<double, kFockCap + 1> pn{};
  double total = 0.0;
  for (int n = 0; n <= kFockCap; ++n) {
    CompositeState sector;
    sector.hbar = state.hbar;
    for (const Term& t : state.terms)
      if (t.n_field == n) sector.terms.push_back(t);
    const double w = state_norm(sector);
    pn[static_cast<size_t>(n)] = w * w;
    total += w * w;
  }
  if (total > 0.0)
    for (double& p : pn) p /= total;
  return pn;
}

std::pair<int, CompositeState> measure_photon_number(const CompositeState& s,
                                                     RngStream& rng) {
  const std::array<double, kFockCap + 1> pn = photon_probabilities(s);
  double u = rng.uniform();
  int outcome = -1;
  for (int n = 0; n <= kFockCap; ++n) {
    if (pn[static_cast<size_t>(n)] > 0.0) outcome = n;
    if (u < pn[static_cast<size_t>(n)]) {
      outcome = n;
      break;
    }
    u -= pn[static_cast<size_t>(n)];
  }
  if (outcome < 0) throw std::runtime_error("state carries no field sector");
  CompositeState kept;
  kept.hbar = s.hbar;
  for (const Term& t : s.terms)
    if (t.n_field == outcome) kept.terms.push_back(t);
  return {outcome, normalized(kept)};
}

std::pair<InternalLabel, CompositeState> measure_atom2(const CompositeState& s,
                                                       RngStream& rng) {
  CompositeState part_g, part_e;
  part_g.hbar = part_e.hbar = s.hbar;
  for (const Term& t : s.terms)
    (t.s2 == InternalLabel::g ? part_g : part_e).terms.push_back(t);
  const double wg = state_norm(part_g), we = state_norm(part_e);
  const double total = wg * wg + we * we;
  if (total <= 0.0) throw std::runtime_error("state carries no weight");
  const bool got_g = rng.uniform() < wg * wg / total;
  if (got_g && wg > 0.0) return {InternalLabel::g, normalized(part_g)};
  if (we > 0.0) return {InternalLabel::e, normalized(part_e)};
  return {InternalLabel::g, normalized(part_g)};
}

PathResult measure_path(const CompositeState& state, int atom,
                        ClassifierMode mode, const PhysicalParams& pp,
                        double detect_time, RngStream& rng) {
  const StagePrep sp = prepare_path_stage(state, atom, mode, pp, detect_time);
  const int c = draw_stage_cluster(sp, state.hbar, rng);
  PathResult out;
  out.label = sp.label_of[static_cast<size_t>(c)];
  out.state = sp.post[static_cast<size_t>(c)];
  out.unreliable = sp.unreliable;
  return out;
}

double path_misclassification_rate(const CompositeState& state, int atom,
                                   const PhysicalParams& pp,
                                   double detect_time) {
  const StagePrep sp = prepare_path_stage(
      state, atom, ClassifierMode::sampled_position, pp, detect_time);
  const double total = sp.R[0][0].real() + sp.R[1][1].real();
  double rate = 0.0;
  for (int c = 0; c < 2; ++c) {
    const size_t cu = static_cast<size_t>(c);
    const double z = std::abs(sp.det_pos[cu].x0 - sp.mid) /
                     std::sqrt(sp.det_pos[cu].var_x);
    rate += (sp.R[cu][cu].real() / total) * 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  return rate;
}

CompositeState apply_rotation_correction(const CompositeState& state) {
  CompositeState out = state;
  for (Term& t : out.terms)
    if (t.s1 == InternalLabel::g) t.amp = -t.amp;
  return out;
}

double fidelity_to_target(const CompositeState& state,
                          const QubitState& target) {
  CompositeState proj = state;
  const complexd te = qubit_amp_e(target);
  const complexd tg = qubit_amp_g(target);
  for (Term& t : proj.terms) {
    t.amp *= std::conj(t.s1 == InternalLabel::e ? te : tg);
    t.s1 = InternalLabel::g;
  }
  const double n0 = state_norm(state);
  if (n0 <= 0.0) return 0.0;
  const double np = state_norm(merged(proj));
  return (np * np) / (n0 * n0);
}

double qubit_fidelity(complexd amp_e, complexd amp_g,
                      const QubitState& target) {
  const double w = std::norm(amp_e) + std::norm(amp_g);
  if (w <= 0.0) return 0.0;
  const complexd ov = std::conj(qubit_amp_e(target)) * amp_e +
                      std::conj(qubit_amp_g(target)) * amp_g;
  return std::norm(ov) / w;
}

namespace {

constexpr int path_index(PathLabel l) { return l == PathLabel::plus ? 0 : 1; }

struct RowTree {
  bool built = false;
  StagePrep st1;
  std::array<StagePrep, 2> st2;            // per first-stage cluster
  std::array<std::array<double, 2>, 2> fid{};  // [cluster1][cluster2]
};

struct TrialEngine {
  ProtocolConfig cfg;
  std::array<double, kFockCap + 1> pn{};
  std::array<double, kFockCap + 1> p_g_given_n{};
  std::array<CompositeState, kFockCap + 1> sector_g;
  std::array<CompositeState, kFockCap + 1> sector_e;
  std::array<RowTree, kFockCap + 1> tree_g;  // trees for (n, s2=g) rows
  std::array<RowTree, kFockCap + 1> tree_e;

  explicit TrialEngine(const ProtocolConfig& config) : cfg(config) {
    const CompositeState state = evolve_protocol_state(cfg);
    pn = photon_probabilities(state);
    const double t_det = detection_time(cfg);

    for (int n = 0; n <= kFockCap; ++n) {
      const size_t nu = static_cast<size_t>(n);
      if (pn[nu] <= 1e-300) continue;
      CompositeState part_g, part_e;
      part_g.hbar = part_e.hbar = state.hbar;
      for (const Term& t : state.terms) {
        if (t.n_field != n) continue;
        (t.s2 == InternalLabel::g ? part_g : part_e).terms.push_back(t);
      }
      const double wg = state_norm(part_g), we = state_norm(part_e);
      const double tot = wg * wg + we * we;
      p_g_given_n[nu] = tot > 0.0 ? wg * wg / tot : 0.0;
      if (wg > 0.0) sector_g[nu] = normalized(part_g);
      if (we > 0.0) sector_e[nu] = normalized(part_e);

      // The post-selected rows are (one photon, ground) and (empty, excited);
      // only they are followed by the two path readouts.
      if (n == 1 && wg > 0.0) build_tree(tree_g[nu], sector_g[nu], n,
                                         InternalLabel::g, t_det);
      if (n == 0 && we > 0.0) build_tree(tree_e[nu], sector_e[nu], n,
                                         InternalLabel::e, t_det);
    }
  }

  void build_tree(RowTree& tree, const CompositeState& row_state, int n,
                  InternalLabel s2, double t_det) {
    tree.st1 = prepare_path_stage(row_state, 1, cfg.classifier, cfg.params,
                                  t_det);
    for (int c1 = 0; c1 < 2; ++c1) {
      const size_t c1u = static_cast<size_t>(c1);
      tree.st2[c1u] = prepare_path_stage(tree.st1.post[c1u], 2, cfg.classifier,
                                         cfg.params, t_det);
      for (int c2 = 0; c2 < 2; ++c2) {
        const size_t c2u = static_cast<size_t>(c2);
        const Classification cls =
            classify(n, s2, tree.st1.label_of[c1u],
                     tree.st2[c1u].label_of[c2u]);
        const CompositeState& post = tree.st2[c1u].post[c2u];
        tree.fid[c1u][c2u] = fidelity_to_target(
            cls.status == Status::success_after_rotation
                ? apply_rotation_correction(post)
                : post,
            cfg.carrier);
      }
    }
    tree.built = true;
  }

  OutcomeRecord trial(std::uint64_t seed) const {
    RngStream rng(seed);
    OutcomeRecord rec;
    rec.seed = seed;

    double u = rng.uniform();
    int n = -1;
    for (int i = 0; i <= kFockCap; ++i) {
      const size_t iu = static_cast<size_t>(i);
      if (pn[iu] > 0.0) n = i;
      if (u < pn[iu]) {
        n = i;
        break;
      }
      u -= pn[iu];
    }
    if (n < 0) throw std::runtime_error("no field sector to draw");
    rec.photon_n = n;
    const size_t nu = static_cast<size_t>(n);

    rec.atom2 = rng.uniform() < p_g_given_n[nu] ? InternalLabel::g
                                                : InternalLabel::e;

    const RowTree& tree =
        rec.atom2 == InternalLabel::g ? tree_g[nu] : tree_e[nu];
    if (!tree.built) {
      const Classification cls = classify(n, rec.atom2, {}, {});
      rec.result = cls.status;
      rec.row = cls.row;
      return rec;
    }

    const int c1 = draw_stage_cluster(tree.st1, cfg.params.hbar, rng);
    const size_t c1u = static_cast<size_t>(c1);
    const int c2 = draw_stage_cluster(tree.st2[c1u], cfg.params.hbar, rng);
    const size_t c2u = static_cast<size_t>(c2);
    rec.path1 = tree.st1.label_of[c1u];
    rec.path2 = tree.st2[c1u].label_of[c2u];
    rec.unreliable = tree.st1.unreliable || tree.st2[c1u].unreliable;

    const Classification cls = classify(n, rec.atom2, rec.path1, rec.path2);
    rec.result = cls.status;
    rec.row = cls.row;
    rec.fidelity = tree.fid[c1u][c2u];
    return rec;
  }
};

}  // namespace

OutcomeRecord run_trial(const ProtocolConfig& config, std::uint64_t seed) {
  const TrialEngine engine(config);
  return engine.trial(seed);
}

TrialStats run_monte_carlo(const ProtocolConfig& config, std::uint64_t n_trials,
                           std::uint64_t base_seed) {
  const TrialEngine engine(config);
  TrialStats stats;
  stats.n_trials = n_trials;
  double fid_sum = 0.0;
  double fid_min = 2.0;
  std::uint64_t fid_count = 0;
  for (std::uint64_t i = 0; i < n_trials; ++i) {
    const OutcomeRecord rec = engine.trial(base_seed + i);
    stats.row_counts[static_cast<size_t>(rec.row)] += 1;
    switch (rec.result) {
      case Status::success_direct: stats.n_success_direct += 1; break;
      case Status::success_after_rotation: stats.n_success_rotated += 1; break;
      case Status::failure: stats.n_failure += 1; break;
    }
    if (rec.unreliable) stats.n_unreliable += 1;
    if (rec.fidelity.has_value()) {
      fid_sum += *rec.fidelity;
      fid_min = std::min(fid_min, *rec.fidelity);
      fid_count += 1;
    }
  }
  if (n_trials > 0)
    stats.success_rate =
        static_cast<double>(stats.n_success_direct + stats.n_success_rotated) /
        static_cast<double>(n_trials);
  if (fid_count > 0) {
    stats.fidelity_mean = fid_sum / static_cast<double>(fid_count);
    stats.fidelity_min = fid_min;
  }
  return stats;
}

CompositeState conditioned_state(const CompositeState& state, int photon_n,
                                 InternalLabel atom2) {
  CompositeState kept;
  kept.hbar = state.hbar;
  for (const Term& t : state.terms)
    if (t.n_field == photon_n && t.s2 == atom2) kept.terms.push_back(t);
  if (kept.terms.empty() || state_norm(kept) <= 0.0)
    throw std::invalid_argument("requested sector carries no weight");
  return normalized(kept);
}

ProbeReadout::ProbeReadout(const CompositeState& state,
                           const PhysicalParams& pp, double detect_time,
                           double confidence)
    : state_(state) {
  for (const Term& t : state_.terms)
    if (!t.gp.has_value())
      throw std::invalid_argument("state has no probe register");

  const RegisterClusters rc = analyze_register(state_, Reg::probe);
  const size_t k = rc.reps.size();
  gram_ = rc.R;

  // Each branch belongs to one origin band: the photon number the probe met.
  std::vector<int> cluster_origin(k, -1);
  for (size_t i = 0; i < state_.terms.size(); ++i) {
    const Term& t = state_.terms[i];
    const int origin = t.n_field + (t.sp == InternalLabel::e ? 1 : 0);
    int& slot = cluster_origin[static_cast<size_t>(rc.of[i])];
    if (slot < 0) slot = origin;
    else if (slot != origin)
      throw std::invalid_argument("probe packets do not resolve the field");
  }

  dets_.resize(k);
  for (size_t c = 0; c < k; ++c)
    dets_[c] = free_evolve(rc.reps[c], pp.mass, detect_time, state_.hbar);

  // Band centers: mass-weighted |position| per origin; widths for the
  // reliability estimate.
  std::map<int, double> band_mass, band_center, band_width;
  for (size_t c = 0; c < k; ++c) {
    const int o = cluster_origin[c];
    band_mass[o] += rc.mass[c];
    band_center[o] += rc.mass[c] * std::abs(dets_[c].x0);
    band_width[o] = std::max(band_width[o], std::sqrt(dets_[c].var_x));
  }
  for (auto& [o, cen] : band_center) {
    if (band_mass[o] > 0.0) cen /= band_mass[o];
    bands_.emplace_back(o, cen);
  }

  double prev_center = 0.0, prev_width = 0.0;
  bool first = true;
  for (const auto& [o, cen] : bands_) {
    const double w = band_width[o];
    if (!first) {
      const double gap = cen - prev_center;
      const double sigma = std::max(w, prev_width);
      const double rate = 0.5 * std::erfc(gap / (2.0 * sigma * std::sqrt(2.0)));
      if (rate > confidence) unreliable_ = true;
    }
    prev_center = cen;
    prev_width = w;
    first = false;
  }
}

ProbeResult ProbeReadout::sample(RngStream& rng) const {
  const double x = sample_register_marginal(dets_, gram_, state_.hbar, rng);
  int origin = bands_.front().first;
  double best = 1e300;
  for (const auto& [o, cen] : bands_) {
    const double d = std::abs(std::abs(x) - cen);
    if (d < best) {
      best = d;
      origin = o;
    }
  }

  ProbeResult out;
  out.origin_n = origin;
  out.unreliable = unreliable_;
  CompositeState kept;
  kept.hbar = state_.hbar;
  for (const Term& t : state_.terms) {
    const int o = t.n_field + (t.sp == InternalLabel::e ? 1 : 0);
    if (o == origin) kept.terms.push_back(t);
  }
  out.state = normalized(kept);
  return out;
}

ProbeResult probe_measure_photon(const CompositeState& state,
                                 const PhysicalParams& pp, double detect_time,
                                 double confidence, RngStream& rng) {
  const ProbeReadout readout(state, pp, detect_time, confidence);
  return readout.sample(rng);
}

}  // namespace osg
