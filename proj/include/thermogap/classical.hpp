#pragma once

#include "thermogap/core.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace thermogap {

using SparseReal = Eigen::SparseMatrix<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

/// 1D periodic Ising chain H = -J sum_i s_i s_{i+1}, s_i = +/-1.
/// Temperature enters through eta = tanh(beta J); beta may be +inf (eta = 1).
struct ClassicalIsingChain {
  int n_sites = 0;
  double coupling = 1.0;   // J
  double beta = 0.0;       // inverse temperature, may be +inf
  double eta = 0.0;        // tanh(beta J)
  double gamma_eq = 0.0;   // tanh(2 beta J)
  double epsilon = 1.0;    // sqrt(1 - gamma_eq^2)

  static ClassicalIsingChain from_beta(int n, double j, double beta) {
    ClassicalIsingChain c;
    c.n_sites = n;
    c.coupling = j;
    c.beta = beta;
    c.eta = std::tanh(beta * j);
    c.gamma_eq = std::tanh(2 * beta * j);
    c.epsilon = std::sqrt(std::max(0.0, 1 - c.gamma_eq * c.gamma_eq));
    c.check();
    return c;
  }

  static ClassicalIsingChain from_eta(int n, double eta) {
    ClassicalIsingChain c;
    c.n_sites = n;
    c.coupling = 1.0;
    c.eta = eta;
    c.beta = eta < 1.0 ? std::atanh(eta)
                       : std::numeric_limits<double>::infinity();
    c.gamma_eq = 2 * eta / (1 + eta * eta);
    c.epsilon = std::sqrt(std::max(0.0, 1 - c.gamma_eq * c.gamma_eq));
    c.check();
    return c;
  }

  static ClassicalIsingChain from_epsilon(int n, double eps) {
    if (eps < 0 || eps > 1)
      throw std::invalid_argument("ClassicalIsingChain: epsilon must be in [0,1]");
    const double g = std::sqrt(std::max(0.0, 1 - eps * eps));
    // invert gamma = 2 eta / (1 + eta^2) on [0,1]
    const double eta = g > 0 ? (1 - eps) / g : 0.0;
    return from_eta(n, eta);
  }

  void check() const {
    if (n_sites < 3)
      throw std::invalid_argument("ClassicalIsingChain: need at least 3 sites");
    if (n_sites > 26)
      throw std::invalid_argument("ClassicalIsingChain: site count above cap");
    if (eta < 0 || eta > 1)
      throw std::invalid_argument("ClassicalIsingChain: eta out of [0,1]");
  }

  uint64_t dim() const { return uint64_t{1} << n_sites; }

  /// sigma^z value (+1/-1) of site i in configuration cfg.
  static int spin(uint64_t cfg, int site, int n) {
    const int i = ((site % n) + n) % n;
    return 1 - 2 * static_cast<int>((cfg >> i) & 1u);
  }

  /// H^cl(cfg) in units of J.
  double energy(uint64_t cfg) const {
    double e = 0;
    for (int i = 0; i < n_sites; ++i)
      e -= static_cast<double>(spin(cfg, i, n_sites) *
                               spin(cfg, i + 1, n_sites));
    return coupling * e;
  }

  int broken_bonds(uint64_t cfg) const {
    int b = 0;
    for (int i = 0; i < n_sites; ++i)
      if (spin(cfg, i, n_sites) != spin(cfg, i + 1, n_sites)) ++b;
    return b;
  }
};

/// Kinetic coefficients of the single-flip dynamics.
struct KineticParamsKI {
  double big_gamma = 1.0;  // overall rate
  double delta = 0.0;      // in [-1, 1]

  void validate() const {
    if (big_gamma <= 0)
      throw std::invalid_argument("KineticParamsKI: Gamma must be positive");
    if (std::abs(delta) > 1.0)
      throw std::invalid_argument("KineticParamsKI: |delta| must be <= 1");
  }
};

struct ClassicalGenerator {
  uint64_t dim = 0;
  SparseReal liouvillian;               // dp/dt = L p (columns sum to zero)
  SparseReal parent;                    // H^pa, symmetric PSD
  std::vector<SparseReal> local_terms;  // per-site H_i^pa (may be empty)
};

/// 1D single-flip kinetic Ising generator and parent Hamiltonian, built from
/// the Pauli-string expressions for L_i and H_i^pa.
inline ClassicalGenerator build_ki1d(const ClassicalIsingChain& chain,
                                     const KineticParamsKI& kp,
                                     bool with_local_terms = true) {
  kp.validate();
  const int n = chain.n_sites;
  const uint64_t d = chain.dim();
  const double gam = chain.gamma_eq;
  const double eps = chain.epsilon;
  const double big_g = kp.big_gamma;
  const double delta = kp.delta;

  std::vector<Eigen::Triplet<double>> tl, th;
  std::vector<std::vector<Eigen::Triplet<double>>> tloc;
  if (with_local_terms) tloc.resize(n);
  tl.reserve(2 * n * d);
  th.reserve(2 * n * d);

  for (uint64_t cfg = 0; cfg < d; ++cfg) {
    for (int i = 0; i < n; ++i) {
      const int sl = ClassicalIsingChain::spin(cfg, i - 1, n);
      const int sm = ClassicalIsingChain::spin(cfg, i, n);
      const int sr = ClassicalIsingChain::spin(cfg, i + 1, n);
      const uint64_t flp = cfg ^ (uint64_t{1} << i);
      const double pref = big_g * (1 + delta * sl * sr);
      const double rate = pref * (1 - 0.5 * gam * sm * (sl + sr));
      tl.emplace_back(static_cast<int64_t>(flp), static_cast<int64_t>(cfg), rate);
      tl.emplace_back(static_cast<int64_t>(cfg), static_cast<int64_t>(cfg), -rate);
      // parent term, Hermitian by construction
      const double offd = -pref * (0.5 * (1 + eps) - 0.5 * (1 - eps) * sl * sr);
      th.emplace_back(static_cast<int64_t>(cfg), static_cast<int64_t>(cfg), rate);
      th.emplace_back(static_cast<int64_t>(flp), static_cast<int64_t>(cfg), offd);
      if (with_local_terms) {
        tloc[i].emplace_back(static_cast<int64_t>(cfg), static_cast<int64_t>(cfg),
                             rate);
        tloc[i].emplace_back(static_cast<int64_t>(flp), static_cast<int64_t>(cfg),
                             offd);
      }
    }
  }

  ClassicalGenerator out;
  out.dim = d;
  out.liouvillian.resize(static_cast<int64_t>(d), static_cast<int64_t>(d));
  out.liouvillian.setFromTriplets(tl.begin(), tl.end());
  out.parent.resize(static_cast<int64_t>(d), static_cast<int64_t>(d));
  out.parent.setFromTriplets(th.begin(), th.end());
  if (with_local_terms) {
    out.local_terms.resize(n);
    for (int i = 0; i < n; ++i) {
      out.local_terms[i].resize(static_cast<int64_t>(d), static_cast<int64_t>(d));
      out.local_terms[i].setFromTriplets(tloc[i].begin(), tloc[i].end());
    }
  }
  return out;
}

/// Commuting classical Hamiltonian as a sum of diagonal local terms.
struct ClassicalTerm {
  std::vector<int> sites;
  std::function<double(uint64_t)> energy;  // evaluated on the full configuration
};

struct ClassicalHamiltonian {
  int n_sites = 0;
  std::vector<ClassicalTerm> terms;

  double energy(uint64_t cfg) const {
    double e = 0;
    for (const auto& t : terms) e += t.energy(cfg);
    return e;
  }
};

struct FlipCollection {
  std::vector<int> sites;
};

/// Pair rate gamma~_nu^{ab}; must be symmetric in (from, to).
using PairRate = std::function<double(int nu, uint64_t from, uint64_t to)>;

/// Generic multi-flip builder: L = sum gamma~ (1 - A~^{ba}) e^{-beta/2 H_nu}
/// A~^{ab} e^{+beta/2 H_nu}. Only local terms overlapping the support of nu
/// contribute to the conjugation, which for commuting Hamiltonians equals the
/// full energy difference of the flip.
inline ClassicalGenerator build_multiflip(
    const ClassicalHamiltonian& ham, double beta,
    const std::vector<FlipCollection>& collections, const PairRate& rates,
    bool with_local_terms = false) {
  if (ham.n_sites < 1 || ham.n_sites > 26)
    throw std::invalid_argument("build_multiflip: invalid site count");
  const uint64_t d = uint64_t{1} << ham.n_sites;
  std::vector<double> energy(d);
  for (uint64_t cfg = 0; cfg < d; ++cfg) energy[cfg] = ham.energy(cfg);

  std::vector<uint64_t> masks;
  masks.reserve(collections.size());
  for (const auto& c : collections) {
    if (c.sites.empty())
      throw std::invalid_argument("build_multiflip: empty flip collection");
    uint64_t m = 0;
    for (int s : c.sites) {
      if (s < 0 || s >= ham.n_sites)
        throw std::invalid_argument("build_multiflip: site outside lattice");
      m |= uint64_t{1} << s;
    }
    masks.push_back(m);
  }

  std::vector<Eigen::Triplet<double>> tl, th;
  std::vector<std::vector<Eigen::Triplet<double>>> tloc;
  if (with_local_terms) tloc.resize(masks.size());
  for (uint64_t cfg = 0; cfg < d; ++cfg) {
    for (size_t nu = 0; nu < masks.size(); ++nu) {
      const uint64_t flp = cfg ^ masks[nu];
      const double g_fwd = rates(static_cast<int>(nu), cfg, flp);
      const double g_bwd = rates(static_cast<int>(nu), flp, cfg);
      if (std::abs(g_fwd - g_bwd) >
          1e-12 * std::max(1.0, std::abs(g_fwd) + std::abs(g_bwd)))
        throw std::invalid_argument(
            "build_multiflip: asymmetric pair rates; "
            "infinite-temperature steady state violated");
      if (g_fwd < 0)
        throw std::invalid_argument("build_multiflip: negative pair rate");
      const double de = energy[flp] - energy[cfg];
      const double rate = g_fwd * std::exp(-0.5 * beta * de);
      tl.emplace_back(static_cast<int64_t>(flp), static_cast<int64_t>(cfg), rate);
      tl.emplace_back(static_cast<int64_t>(cfg), static_cast<int64_t>(cfg), -rate);
      // parent: off-diagonal exponentials cancel exactly
      th.emplace_back(static_cast<int64_t>(flp), static_cast<int64_t>(cfg), -g_fwd);
      th.emplace_back(static_cast<int64_t>(cfg), static_cast<int64_t>(cfg), rate);
      if (with_local_terms) {
        tloc[nu].emplace_back(static_cast<int64_t>(flp),
                              static_cast<int64_t>(cfg), -g_fwd);
        tloc[nu].emplace_back(static_cast<int64_t>(cfg),
                              static_cast<int64_t>(cfg), rate);
      }
    }
  }

  ClassicalGenerator out;
  out.dim = d;
  out.liouvillian.resize(static_cast<int64_t>(d), static_cast<int64_t>(d));
  out.liouvillian.setFromTriplets(tl.begin(), tl.end());
  out.parent.resize(static_cast<int64_t>(d), static_cast<int64_t>(d));
  out.parent.setFromTriplets(th.begin(), th.end());
  if (with_local_terms) {
    out.local_terms.resize(masks.size());
    for (size_t nu = 0; nu < masks.size(); ++nu) {
      out.local_terms[nu].resize(static_cast<int64_t>(d),
                                 static_cast<int64_t>(d));
      out.local_terms[nu].setFromTriplets(tloc[nu].begin(), tloc[nu].end());
    }
  }
  return out;
}

/// Unit-norm vector with amplitudes proportional to e^{-beta H^cl / 2},
/// normalized with log-sum-exp. Handles the zero-temperature limit, where only
/// the two aligned configurations survive.
inline RealVector sqrt_equilibrium_vector(const ClassicalIsingChain& chain) {
  const uint64_t d = chain.dim();
  RealVector v(static_cast<int64_t>(d));
  if (std::isinf(chain.beta)) {
    v.setZero();
    v(0) = 1.0;
    v(static_cast<int64_t>(d) - 1) = 1.0;
    return v / v.norm();
  }
  double emin = std::numeric_limits<double>::infinity();
  for (uint64_t cfg = 0; cfg < d; ++cfg)
    emin = std::min(emin, chain.energy(cfg));
  double log_norm_sq = -std::numeric_limits<double>::infinity();
  for (uint64_t cfg = 0; cfg < d; ++cfg) {
    const double lw = -0.5 * chain.beta * (chain.energy(cfg) - emin);
    v(static_cast<int64_t>(cfg)) = lw;
    const double two_lw = 2 * lw;
    log_norm_sq = std::max(log_norm_sq, two_lw) +
                  std::log1p(std::exp(-std::abs(two_lw - log_norm_sq)));
  }
  for (uint64_t cfg = 0; cfg < d; ++cfg)
    v(static_cast<int64_t>(cfg)) =
        std::exp(v(static_cast<int64_t>(cfg)) - 0.5 * log_norm_sq);
  return v;
}

/// Symmetry sector of the flip (Z2) and translation symmetries.
struct SectorLabel {
  int flip_parity = 1;     // +1 or -1, eigenvalue of Sigma^x
  int momentum_index = 0;  // k, translation eigenvalue e^{2 pi i k / N}
};

struct SectorBlock {
  SectorLabel label;
  SparseComplex basis;  // 2^N x m, orthonormal columns
  SparseComplex block;  // m x m Hermitian block of H^pa
};

namespace detail {
inline uint64_t translate_cfg(uint64_t cfg, int n) {
  const uint64_t mask = (uint64_t{1} << n) - 1;
  return ((cfg << 1) | (cfg >> (n - 1))) & mask;
}
}  // namespace detail

/// Orthonormal symmetry-adapted basis of the requested (flip, momentum)
/// sector. Orbit representatives are the smallest bitstring in each orbit.
inline SparseComplex sector_basis(int n, const SectorLabel& label) {
  if (label.momentum_index < 0 || label.momentum_index >= n)
    throw std::invalid_argument("sector_basis: momentum index outside 0..N-1");
  if (label.flip_parity != 1 && label.flip_parity != -1)
    throw std::invalid_argument("sector_basis: flip parity must be +1 or -1");
  const uint64_t d = uint64_t{1} << n;
  const uint64_t full = d - 1;
  const Complex omega =
      std::exp(Complex(0, -2.0 * M_PI * label.momentum_index / n));
  std::vector<bool> seen(d, false);
  std::vector<Eigen::Triplet<Complex>> trips;
  std::vector<Complex> amp(d, Complex(0, 0));
  std::vector<uint64_t> touched;
  int n_cols = 0;
  for (uint64_t rep = 0; rep < d; ++rep) {
    if (seen[rep]) continue;
    touched.clear();
    uint64_t c = rep;
    Complex phase(1, 0);
    for (int j = 0; j < n; ++j) {
      for (uint64_t cfg : {c, c ^ full}) {
        seen[cfg] = true;
        const Complex w =
            phase * (cfg == c ? 1.0 : static_cast<double>(label.flip_parity));
        if (amp[cfg] == Complex(0, 0)) touched.push_back(cfg);
        amp[cfg] += w;
      }
      c = detail::translate_cfg(c, n);
      phase *= omega;
    }
    double norm_sq = 0;
    for (uint64_t cfg : touched) norm_sq += std::norm(amp[cfg]);
    const double norm = std::sqrt(norm_sq);
    if (norm > 1e-8) {
      for (uint64_t cfg : touched)
        trips.emplace_back(static_cast<int64_t>(cfg), n_cols, amp[cfg] / norm);
      ++n_cols;
    }
    for (uint64_t cfg : touched) amp[cfg] = Complex(0, 0);
  }
  SparseComplex basis(static_cast<int64_t>(d), n_cols);
  basis.setFromTriplets(trips.begin(), trips.end());
  return basis;
}

/// Project H^pa onto a symmetry sector.
inline SectorBlock sector_decompose(const ClassicalGenerator& gen, int n,
                                    const SectorLabel& label) {
  SectorBlock out;
  out.label = label;
  out.basis = sector_basis(n, label);
  SparseComplex hc = gen.parent.cast<Complex>();
  SparseComplex hb = hc * out.basis;
  out.block = SparseComplex(out.basis.adjoint()) * hb;
  return out;
}

/// Variational trial states Psi_1..Psi_5 over the full 2^N space.
inline RealVector variational_state(const ClassicalIsingChain& chain,
                                    int which) {
  const int n = chain.n_sites;
  const uint64_t d = chain.dim();
  RealVector sq = sqrt_equilibrium_vector(chain);
  RealVector v = RealVector::Zero(static_cast<int64_t>(d));
  auto spin = [n](uint64_t cfg, int i) {
    return ClassicalIsingChain::spin(cfg, i, n);
  };
  switch (which) {
    case 1:
      for (uint64_t cfg = 0; cfg < d; ++cfg) {
        int s = 0;
        for (int i = 0; i < n; ++i) s += spin(cfg, i);
        v(static_cast<int64_t>(cfg)) = s * sq(static_cast<int64_t>(cfg));
      }
      break;
    case 2:
      for (uint64_t cfg = 0; cfg < d; ++cfg) {
        int s = 0;
        for (int i = 0; i < n; ++i)
          s += spin(cfg, i - 1) * spin(cfg, i) * spin(cfg, i + 1);
        v(static_cast<int64_t>(cfg)) = s * sq(static_cast<int64_t>(cfg));
      }
      break;
    case 3:
      v(0) = 1.0;
      v(static_cast<int64_t>(d) - 1) = -1.0;
      break;
    case 4: {
      if (n % 2 != 0)
        throw std::invalid_argument("variational_state: Psi_4 requires even N");
      for (uint64_t cfg = 0; cfg < d; ++cfg) {
        double s = 0;
        for (int j = 0; j < n; ++j)
          s += (j % 2 == 0 ? 1.0 : -1.0) * spin(cfg, j) * spin(cfg, j + 1);
        v(static_cast<int64_t>(cfg)) = s * sq(static_cast<int64_t>(cfg));
      }
      break;
    }
    case 5: {
      if (chain.epsilon == 0.0) {
        // zero-temperature limit: the projected state collapses onto the
        // uniform superposition of minimal (two-domain-wall) excitations
        for (uint64_t cfg = 0; cfg < d; ++cfg)
          if (chain.broken_bonds(cfg) == 2) v(static_cast<int64_t>(cfg)) = 1.0;
      } else {
        for (uint64_t cfg = 0; cfg < d; ++cfg) {
          int s = 0;
          for (int j = 0; j < n; ++j) s += spin(cfg, j) * spin(cfg, j + 1);
          v(static_cast<int64_t>(cfg)) = s * sq(static_cast<int64_t>(cfg));
        }
        v -= sq.dot(v) * sq;  // orthogonalize against the ground state
      }
      break;
    }
    default:
      throw std::invalid_argument("variational_state: which must be 1..5");
  }
  const double norm = v.norm();
  if (norm < 1e-14)
    throw std::runtime_error("variational_state: trial state vanished");
  return v / norm;
}

struct BoundSet {
  double delta12 = 0;
  double delta3 = 0;
  double delta4 = 0;
  double delta5_approx = 0;
  double full_min = 0;  // min(delta12, delta3, delta4)
};

/// Variational bound from the two-state subspace of Sigma^x=-1, T=1
/// (Gamma = 1 units).
inline double delta12_bound(double eta, double delta) {
  const double e2 = eta * eta;
  const double rad = 1.0 -
                     2 * delta * (1 - eta) * e2 * eta / (1 + eta) +
                     delta * delta * (1 - eta) * (1 - eta) *
                         (1 + e2 - e2 * e2) / ((1 + eta) * (1 + eta));
  return 2.0 / (1 + e2) *
         (2 - eta * (1 - eta) * (1 + delta * eta) -
          (1 + eta) * std::sqrt(rad));
}

/// Closed-form analytic bounds on the Liouvillian gap.
inline BoundSet analytic_bounds(const ClassicalIsingChain& chain,
                                const KineticParamsKI& kp, int n_sites) {
  if (chain.eta >= 1.0)
    throw std::invalid_argument(
        "analytic_bounds: zero-temperature limit; gap closes");
  BoundSet b;
  const double g = kp.big_gamma;
  b.delta12 = g * delta12_bound(chain.eta, kp.delta);
  b.delta3 = n_sites * g * (1 + kp.delta) * (1 - chain.gamma_eq);
  b.delta4 = 4 * g * (1 - kp.delta);
  b.delta5_approx = 4 * g * (1 + kp.delta) / (n_sites - 1);
  b.full_min = std::min({b.delta12, b.delta3, b.delta4});
  return b;
}

/// Closed-form optimum of Delta_12 over delta (Gamma = 1 units). For large eta
/// the optimizing delta falls below -1, outside the physical rate range.
inline std::pair<double, double> optimal_coefficients(double eta) {
  if (eta < 0 || eta >= 1)
    throw std::invalid_argument("optimal_coefficients: eta must be in [0,1)");
  const double e2 = eta * eta;
  const double q = 1 + e2 - e2 * e2;
  const double r = std::sqrt(1 + 2 * e2);
  double delta_opt = 0.0;
  if (eta > 0)
    delta_opt = e2 * (1 + eta) * (eta * r - 1 - e2) / ((1 - eta) * q * r);
  const double gap_opt =
      4 - 2 * eta * (eta + 1) / q - 2 * (1 - eta) * (1 + eta) * (1 + eta) * r / q;
  return {delta_opt, gap_opt};
}

/// Crossing curve delta*(eta) where the slowest mode switches sectors.
inline double transition_delta(double eta) {
  if (eta < 0 || eta > 1)
    throw std::invalid_argument("transition_delta: eta must be in [0,1]");
  const double e2 = eta * eta;
  return (2 * eta * (e2 - eta + 1) + (e2 + 1) * std::sqrt(2 * e2 - 4 * eta + 3)) /
         (2 * e2 * e2 - 4 * e2 * eta + 7 * e2 - 4 * eta + 3);
}

}  // namespace thermogap
