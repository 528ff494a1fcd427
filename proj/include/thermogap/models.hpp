#pragma once

#include "thermogap/classical.hpp"
#include "thermogap/optimize.hpp"
#include "thermogap/quantum.hpp"
#include "thermogap/spectral.hpp"

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace thermogap {

/// Collective spin model H = -h_z S_z - (J_x S_x^2 + J_y S_y^2) / 2s in the
/// symmetric subspace, with the rescaled temperature beta = beta_tilde / s and
/// dissipation cost pinned to Gamma s(s+1).
struct LMGParams {
  double s = 0.5;
  double h_z = 1.0;
  double j_x = 1.0;
  double j_y = 0.0;
  double beta_tilde = 0.0;
  double big_gamma = 1.0;

  void validate() const {
    const double two_s = 2.0 * s;
    if (s <= 0 || std::abs(two_s - std::round(two_s)) > 1e-12)
      throw std::invalid_argument("LMGParams: 2s must be a positive integer");
    if (beta_tilde < 0)
      throw std::invalid_argument("LMGParams: beta_tilde must be >= 0");
    if (big_gamma <= 0)
      throw std::invalid_argument("LMGParams: Gamma must be positive");
  }

  double beta() const { return beta_tilde / s; }
  double cost_target() const { return big_gamma * s * (s + 1); }
  Eigen::Index dim() const {
    return static_cast<Eigen::Index>(std::lround(2 * s)) + 1;
  }
};

inline Matrix lmg_hamiltonian(const LMGParams& p) {
  p.validate();
  auto alg = spin_operators(p.s);
  return -p.h_z * alg.Sz -
         (p.j_x * alg.Sx * alg.Sx + p.j_y * alg.Sy * alg.Sy) / (2 * p.s);
}

inline JumpSet lmg_jumps(const LMGParams& p) {
  auto alg = spin_operators(p.s);
  return {{alg.Sx, alg.Sy, alg.Sz}};
}

/// Full assembly for the collective spin model, rescaled onto the cost target.
inline LindbladAssembly lmg_assembly(const LMGParams& p,
                                     const KineticMatrix& kinetic) {
  p.validate();
  GibbsState g(lmg_hamiltonian(p), p.beta());
  LindbladAssembly out = assemble(g, lmg_jumps(p), kinetic);
  const double c = cost_super(out.lindbladian);
  if (c <= 0)
    throw std::runtime_error("lmg_assembly: vanishing dissipation cost");
  const double f = p.cost_target() / c;
  out.lindbladian *= f;
  out.parent *= f;
  out.coherent *= f;
  out.diagnostics.parent_hermiticity *= f;
  out.diagnostics.steady_state_residual *= f;
  out.diagnostics.tfd_residual *= f;
  return out;
}

/// Fast gap evaluations for kinetic-coefficient optimization. The parent
/// Hamiltonian is linear in gamma, so the six independent pair contributions
/// (Hermitian jumps: only the real symmetric part of gamma enters) are
/// precomputed once in the energy basis and recombined per candidate. The
/// cost is linear in gamma as well, so the constraint is met by exact
/// rescaling of the resulting gap.
class LMGGapEngine {
 public:
  explicit LMGGapEngine(const LMGParams& p, Eigen::Index dense_cutoff = 145)
      : params_(p), dense_cutoff_(dense_cutoff) {
    p.validate();
    GibbsState g(lmg_hamiltonian(p), p.beta());
    d_ = g.dim();
    const Matrix& u = g.basis();
    const RealVector& es = g.shifted_energies();
    auto jumps = lmg_jumps(p);
    std::vector<Matrix> ops_e(6);
    for (int l = 0; l < 3; ++l) {
      ops_e[l] = u.adjoint() * jumps.ops[l] * u;
      ops_e[l + 3] = ops_e[l].adjoint();
    }
    auto term = [&](int a, int b) {
      return detail::parent_term_energy_basis(es, g.beta(), ops_e[a], ops_e[b]);
    };
    for (int l = 0; l < 3; ++l)
      for (int n = l; n < 3; ++n) {
        Matrix b;
        if (l == n) {
          b = term(l, l) + term(l + 3, l + 3);
        } else {
          b = term(l, n) + term(n, l) + term(n + 3, l + 3) + term(l + 3, n + 3);
        }
        pairs_.emplace_back(l, n);
        traces_.push_back(b.trace().real());
        basis_.push_back(std::move(b));
      }
    RealVector w = g.power_diagonal(0.5);
    tfd_ = Vector::Zero(d_ * d_);
    for (Eigen::Index i = 0; i < d_; ++i) tfd_(i * d_ + i) = w(i);
    tfd_ /= tfd_.norm();
  }

  Eigen::Index dim() const { return d_; }

  /// Gap at cost Gamma s(s+1) for a 3x3 Hermitian PSD gamma.
  double gap(const Matrix& gamma) const {
    if (gamma.rows() != 3 || gamma.cols() != 3)
      throw std::invalid_argument("LMGGapEngine: gamma must be 3x3");
    Matrix hp = Matrix::Zero(d_ * d_, d_ * d_);
    double cost = 0;
    for (size_t k = 0; k < basis_.size(); ++k) {
      const auto [l, n] = pairs_[k];
      const double w = std::real(gamma(l, n));
      if (w == 0.0) continue;
      hp += w * basis_[k];
      cost += w * traces_[k];
    }
    cost /= static_cast<double>(d_ * d_);
    if (cost <= 1e-12) return 0.0;
    double raw;
    if (d_ * d_ <= dense_cutoff_) {
      auto eig = hermitian_spectrum(hp);
      raw = eig.values(1);
    } else {
      // deflate the exact zero mode and take the smallest remaining
      // eigenvalue; warm-start from the previous ground vector, which barely
      // moves between neighboring optimizer steps
      thread_local std::unordered_map<const LMGGapEngine*, Vector> warm;
      Vector& w = warm[this];
      auto apply = [&hp](const Vector& x) -> Vector { return hp * x; };
      auto ritz =
          lanczos_smallest(apply, d_ * d_, 1, {tfd_}, 800, lanczos_tol_,
                           w.size() == d_ * d_ ? &w : nullptr, 12345, &w);
      raw = ritz.front();
    }
    return raw * params_.cost_target() / cost;
  }

  /// Ritz-change convergence tolerance of the sparse path.
  void set_lanczos_tol(double tol) { lanczos_tol_ = tol; }

  double canonical_gap() const { return gap(Matrix::Identity(3, 3)); }

 private:
  LMGParams params_;
  Eigen::Index dense_cutoff_;
  double lanczos_tol_ = 1e-10;
  Eigen::Index d_ = 0;
  std::vector<Matrix> basis_;
  std::vector<double> traces_;
  std::vector<std::pair<int, int>> pairs_;
  Vector tfd_;
};

struct LMGOptimizationReport {
  double canonical_gap = 0;
  double optimized_gap = 0;
  double ratio = 0;
  Matrix gamma_opt;  // trace-normalized to 3
  std::vector<double> restart_gaps;
};

inline LMGOptimizationReport lmg_optimize(const LMGParams& p, int restarts = 8,
                                          int budget = 300,
                                          uint64_t seed = 7) {
  LMGGapEngine engine(p);
  OptimizationProblem prob;
  prob.parametrization = Parametrization::kCholeskyFactor;
  prob.gap_of_gamma = [&engine](const Matrix& g) { return engine.gap(g); };
  prob.m = 3;
  prob.real_factor = true;  // imaginary directions of gamma are exactly flat
  prob.restarts = restarts;
  prob.budget = budget;
  prob.seed = seed;
  auto res = optimize(prob);
  LMGOptimizationReport rep;
  rep.canonical_gap = engine.canonical_gap();
  rep.optimized_gap = res.best_gap;
  rep.ratio = rep.optimized_gap / rep.canonical_gap;
  rep.gamma_opt = res.best_gamma;
  rep.restart_gaps = res.trace;
  return rep;
}

/// Tabular sweep output: one row per grid point, NaN-filled with an error
/// message when a point fails, so a sweep never aborts midway.
struct SweepTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_errors;  // parallel to rows; empty when ok

  void add_row(std::vector<double> row, std::string error = {}) {
    rows.push_back(std::move(row));
    row_errors.push_back(std::move(error));
  }

  void add_failed(std::vector<double> partial, const std::string& error) {
    partial.resize(columns.size(), std::numeric_limits<double>::quiet_NaN());
    rows.push_back(std::move(partial));
    row_errors.push_back(error);
  }
};

/// Full-space gap of the kinetic Ising chain through its symmetry sectors.
/// Returns the smallest nonzero eigenvalue of H^pa; the unique zero mode sits
/// in the (flip +1, k=0) sector.
inline SpectralReport ki_full_gap(const ClassicalIsingChain& chain,
                                  const KineticParamsKI& kp,
                                  Eigen::Index dense_sector_cap = 1200) {
  ClassicalGenerator gen = build_ki1d(chain, kp, false);
  std::vector<double> evals;
  for (int parity : {1, -1}) {
    for (int k = 0; k < chain.n_sites; ++k) {
      SectorBlock blk = sector_decompose(gen, chain.n_sites, {parity, k});
      const Eigen::Index m = blk.block.rows();
      if (m == 0) continue;
      if (m <= dense_sector_cap) {
        auto eig = hermitian_spectrum(Matrix(blk.block));
        for (Eigen::Index i = 0; i < eig.values.size(); ++i)
          evals.push_back(eig.values(i));
      } else {
        auto rep = gap_sparse(blk.block, 0, 4);
        for (double e : rep.eigenvalues) evals.push_back(e);
      }
    }
  }
  std::sort(evals.begin(), evals.end());
  return detail::classify_gap(std::move(evals), 1, SolveMethod::kDense);
}

/// Few smallest eigenvalues of one symmetry sector; dense below the cap,
/// Lanczos above it.
inline std::vector<double> ki_sector_smallest(const ClassicalGenerator& gen,
                                              int n, const SectorLabel& label,
                                              int n_eigs,
                                              Eigen::Index dense_cap = 1200) {
  SectorBlock blk = sector_decompose(gen, n, label);
  const Eigen::Index m = blk.block.rows();
  if (m <= dense_cap) {
    auto eig = hermitian_spectrum(Matrix(blk.block));
    std::vector<double> out;
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(n_eigs, m); ++i)
      out.push_back(eig.values(i));
    return out;
  }
  auto apply = [&blk](const Vector& x) -> Vector { return blk.block * x; };
  return lanczos_smallest(apply, m, n_eigs, {}, 600, 1e-10);
}

/// Gap convergence in s at fixed rescaled temperature, optionally with the
/// optimized gap per point.
inline SweepTable fig2_sweep(const std::vector<double>& s_grid,
                             double beta_tilde, double h_z, double j_x,
                             double j_y, double big_gamma = 1.0,
                             bool with_optimization = false, uint64_t seed = 7,
                             int restarts = 8, int budget = 300) {
  SweepTable t;
  t.columns = {"s", "gap_canonical", "cost"};
  if (with_optimization) {
    t.columns.push_back("gap_optimized");
    t.columns.push_back("ratio");
  }
  for (double s : s_grid) {
    LMGParams p;
    p.s = s;
    p.beta_tilde = beta_tilde;
    p.h_z = h_z;
    p.j_x = j_x;
    p.j_y = j_y;
    p.big_gamma = big_gamma;
    try {
      if (with_optimization) {
        auto rep = lmg_optimize(p, restarts, budget, seed);
        t.add_row({s, rep.canonical_gap, p.cost_target(), rep.optimized_gap,
                   rep.ratio});
      } else {
        LMGGapEngine engine(p);
        t.add_row({s, engine.canonical_gap(), p.cost_target()});
      }
    } catch (const std::exception& e) {
      t.add_failed({s}, e.what());
    }
  }
  return t;
}

/// Liouvillian gap and analytic bounds along a delta grid at fixed epsilon.
inline SweepTable fig3_sweep(int n_sites, double epsilon,
                             const std::vector<double>& delta_grid,
                             double big_gamma = 1.0) {
  SweepTable t;
  t.columns = {"delta",   "gap_ed", "delta12", "delta3",
               "delta4",  "full_min"};
  for (double delta : delta_grid) {
    try {
      ClassicalIsingChain chain =
          ClassicalIsingChain::from_epsilon(n_sites, epsilon);
      KineticParamsKI kp{big_gamma, delta};
      auto bounds = analytic_bounds(chain, kp, n_sites);
      auto rep = ki_full_gap(chain, kp);
      t.add_row({delta, rep.gap, bounds.delta12, bounds.delta3, bounds.delta4,
                 bounds.full_min});
    } catch (const std::exception& e) {
      t.add_failed({delta}, e.what());
    }
  }
  return t;
}

/// Closed-form full-space bound surface over (epsilon, y = 1 - delta).
inline SweepTable fig3b_surface(const std::vector<double>& eps_grid,
                                const std::vector<double>& y_grid, int n_sites,
                                double big_gamma = 1.0) {
  SweepTable t;
  t.columns = {"epsilon", "y", "full_min"};
  for (double eps : eps_grid) {
    for (double y : y_grid) {
      try {
        ClassicalIsingChain chain =
            ClassicalIsingChain::from_epsilon(n_sites, eps);
        KineticParamsKI kp{big_gamma, 1.0 - y};
        auto bounds = analytic_bounds(chain, kp, n_sites);
        t.add_row({eps, y, bounds.full_min});
      } catch (const std::exception& e) {
        t.add_failed({eps, y}, e.what());
      }
    }
  }
  return t;
}

/// Ground-sector gap vs system size near the zero-temperature point, with the
/// Psi_5 variational quotient and its large-N closed form.
inline SweepTable fig4_sweep(const std::vector<double>& n_grid, double delta,
                             double epsilon = 0.0, double big_gamma = 1.0) {
  SweepTable t;
  t.columns = {"n", "gap_ground_sector", "psi5_quotient", "bound"};
  for (double n_real : n_grid) {
    const int n = static_cast<int>(std::lround(n_real));
    try {
      if (std::abs(n_real - n) > 1e-9)
        throw std::invalid_argument("fig4_sweep: N must be an integer");
      ClassicalIsingChain chain = ClassicalIsingChain::from_epsilon(n, epsilon);
      KineticParamsKI kp{big_gamma, delta};
      ClassicalGenerator gen = build_ki1d(chain, kp, false);
      auto evals = ki_sector_smallest(gen, n, {1, 0}, 3);
      const double scale = std::max(std::abs(evals.back()), 1e-300);
      double gap = std::numeric_limits<double>::quiet_NaN();
      for (double e : evals)
        if (e > 1e-8 * scale) {
          gap = e;
          break;
        }
      RealVector psi5 = variational_state(chain, 5);
      const double quotient =
          psi5.dot(RealVector(gen.parent * psi5));
      const double bound = 4 * big_gamma * (1 + delta) / (n - 1);
      t.add_row({n_real, gap, quotient, bound});
    } catch (const std::exception& e) {
      t.add_failed({n_real}, e.what());
    }
  }
  return t;
}

}  // namespace thermogap
