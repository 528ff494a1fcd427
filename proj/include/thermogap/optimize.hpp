#pragma once

#include "thermogap/core.hpp"
#include "thermogap/classical.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <thread>
#include <vector>

namespace thermogap {

/// Derivative-free simplex (Nelder-Mead) minimizer.
struct NelderMeadOptions {
  int max_evals = 400;
  double x_tol = 1e-9;
  double f_tol = 1e-10;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  RealVector x;
  double f = 0;
  int evals = 0;
};

inline NelderMeadResult nelder_mead(
    const std::function<double(const RealVector&)>& f, const RealVector& x0,
    const NelderMeadOptions& opt = {}) {
  const int n = static_cast<int>(x0.size());
  std::vector<RealVector> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  int evals = 0;
  for (int i = 1; i <= n; ++i) pts[i](i - 1) += opt.initial_step;
  for (int i = 0; i <= n; ++i) {
    vals[i] = f(pts[i]);
    ++evals;
  }
  auto order = [&] {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return vals[a] < vals[b]; });
    std::vector<RealVector> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  order();
  while (evals < opt.max_evals) {
    // convergence: simplex diameter and value spread
    double diam = 0;
    for (int i = 1; i <= n; ++i)
      diam = std::max(diam, (pts[i] - pts[0]).norm());
    if (diam < opt.x_tol && vals[n] - vals[0] < opt.f_tol) break;

    RealVector centroid = RealVector::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    RealVector xr = centroid + (centroid - pts[n]);
    double fr = f(xr);
    ++evals;
    if (fr < vals[0]) {
      RealVector xe = centroid + 2.0 * (centroid - pts[n]);
      double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      RealVector xc = centroid + 0.5 * (pts[n] - centroid);
      double fc = f(xc);
      ++evals;
      if (fc < vals[n]) {
        pts[n] = xc;
        vals[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          vals[i] = f(pts[i]);
          ++evals;
        }
      }
    }
    order();
  }
  return {pts[0], vals[0], evals};
}

enum class Parametrization { kCholeskyFactor, kScalarDelta };

/// Gap maximization over kinetic coefficients at fixed total dissipation
/// strength. The evaluation callback receives a candidate gamma (PSD by
/// construction) and must rescale it onto the cost constraint internally;
/// cost is linear in gamma, so the rescaling is exact.
struct OptimizationProblem {
  Parametrization parametrization = Parametrization::kCholeskyFactor;
  // kCholeskyFactor path
  std::function<double(const Matrix& gamma)> gap_of_gamma;
  int m = 0;
  bool real_factor = false;  // restrict B to real entries when the imaginary
                             // part of gamma provably does not enter the gap
  // kScalarDelta path
  std::function<double(double delta)> gap_of_delta;

  int budget = 400;  // max evaluations per restart
  int restarts = 8;
  uint64_t seed = 0;
  double gap_tol = 1e-8;
};

struct OptimizationResult {
  Matrix best_gamma;
  double best_delta = 0;
  double best_gap = 0;
  std::vector<double> trace;  // per-restart best gaps, restart-ordered
};

namespace detail {

inline Matrix gamma_from_factor(const RealVector& x, int m, bool real_factor) {
  Matrix b(m, m);
  if (real_factor) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = x(i * m + j);
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        b(i, j) = Complex(x(2 * (i * m + j)), x(2 * (i * m + j) + 1));
  }
  Matrix g = b.adjoint() * b;
  const double tr = g.trace().real();
  if (tr < 1e-14) return Matrix::Identity(m, m);
  return g * (static_cast<double>(m) / tr);
}

inline int worker_count() {
  if (const char* env = std::getenv("THERMOGAP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace detail

inline OptimizationResult optimize(const OptimizationProblem& problem) {
  OptimizationResult result;
  if (problem.parametrization == Parametrization::kScalarDelta) {
    // one-dimensional search on [-1, 1]: coarse grid then simplex polish
    double best_d = 0, best_g = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i) {
      const double d = -1.0 + 2.0 * i / 200.0;
      const double g = problem.gap_of_delta(d);
      result.trace.push_back(g);
      if (g > best_g) {
        best_g = g;
        best_d = d;
      }
    }
    auto neg = [&](const RealVector& x) {
      const double d = std::clamp(x(0), -1.0, 1.0);
      return -problem.gap_of_delta(d);
    };
    NelderMeadOptions opt;
    opt.max_evals = problem.budget;
    opt.x_tol = 1e-10;
    opt.initial_step = 0.01;
    RealVector x0(1);
    x0(0) = best_d;
    auto nm = nelder_mead(neg, x0, opt);
    result.best_delta = std::clamp(nm.x(0), -1.0, 1.0);
    result.best_gap = -nm.f;
    return result;
  }

  if (!problem.gap_of_gamma || problem.m <= 0)
    throw std::invalid_argument("optimize: missing gamma evaluation callback");
  const int m = problem.m;
  const int dim = problem.real_factor ? m * m : 2 * m * m;

  struct RestartOut {
    RealVector x;
    double gap = -std::numeric_limits<double>::infinity();
  };
  std::vector<RestartOut> outs(problem.restarts);
  auto run_restart = [&](int r) {
    std::mt19937_64 rng(problem.seed * 0x9e3779b97f4a7c15ULL + r + 1);
    std::normal_distribution<double> nd;
    RealVector x0(dim);
    if (r == 0) {
      // first restart starts from the canonical gamma = identity
      x0.setZero();
      for (int i = 0; i < m; ++i)
        x0(problem.real_factor ? i * m + i : 2 * (i * m + i)) = 1.0;
    } else {
      for (int i = 0; i < dim; ++i) x0(i) = nd(rng);
    }
    auto neg = [&](const RealVector& x) {
      return -problem.gap_of_gamma(
          detail::gamma_from_factor(x, m, problem.real_factor));
    };
    NelderMeadOptions opt;
    opt.max_evals = problem.budget;
    opt.f_tol = problem.gap_tol;
    auto nm = nelder_mead(neg, x0, opt);
    outs[r] = {nm.x, -nm.f};
  };

  const int workers =
      std::min(detail::worker_count(), std::max(1, problem.restarts));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int r = next.fetch_add(1); r < problem.restarts;
           r = next.fetch_add(1))
        run_restart(r);
    });
  for (auto& t : pool) t.join();

  int best_r = 0;
  for (int r = 0; r < problem.restarts; ++r) {
    result.trace.push_back(outs[r].gap);
    if (outs[r].gap > outs[best_r].gap) best_r = r;
  }
  Matrix gamma =
      detail::gamma_from_factor(outs[best_r].x, m, problem.real_factor);
  double best_gap = outs[best_r].gap;

  // Tie-break between equal-gap optima: walk toward the canonical identity as
  // far as the gap allows (gap is concave in gamma, so the path is safe).
  const Matrix eye = Matrix::Identity(m, m);
  double lo = 0.0, hi = 1.0;
  auto pulled = [&](double t) { return Matrix((1 - t) * gamma + t * eye); };
  if (problem.gap_of_gamma(pulled(1.0)) >= best_gap - 1e-9) {
    lo = 1.0;
  } else {
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (problem.gap_of_gamma(pulled(mid)) >= best_gap - 1e-9)
        lo = mid;
      else
        hi = mid;
    }
  }
  gamma = pulled(lo);
  result.best_gamma = gamma;
  result.best_gap = std::max(best_gap, problem.gap_of_gamma(gamma));
  return result;
}

/// Finite symmetry group of unitaries; closure is verified on construction.
struct SymmetryGroup {
  std::vector<Matrix> elements;

  explicit SymmetryGroup(std::vector<Matrix> els) : elements(std::move(els)) {
    if (elements.empty())
      throw std::invalid_argument("SymmetryGroup: empty group");
    const double tol = 1e-10;
    for (const auto& a : elements)
      for (const auto& b : elements) {
        Matrix p = a * b;
        bool found = false;
        for (const auto& c : elements)
          if ((p - c).cwiseAbs().maxCoeff() < tol * std::max(1.0, c.norm())) {
            found = true;
            break;
          }
        if (!found)
          throw std::invalid_argument("SymmetryGroup: not closed under composition");
      }
  }
};

/// Finite-group average of U_g L[U_g^dagger . U_g] U_g^dagger. Every element
/// must commute with the equilibrium state.
inline Matrix symmetrize(const Matrix& lindbladian, const SymmetryGroup& group,
                         const Matrix& rho) {
  Matrix out = Matrix::Zero(lindbladian.rows(), lindbladian.cols());
  int idx = 0;
  for (const auto& u : group.elements) {
    const double comm = (u * rho - rho * u).cwiseAbs().maxCoeff();
    if (comm > 1e-10 * std::max(1.0, rho.norm()))
      throw std::invalid_argument(
          "symmetrize: group element " + std::to_string(idx) +
          " does not commute with the equilibrium state (residual " +
          std::to_string(comm) + ")");
    Matrix w = kronecker(u, u.conjugate());
    out += w * lindbladian * w.adjoint();
    ++idx;
  }
  return out / static_cast<double>(group.elements.size());
}

/// Classical analog: average over configuration permutations that leave the
/// stationary weights invariant.
inline SparseReal symmetrize_classical(
    const SparseReal& liouvillian,
    const std::vector<std::vector<uint32_t>>& permutations,
    const RealVector& stationary_weights) {
  const auto d = liouvillian.rows();
  std::vector<Eigen::Triplet<double>> trips;
  int idx = 0;
  for (const auto& perm : permutations) {
    if (static_cast<Eigen::Index>(perm.size()) != d)
      throw std::invalid_argument("symmetrize_classical: permutation size");
    for (Eigen::Index c = 0; c < d; ++c) {
      const double dev = std::abs(stationary_weights(perm[c]) -
                                  stationary_weights(c));
      if (dev > 1e-10 * std::max(1.0, stationary_weights.maxCoeff()))
        throw std::invalid_argument(
            "symmetrize_classical: element " + std::to_string(idx) +
            " does not preserve the stationary distribution");
    }
    for (int k = 0; k < liouvillian.outerSize(); ++k)
      for (SparseReal::InnerIterator it(liouvillian, k); it; ++it)
        trips.emplace_back(perm[it.row()], perm[it.col()],
                           it.value() / permutations.size());
    ++idx;
  }
  SparseReal out(d, d);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

enum class SystemKind { kQuantum, kClassical };

struct SingleBodyOptimal {
  Matrix generator;  // Lindbladian (d^2) or Liouvillian (d)
  Matrix parent;     // Hermitian parent, same size
  double gap = 0;    // exact: d^2/(d^2-1) Gamma or d/(d-1) Gamma
};

/// Closed-form optimal generator at fixed cost Gamma: the parent Hamiltonian
/// is a scaled projector complement of the (purified) equilibrium state.
inline SingleBodyOptimal single_body_optimal(const GibbsState& g, double big_gamma,
                                             SystemKind kind) {
  const Eigen::Index d = g.dim();
  if (d < 2)
    throw std::invalid_argument("single_body_optimal: need dimension >= 2");
  SingleBodyOptimal out;
  if (kind == SystemKind::kQuantum) {
    const double n = static_cast<double>(d * d);
    const double c = n / (n - 1) * big_gamma;
    Vector sqrt_rho = vectorize(g.power(0.5));
    sqrt_rho /= sqrt_rho.norm();
    Matrix eye = Matrix::Identity(d * d, d * d);
    out.parent = c * (eye - sqrt_rho * sqrt_rho.adjoint());
    Vector rho_vec = vectorize(g.density());
    Vector one_vec = vectorize(Matrix::Identity(d, d));
    out.generator = -c * (eye - rho_vec * one_vec.adjoint());
    out.gap = c;
  } else {
    const double n = static_cast<double>(d);
    const double c = n / (n - 1) * big_gamma;
    RealVector p = g.power_diagonal(1.0);
    // classical path: the Gibbs weights live on the diagonal basis
    Vector sqrt_p = p.array().sqrt().matrix().cast<Complex>();
    Matrix eye = Matrix::Identity(d, d);
    out.parent = c * (eye - sqrt_p * sqrt_p.adjoint());
    Vector p_vec = p.cast<Complex>();
    Vector ones = Vector::Ones(d);
    out.generator = -c * (eye - p_vec * ones.adjoint());
    out.gap = c;
  }
  return out;
}

}  // namespace thermogap
