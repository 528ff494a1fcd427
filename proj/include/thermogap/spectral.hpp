#pragma once

#include "thermogap/classical.hpp"
#include "thermogap/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace thermogap {

enum class SolveMethod { kDense, kLanczos };
enum class GapStatus { kOk, kNonUniqueSteadyState };

struct SpectralReport {
  std::vector<double> eigenvalues;  // ascending; full (dense) or leading (Lanczos)
  double gap = 0;
  double zero_mode_residual = 0;
  double cost = 0;
  SolveMethod method = SolveMethod::kDense;
  std::optional<SectorLabel> sector;
  GapStatus status = GapStatus::kOk;
  int zero_modes_found = 0;
};

namespace detail {

inline SpectralReport classify_gap(std::vector<double> evals,
                                   int expected_zero_modes,
                                   SolveMethod method) {
  SpectralReport rep;
  rep.method = method;
  rep.eigenvalues = std::move(evals);
  double scale = 0;
  for (double e : rep.eigenvalues) scale = std::max(scale, std::abs(e));
  const double zero_tol = 1e-8 * std::max(scale, 1e-300);
  int zeros = 0;
  for (double e : rep.eigenvalues)
    if (std::abs(e) <= zero_tol) ++zeros;
  rep.zero_modes_found = zeros;
  if (zeros > expected_zero_modes) rep.status = GapStatus::kNonUniqueSteadyState;
  if (expected_zero_modes > 0 && !rep.eigenvalues.empty())
    rep.zero_mode_residual = std::abs(rep.eigenvalues.front());
  if (expected_zero_modes == 0) {
    if (!rep.eigenvalues.empty()) rep.gap = rep.eigenvalues.front();
  } else {
    // gap = first eigenvalue above the zero cluster, relative to the steady mode
    const size_t skip =
        std::max<size_t>(zeros, static_cast<size_t>(expected_zero_modes));
    if (rep.eigenvalues.size() > skip)
      rep.gap = rep.eigenvalues[skip] - rep.eigenvalues.front();
  }
  return rep;
}

}  // namespace detail

/// Lanczos with full reorthogonalization for the lowest eigenvalues of a
/// Hermitian operator given through its action on a vector. Optional deflation
/// vectors are projected out of the Krylov space.
template <typename Apply>
std::vector<double> lanczos_smallest(const Apply& apply, Eigen::Index dim,
                                     int n_eigs,
                                     const std::vector<Vector>& deflate = {},
                                     int max_iter = 400, double tol = 1e-10,
                                     const Vector* start = nullptr,
                                     uint64_t seed = 12345,
                                     Vector* ground_out = nullptr) {
  max_iter = static_cast<int>(
      std::min<Eigen::Index>(max_iter, dim - static_cast<Eigen::Index>(deflate.size())));
  if (max_iter < n_eigs)
    throw std::invalid_argument("lanczos_smallest: space too small");

  auto project_out = [&](Vector& w) {
    for (const Vector& u : deflate) w -= u.dot(w) * u;
  };

  Vector v;
  if (start && start->size() == dim) {
    v = *start;
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    v.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(nd(rng), nd(rng));
  }
  project_out(v);
  if (v.norm() < 1e-14) throw std::runtime_error("lanczos_smallest: bad start");
  v /= v.norm();

  std::vector<Vector> basis;
  basis.push_back(v);
  std::vector<double> alpha, beta;
  std::vector<double> prev;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = apply(basis.back());
    project_out(w);
    const double a = std::real(basis.back().dot(w));
    alpha.push_back(a);
    // full reorthogonalization, twice for stability; keep the deflated
    // directions out as well, or rounding re-admits them over many iterations
    for (int pass = 0; pass < 2; ++pass) {
      project_out(w);
      for (const Vector& u : basis) w -= u.dot(w) * u;
    }
    const double b = w.norm();
    // tridiagonal solve
    const int k = static_cast<int>(alpha.size());
    Eigen::SelfAdjointEigenSolver<RealMatrix> es;
    RealMatrix t = RealMatrix::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    es.compute(t, Eigen::EigenvaluesOnly);
    std::vector<double> ritz(es.eigenvalues().data(),
                             es.eigenvalues().data() +
                                 std::min<int>(n_eigs, k));
    double scale = std::max(std::abs(es.eigenvalues()(0)),
                            std::abs(es.eigenvalues()(k - 1)));
    scale = std::max(scale, 1e-300);
    bool converged = k >= n_eigs && !prev.empty() && prev.size() == ritz.size();
    if (converged)
      for (size_t i = 0; i < ritz.size(); ++i)
        if (std::abs(ritz[i] - prev[i]) > tol * scale) converged = false;
    if (converged || b < 1e-13 * scale ||
        k >= static_cast<int>(max_iter)) {
      if (ground_out) {
        es.compute(t);
        Vector g = Vector::Zero(dim);
        for (int i = 0; i < k; ++i) g += es.eigenvectors()(i, 0) * basis[i];
        *ground_out = g;
      }
      return ritz;
    }
    prev = std::move(ritz);
    beta.push_back(b);
    basis.push_back(w / b);
  }
  throw std::runtime_error("lanczos_smallest: no convergence");
}

/// Gap of a dense Hermitian matrix (full spectrum).
inline SpectralReport gap_dense(const Matrix& h, int expected_zero_modes) {
  auto eig = hermitian_spectrum(h);
  std::vector<double> ev(eig.values.data(), eig.values.data() + eig.values.size());
  return detail::classify_gap(std::move(ev), expected_zero_modes,
                              SolveMethod::kDense);
}

/// Gap of a sparse Hermitian matrix via Lanczos (leading eigenvalues only).
inline SpectralReport gap_sparse(const SparseComplex& h,
                                 int expected_zero_modes, int n_eigs = 6,
                                 int max_iter = 500, double tol = 1e-11,
                                 const std::vector<Vector>& deflate = {}) {
  auto apply = [&h](const Vector& x) -> Vector { return h * x; };
  auto ev = lanczos_smallest(apply, h.rows(), n_eigs, deflate, max_iter, tol);
  return detail::classify_gap(std::move(ev), expected_zero_modes,
                              SolveMethod::kLanczos);
}

inline SpectralReport gap_sparse(const SparseReal& h, int expected_zero_modes,
                                 int n_eigs = 6, int max_iter = 500,
                                 double tol = 1e-11) {
  return gap_sparse(SparseComplex(h.cast<Complex>()), expected_zero_modes,
                    n_eigs, max_iter, tol);
}

/// Cost of a superoperator: Schatten-1 norm / d^2. For detailed-balance
/// generators (real spectrum, negative semidefinite) this is -tr(L)/d^2.
inline double cost_super(const Matrix& lindbladian, bool detailed_balance = true) {
  const auto d2 = lindbladian.rows();
  if (detailed_balance) return -lindbladian.trace().real() / static_cast<double>(d2);
  Eigen::JacobiSVD<Matrix> svd(lindbladian);
  return svd.singularValues().sum() / static_cast<double>(d2);
}

/// Cost of a classical Markov generator: ||L||_1 / d, with the trace shortcut
/// for detailed-balance generators.
inline double cost_classical(const SparseReal& liouvillian,
                             bool detailed_balance = true) {
  const auto d = liouvillian.rows();
  if (detailed_balance) {
    double tr = 0;
    for (int k = 0; k < liouvillian.outerSize(); ++k)
      for (SparseReal::InnerIterator it(liouvillian, k); it; ++it)
        if (it.row() == it.col()) tr += it.value();
    return -tr / static_cast<double>(d);
  }
  RealMatrix dense(liouvillian);
  Eigen::JacobiSVD<RealMatrix> svd(dense);
  return svd.singularValues().sum() / static_cast<double>(d);
}

struct FrustrationReport {
  bool pass = true;
  struct TermResult {
    int index = 0;
    double min_eigenvalue = 0;
    double ground_residual = 0;
    double scale = 1;
    bool ok = true;
  };
  std::vector<TermResult> terms;
};

/// Check that every local term is PSD and annihilates the ground vector.
template <typename MatrixLike>
FrustrationReport frustration_free_check(const std::vector<MatrixLike>& terms,
                                         const Vector& ground) {
  FrustrationReport rep;
  int idx = 0;
  for (const auto& term : terms) {
    Matrix dense = Matrix(term).template cast<Complex>();
    FrustrationReport::TermResult r;
    r.index = idx++;
    r.scale = std::max(dense.norm(), 1e-300);
    auto eig = hermitian_spectrum(dense);
    r.min_eigenvalue = eig.values.minCoeff();
    r.ground_residual = (dense * ground).norm();
    r.ok = r.min_eigenvalue >= -1e-10 * r.scale &&
           r.ground_residual <= 1e-9 * r.scale;
    if (!r.ok) rep.pass = false;
    rep.terms.push_back(r);
  }
  return rep;
}

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> distance;  // 2-norm distance to equilibrium
  double fitted_rate = 0;
  bool slow_mode_unexcited = false;
};

/// Propagate p(t) = rho^{1/2} e^{-H^pa t} rho^{-1/2} p0 through the spectral
/// decomposition of the parent Hamiltonian and fit the asymptotic decay rate
/// on the last third of the time grid.
inline EvolutionTrace evolve_and_fit(const ClassicalGenerator& gen,
                                     const ClassicalIsingChain& chain,
                                     const RealVector& p0,
                                     const std::vector<double>& t_grid) {
  const auto d = static_cast<Eigen::Index>(gen.dim);
  if (p0.size() != d) throw std::invalid_argument("evolve_and_fit: p0 size");
  if (p0.minCoeff() < -1e-12 || std::abs(p0.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("evolve_and_fit: p0 is not a distribution");

  RealVector sq = sqrt_equilibrium_vector(chain);
  RealMatrix h = RealMatrix(gen.parent);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (h + h.transpose()));
  const RealMatrix& u = es.eigenvectors();
  const RealVector& lam = es.eigenvalues();

  RealVector peq = sq.array().square();
  // y0 = rho^{-1/2} p0 in the eigenbasis of H^pa
  RealVector y0 = (p0.array() / sq.array()).matrix();
  RealVector c = u.transpose() * y0;

  EvolutionTrace trace;
  // slowest decaying mode is eigenvector 1 (0 is the ground/steady mode)
  if (lam.size() > 1 && std::abs(c(1)) < 1e-12) trace.slow_mode_unexcited = true;

  for (double t : t_grid) {
    RealVector y = u * (c.array() * (-lam.array() * t).exp()).matrix();
    RealVector p = (y.array() * sq.array()).matrix();
    trace.times.push_back(t);
    trace.distance.push_back((p - peq).norm());
  }
  // linear regression of log(distance) on the tail window
  const size_t n = trace.times.size();
  const size_t start = n - n / 3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t m = 0;
  for (size_t i = start; i < n; ++i) {
    if (trace.distance[i] <= 0) continue;
    const double x = trace.times[i], y = std::log(trace.distance[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  if (m >= 2) {
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 1e-300)
      trace.fitted_rate = -(m * sxy - sx * sy) / denom;
  }
  return trace;
}

}  // namespace thermogap
