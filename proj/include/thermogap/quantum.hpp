#pragma once

#include "thermogap/core.hpp"

#include <utility>
#include <vector>

namespace thermogap {

/// Infinite-temperature jump operators A~_1 .. A~_M. The conjugate partners
/// A~_{l+M} = A~_l^dagger are implicit and supplied by the assembly.
struct JumpSet {
  std::vector<Matrix> ops;
};

struct KineticMatrix {
  Matrix gamma;  // Hermitian PSD, M x M

  static KineticMatrix identity(Eigen::Index m) {
    return {Matrix::Identity(m, m)};
  }

  void validate() const {
    if (gamma.rows() != gamma.cols())
      throw std::invalid_argument("KineticMatrix: gamma must be square");
    if (hermiticity_residual(gamma) > 1e-12 * std::max(1.0, gamma.norm()))
      throw std::invalid_argument("KineticMatrix: gamma is not Hermitian");
    auto eig = hermitian_spectrum(gamma);
    if (eig.values.minCoeff() < -1e-10 * std::max(1.0, gamma.norm()))
      throw std::invalid_argument(
          "KineticMatrix: gamma is not positive semidefinite (min eigenvalue " +
          std::to_string(eig.values.minCoeff()) + ")");
  }
};

struct AssemblyDiagnostics {
  double parent_hermiticity = 0;      // max |H - H^dagger|
  double steady_state_residual = 0;   // max |L vec(rho_beta)|
  double tfd_residual = 0;            // max |H vec(rho^{1/2})|
};

struct LindbladAssembly {
  Eigen::Index dim = 0;     // Hilbert-space dimension d
  Matrix lindbladian;       // d^2 x d^2, row-stacking convention
  Matrix parent;            // d^2 x d^2 Hermitian parent Hamiltonian
  Matrix coherent;          // total K = sum gamma_ln K_ln (d x d)
  Vector tfd;               // vec(rho_beta^{1/2}), unnormalized ground state
  AssemblyDiagnostics diagnostics;
};

namespace detail {

// All per-pair objects are elementwise in the energy eigenbasis; these helpers
// take the jump operators already rotated there and the shifted energies.

inline Matrix dress_energy_basis(const RealVector& es, double beta,
                                 const Matrix& a_tilde_e) {
  const Eigen::Index d = es.size();
  Matrix out(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      out(a, b) = std::exp(-beta * (es(a) - es(b)) / 4.0) * a_tilde_e(a, b);
  return out;
}

// <a| An^dagger e^{-beta H / 2} Al |b> with shifted energies.
inline Matrix middle_product(const RealVector& es, double beta,
                             const Matrix& al_e, const Matrix& an_e) {
  RealVector w = (-0.5 * beta * es.array()).exp();
  return an_e.adjoint() * w.cast<Complex>().asDiagonal() * al_e;
}

inline Matrix coherent_energy_basis(const RealVector& es, double beta,
                                    const Matrix& al_e, const Matrix& an_e) {
  const Eigen::Index d = es.size();
  Matrix mid = middle_product(es, beta, al_e, an_e);
  Matrix k(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      const double f = std::exp(beta * (es(a) + es(b)) / 4.0) *
                       std::tanh(beta * (es(a) - es(b)) / 4.0);
      k(a, b) = Complex(0, 0.5) * f * mid(a, b);
    }
  return k;
}

inline Matrix sld_energy_basis(const RealVector& es, double beta,
                               const Matrix& al_e, const Matrix& an_e) {
  const Eigen::Index d = es.size();
  Matrix mid = middle_product(es, beta, al_e, an_e);
  Matrix g(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      const double den =
          std::exp(-0.5 * beta * es(a)) + std::exp(-0.5 * beta * es(b));
      g(a, b) = 2.0 * mid(a, b) / den;
    }
  return g;
}

// Single Lindblad term L_pq = -i[K_pq, .] + A_p . A_q^dagger
//                              - 1/2 {A_q^dagger A_p, .}, energy basis.
inline Matrix lindblad_term_energy_basis(const RealVector& es, double beta,
                                         const Matrix& ap_e, const Matrix& aq_e,
                                         Matrix* k_out = nullptr) {
  const Eigen::Index d = es.size();
  Matrix ap = dress_energy_basis(es, beta, ap_e);
  Matrix aq = dress_energy_basis(es, beta, aq_e);
  Matrix k = coherent_energy_basis(es, beta, ap_e, aq_e);
  Matrix x = aq.adjoint() * ap;
  Matrix eye = Matrix::Identity(d, d);
  Matrix term = kronecker(ap, aq.conjugate()) - 0.5 * kronecker(x, eye) -
                0.5 * kronecker(eye, x.transpose());
  term += Complex(0, -1) * kronecker(k, eye) +
          Complex(0, 1) * kronecker(eye, k.transpose());
  if (k_out) *k_out = k;
  return term;
}

// Parent term H_pq = 1/2 {G_pq, .} - A~_p . A~_q^dagger, energy basis.
inline Matrix parent_term_energy_basis(const RealVector& es, double beta,
                                       const Matrix& ap_e, const Matrix& aq_e) {
  const Eigen::Index d = es.size();
  Matrix g = sld_energy_basis(es, beta, ap_e, aq_e);
  Matrix eye = Matrix::Identity(d, d);
  return 0.5 * (kronecker(g, eye) + kronecker(eye, g.transpose())) -
         kronecker(ap_e, aq_e.conjugate());
}

// Superoperator basis change from the energy eigenbasis back to the original
// basis: S_orig = (U kron U*) S_energy (U kron U*)^dagger.
inline Matrix rotate_superop(const Matrix& u, const Matrix& s_energy) {
  Matrix w = kronecker(u, u.conjugate());
  return w * s_energy * w.adjoint();
}

}  // namespace detail

/// A = rho^{1/4} A~ rho^{-1/4}, computed elementwise in the energy basis.
inline Matrix dress_jump(const GibbsState& g, const Matrix& a_tilde) {
  if (a_tilde.rows() != g.dim())
    throw std::invalid_argument("dress_jump: dimension mismatch");
  const Matrix& u = g.basis();
  Matrix ae = u.adjoint() * a_tilde * u;
  return u * detail::dress_energy_basis(g.shifted_energies(), g.beta(), ae) *
         u.adjoint();
}

/// Coherent correction K_ln for the pair (A~_l, A~_n).
inline Matrix coherent_term(const GibbsState& g, const Matrix& a_l,
                            const Matrix& a_n) {
  const Matrix& u = g.basis();
  return u *
         detail::coherent_energy_basis(g.shifted_energies(), g.beta(),
                                       u.adjoint() * a_l * u,
                                       u.adjoint() * a_n * u) *
         u.adjoint();
}

/// G_ln, the symmetric-logarithmic-derivative solution of
/// 1/2 {G, rho^{1/2}} = A~_n^dagger rho^{1/2} A~_l.
inline Matrix sld_operator(const GibbsState& g, const Matrix& a_l,
                           const Matrix& a_n) {
  const Matrix& u = g.basis();
  return u *
         detail::sld_energy_basis(g.shifted_energies(), g.beta(),
                                  u.adjoint() * a_l * u,
                                  u.adjoint() * a_n * u) *
         u.adjoint();
}

/// Per-pair parent contribution H_ln + H_{n+M,l+M} in the original basis.
/// These are the frustration-free local terms of the parent Hamiltonian.
inline Matrix parent_pair_term(const GibbsState& g, const Matrix& a_l,
                               const Matrix& a_n) {
  const Matrix& u = g.basis();
  const RealVector& es = g.shifted_energies();
  Matrix al_e = u.adjoint() * a_l * u;
  Matrix an_e = u.adjoint() * a_n * u;
  Matrix term =
      detail::parent_term_energy_basis(es, g.beta(), al_e, an_e) +
      detail::parent_term_energy_basis(es, g.beta(), an_e.adjoint(),
                                       al_e.adjoint());
  return detail::rotate_superop(u, term);
}

/// Build the full detailed-balance Lindbladian, parent Hamiltonian, coherent
/// correction, and thermofield double vector for a jump set and kinetic matrix.
inline LindbladAssembly assemble(const GibbsState& g, const JumpSet& jumps,
                                 const KineticMatrix& kinetic,
                                 Eigen::Index dense_cap = 4096) {
  if (jumps.ops.empty())
    throw std::invalid_argument("assemble: empty jump set");
  const Eigen::Index d = g.dim();
  if (d * d > dense_cap)
    throw std::invalid_argument(
        "assemble: d^2 = " + std::to_string(d * d) +
        " exceeds the dense cap; use the classical/sparse path");
  kinetic.validate();
  const Eigen::Index m = static_cast<Eigen::Index>(jumps.ops.size());
  if (kinetic.gamma.rows() != m)
    throw std::invalid_argument("assemble: gamma size does not match jump set");

  const Matrix& u = g.basis();
  const RealVector& es = g.shifted_energies();
  std::vector<Matrix> ops_e(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) {
    if (jumps.ops[l].rows() != d)
      throw std::invalid_argument("assemble: jump operator dimension mismatch");
    ops_e[l] = u.adjoint() * jumps.ops[l] * u;
    ops_e[l + m] = ops_e[l].adjoint();
  }

  Matrix lind = Matrix::Zero(d * d, d * d);
  Matrix parent = Matrix::Zero(d * d, d * d);
  Matrix k_total = Matrix::Zero(d, d);
  for (Eigen::Index l = 0; l < m; ++l) {
    for (Eigen::Index n = 0; n < m; ++n) {
      const Complex w = kinetic.gamma(l, n);
      if (w == Complex(0, 0)) continue;
      Matrix k1, k2;
      lind += w * detail::lindblad_term_energy_basis(es, g.beta(), ops_e[l],
                                                     ops_e[n], &k1);
      lind += w * detail::lindblad_term_energy_basis(es, g.beta(), ops_e[n + m],
                                                     ops_e[l + m], &k2);
      k_total += w * (k1 + k2);
      parent += w * detail::parent_term_energy_basis(es, g.beta(), ops_e[l],
                                                     ops_e[n]);
      parent += w * detail::parent_term_energy_basis(es, g.beta(), ops_e[n + m],
                                                     ops_e[l + m]);
    }
  }

  LindbladAssembly out;
  out.dim = d;
  out.lindbladian = detail::rotate_superop(u, lind);
  out.parent = detail::rotate_superop(u, parent);
  out.coherent = u * k_total * u.adjoint();
  out.tfd = vectorize(g.power(0.5));
  out.diagnostics.parent_hermiticity = hermiticity_residual(out.parent);
  out.diagnostics.steady_state_residual =
      (out.lindbladian * vectorize(g.density())).cwiseAbs().maxCoeff();
  out.diagnostics.tfd_residual = (out.parent * out.tfd).cwiseAbs().maxCoeff();
  return out;
}

/// Relative Frobenius deviation from the detailed balance condition
/// L^sharp = (rho^{-1/2} kron rho^{-1/2,T}) L (rho^{1/2} kron rho^{1/2,T}).
inline double detailed_balance_residual(const LindbladAssembly& asm_,
                                        const GibbsState& g) {
  Matrix half = g.power(0.5);
  Matrix half_inv = g.power(-0.5);
  Matrix conjugated = sandwich_superop(half_inv, half_inv) * asm_.lindbladian *
                      sandwich_superop(half, half);
  return (asm_.lindbladian.adjoint() - conjugated).norm() /
         asm_.lindbladian.norm();
}

}  // namespace thermogap
