#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace thermogap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline double hermiticity_residual(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
  return hermiticity_residual(m) <= tol * std::max(1.0, m.norm());
}

struct HermitianEig {
  RealVector values;   // ascending
  Matrix vectors;      // orthonormal columns
};

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (M + M^dagger)/2 before solving; inputs that are non-Hermitian beyond
/// 1e-10 * ||M|| are rejected.
inline HermitianEig hermitian_spectrum(const Matrix& m) {
  const double scale = std::max(1.0, m.norm());
  const double res = hermiticity_residual(m);
  if (res > 1e-10 * scale) {
    throw std::invalid_argument(
        "hermitian_spectrum: input is not Hermitian (residual " +
        std::to_string(res) + " exceeds 1e-10 * " + std::to_string(scale) + ")");
  }
  Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_spectrum: eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Row-stacking convention throughout: vec(rho)[i*d + j] = rho(i, j), so that
// vec(A rho B) = (A kron B^T) vec(rho).
inline Vector vectorize(const Matrix& rho) {
  const Eigen::Index d = rho.rows();
  Vector v(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = rho(i, j);
  return v;
}

inline Matrix devectorize(const Vector& v, Eigen::Index d) {
  if (v.size() != d * d)
    throw std::invalid_argument("devectorize: size mismatch");
  Matrix rho(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) rho(i, j) = v(i * d + j);
  return rho;
}

/// Matrix of the superoperator rho -> A rho B under row stacking.
inline Matrix sandwich_superop(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw std::invalid_argument("sandwich_superop: dimension mismatch");
  return kronecker(a, b.transpose());
}

struct SpinAlgebra {
  double s = 0;
  Matrix Sx, Sy, Sz;
  Eigen::Index dim() const { return Sz.rows(); }
};

/// Standard spin matrices in the Sz eigenbasis, dimension 2s+1.
inline SpinAlgebra spin_operators(double s) {
  const double two_s = 2.0 * s;
  if (s <= 0 || std::abs(two_s - std::round(two_s)) > 1e-12)
    throw std::invalid_argument("spin_operators: 2s must be a positive integer");
  const Eigen::Index d = static_cast<Eigen::Index>(std::lround(two_s)) + 1;
  RealVector m(d);
  for (Eigen::Index i = 0; i < d; ++i) m(i) = s - static_cast<double>(i);
  Matrix sp = Matrix::Zero(d, d);
  for (Eigen::Index i = 1; i < d; ++i)
    sp(i - 1, i) = std::sqrt(s * (s + 1) - m(i) * (m(i) + 1));
  SpinAlgebra alg;
  alg.s = s;
  alg.Sx = 0.5 * (sp + Matrix(sp.adjoint()));
  alg.Sy = Complex(0, -0.5) * (sp - Matrix(sp.adjoint()));
  alg.Sz = m.cast<Complex>().asDiagonal();
  return alg;
}

/// Thermal state of a Hamiltonian at inverse temperature beta, with a cached
/// eigendecomposition. Energies are shifted by E_min before exponentiation so
/// fractional powers stay finite at large beta.
class GibbsState {
 public:
  GibbsState(Matrix hamiltonian, double beta)
      : hamiltonian_(std::move(hamiltonian)), beta_(beta) {
    if (beta < 0) throw std::invalid_argument("GibbsState: beta must be >= 0");
    auto eig = hermitian_spectrum(hamiltonian_);
    energies_ = eig.values;
    basis_ = eig.vectors;
    shifted_ = energies_.array() - energies_.minCoeff();
    // log Z with the shift removed
    log_z_shifted_ = std::log((-beta_ * shifted_.array()).exp().sum());
    log_z_ = log_z_shifted_ - beta_ * energies_.minCoeff();
  }

  Eigen::Index dim() const { return hamiltonian_.rows(); }
  double beta() const { return beta_; }
  const Matrix& hamiltonian() const { return hamiltonian_; }
  const RealVector& energies() const { return energies_; }
  const RealVector& shifted_energies() const { return shifted_; }
  const Matrix& basis() const { return basis_; }
  double log_partition() const { return log_z_; }

  /// Diagonal of rho^x in the energy eigenbasis.
  RealVector power_diagonal(double x) const {
    RealVector diag =
        (-x * beta_ * shifted_.array() - x * log_z_shifted_).exp();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      // vectorized exp clamps to a subnormal instead of flushing to zero
      if (diag(i) < std::numeric_limits<double>::min() ||
          !std::isfinite(diag(i)))
        throw std::runtime_error("gibbs_power: power underflow; reduce beta or x");
    }
    return diag;
  }

  /// rho^x as a dense operator in the original basis.
  Matrix power(double x) const {
    return basis_ * power_diagonal(x).cast<Complex>().asDiagonal() *
           basis_.adjoint();
  }

  Matrix density() const { return power(1.0); }

 private:
  Matrix hamiltonian_;
  double beta_;
  RealVector energies_, shifted_;
  Matrix basis_;
  double log_z_ = 0, log_z_shifted_ = 0;
};

inline Matrix gibbs_power(const GibbsState& g, double x) { return g.power(x); }

}  // namespace thermogap
