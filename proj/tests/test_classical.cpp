#include "thermogap/classical.hpp"

#include <doctest.h>

#include "thermogap/spectral.hpp"

using namespace thermogap;

namespace {

ClassicalHamiltonian ising_ham(const ClassicalIsingChain& chain) {
  ClassicalHamiltonian ham;
  ham.n_sites = chain.n_sites;
  const int n = chain.n_sites;
  for (int i = 0; i < n; ++i) {
    ClassicalTerm t;
    t.sites = {i, (i + 1) % n};
    t.energy = [i, n, j = chain.coupling](uint64_t cfg) {
      return -j * ClassicalIsingChain::spin(cfg, i, n) *
             ClassicalIsingChain::spin(cfg, i + 1, n);
    };
    ham.terms.push_back(std::move(t));
  }
  return ham;
}

}  // namespace

TEST_CASE("ClassicalIsingChain parameters") {
  SUBCASE("double-angle identity") {
    auto c = ClassicalIsingChain::from_beta(6, 1.0, 0.7);
    const double e = c.eta;
    CHECK(std::abs(c.gamma_eq - 2 * e / (1 + e * e)) < 1e-14);
    CHECK(std::abs(c.epsilon * c.epsilon - (1 - c.gamma_eq * c.gamma_eq)) <
          1e-14);
  }
  SUBCASE("from_epsilon roundtrip") {
    auto c = ClassicalIsingChain::from_epsilon(6, 0.25);
    CHECK(c.epsilon == doctest::Approx(0.25).epsilon(1e-12));
    auto c2 = ClassicalIsingChain::from_eta(6, c.eta);
    CHECK(std::abs(c2.epsilon - c.epsilon) < 1e-12);
  }
  SUBCASE("site bounds") {
    CHECK_THROWS_AS(ClassicalIsingChain::from_eta(2, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(ClassicalIsingChain::from_eta(27, 0.5),
                    std::invalid_argument);
  }
}

TEST_CASE("build_ki1d") {
  auto chain = ClassicalIsingChain::from_epsilon(6, 0.5);
  KineticParamsKI kp{1.0, 0.3};
  auto gen = build_ki1d(chain, kp);

  SUBCASE("all-up flip rate") {
    const uint64_t up = chain.dim() - 1;
    const uint64_t flp = up ^ 1u;
    CHECK(std::abs(gen.liouvillian.coeff(static_cast<int64_t>(flp),
                                         static_cast<int64_t>(up)) -
                   kp.big_gamma * (1 + kp.delta) * (1 - chain.gamma_eq)) <
          1e-14);
  }
  SUBCASE("generator structure") {
    RealVector colsum =
        RealVector(gen.liouvillian.transpose() *
                   RealVector::Ones(gen.liouvillian.rows()));
    CHECK(colsum.cwiseAbs().maxCoeff() < 1e-12);
    double min_offdiag = 0;
    for (int k = 0; k < gen.liouvillian.outerSize(); ++k)
      for (SparseReal::InnerIterator it(gen.liouvillian, k); it; ++it)
        if (it.row() != it.col())
          min_offdiag = std::min(min_offdiag, it.value());
    CHECK(min_offdiag >= -1e-14);
  }
  SUBCASE("stationarity and classical detailed balance") {
    RealVector sq = sqrt_equilibrium_vector(chain);
    RealVector p = sq.array().square();
    CHECK(RealVector(gen.liouvillian * p).cwiseAbs().maxCoeff() < 1e-11);
    // p_a L_ab = p_b L_ba
    RealMatrix l(gen.liouvillian);
    RealMatrix db = p.asDiagonal().inverse() * l * p.asDiagonal() - l.transpose();
    CHECK(db.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("parent similarity to -L") {
    RealVector sq = sqrt_equilibrium_vector(chain);
    RealMatrix l(gen.liouvillian);
    RealMatrix h(gen.parent);
    RealMatrix sim = sq.asDiagonal().inverse() * (-l).eval() * sq.asDiagonal();
    CHECK((sim - h).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("local terms sum to the parent and are individually PSD") {
    REQUIRE(gen.local_terms.size() == 6);
    SparseReal sum = gen.local_terms[0];
    for (size_t i = 1; i < gen.local_terms.size(); ++i)
      sum = sum + gen.local_terms[i];
    CHECK(RealMatrix(sum - gen.parent).cwiseAbs().maxCoeff() < 1e-12);
    RealVector sq = sqrt_equilibrium_vector(chain);
    auto rep = frustration_free_check(gen.local_terms, sq);
    CHECK(rep.pass);
  }
  SUBCASE("infinite temperature, delta = 0, N = 4: gap is 2 Gamma") {
    auto hot = ClassicalIsingChain::from_eta(4, 0.0);
    auto g0 = build_ki1d(hot, KineticParamsKI{1.0, 0.0}, false);
    auto rep = gap_dense(Matrix(RealMatrix(g0.parent).cast<Complex>()), 1);
    CHECK(rep.gap == doctest::Approx(2.0).epsilon(1e-10));
  }
}

TEST_CASE("build_multiflip") {
  auto chain = ClassicalIsingChain::from_epsilon(6, 0.5);
  KineticParamsKI kp{1.0, 0.3};
  auto ham = ising_ham(chain);
  std::vector<FlipCollection> flips;
  for (int i = 0; i < 6; ++i) flips.push_back({{i}});

  SUBCASE("matches the Pauli-string construction") {
    auto rate = [&](int nu, uint64_t from, uint64_t) {
      const int sl = ClassicalIsingChain::spin(from, nu - 1, 6);
      const int sr = ClassicalIsingChain::spin(from, nu + 1, 6);
      const double pref = kp.big_gamma * (1 + kp.delta * sl * sr);
      return sl == sr ? pref / std::cosh(2 * chain.beta * chain.coupling)
                      : pref;
    };
    auto gen = build_ki1d(chain, kp, false);
    auto gen2 = build_multiflip(ham, chain.beta, flips, rate);
    CHECK(RealMatrix(gen.liouvillian - gen2.liouvillian).cwiseAbs().maxCoeff() <
          1e-13);
    CHECK(RealMatrix(gen.parent - gen2.parent).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("infinite temperature generator is symmetric") {
    auto gen = build_multiflip(ham, 0.0, flips,
                               [](int, uint64_t, uint64_t) { return 1.0; });
    RealMatrix l(gen.liouvillian);
    CHECK((l - l.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("asymmetric pair rates rejected") {
    auto bad = [](int, uint64_t from, uint64_t to) {
      return from < to ? 1.0 : 2.0;
    };
    CHECK_THROWS_WITH_AS(build_multiflip(ham, chain.beta, flips, bad),
                         doctest::Contains("asymmetric pair rates"),
                         std::invalid_argument);
  }
}

TEST_CASE("sqrt_equilibrium_vector") {
  SUBCASE("infinite temperature is uniform") {
    auto hot = ClassicalIsingChain::from_eta(4, 0.0);
    RealVector v = sqrt_equilibrium_vector(hot);
    CHECK((v.array() - 0.25).abs().maxCoeff() < 1e-14);
  }
  SUBCASE("annihilated by the parent") {
    auto chain = ClassicalIsingChain::from_eta(8, 0.6);
    auto gen = build_ki1d(chain, KineticParamsKI{1.0, -0.4}, false);
    RealVector v = sqrt_equilibrium_vector(chain);
    CHECK(std::abs(v.norm() - 1.0) < 1e-13);
    CHECK(RealVector(gen.parent * v).cwiseAbs().maxCoeff() < 1e-11);
  }
  SUBCASE("amplitude ratios are half Boltzmann factors") {
    auto chain = ClassicalIsingChain::from_beta(4, 1.0, 0.5);
    RealVector v = sqrt_equilibrium_vector(chain);
    const uint64_t up = chain.dim() - 1;  // energy -NJ
    const uint64_t one = 1;               // two broken bonds, energy -NJ + 4J
    const double ratio = v(static_cast<int64_t>(up)) / v(1);
    CHECK(ratio == doctest::Approx(std::exp(2 * chain.beta * chain.coupling))
                       .epsilon(1e-12));
    (void)one;
  }
  SUBCASE("zero temperature keeps only the aligned pair") {
    auto cold = ClassicalIsingChain::from_beta(
        4, 1.0, std::numeric_limits<double>::infinity());
    RealVector v = sqrt_equilibrium_vector(cold);
    CHECK(v(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(v(static_cast<int64_t>(cold.dim()) - 1) ==
          doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(v.segment(1, static_cast<int64_t>(cold.dim()) - 2)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("symmetry sectors") {
  const int n = 8;
  auto chain = ClassicalIsingChain::from_eta(n, 0.5);
  auto gen = build_ki1d(chain, KineticParamsKI{1.0, 0.2}, false);

  SUBCASE("dimensions sum to 2^N") {
    int total = 0;
    for (int par : {1, -1})
      for (int k = 0; k < n; ++k)
        total += static_cast<int>(sector_basis(n, {par, k}).cols());
    CHECK(total == 256);
  }
  SUBCASE("ground sector contains the square-root equilibrium") {
    auto blk = sector_decompose(gen, n, {1, 0});
    RealVector sq = sqrt_equilibrium_vector(chain);
    Vector proj = blk.basis.adjoint() * sq.cast<Complex>();
    CHECK(std::abs(proj.norm() - 1.0) < 1e-12);
    CHECK((Matrix(blk.block) * proj).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("blocks reproduce the dense gap") {
    auto full = gap_dense(Matrix(RealMatrix(gen.parent).cast<Complex>()), 1);
    double sector_min_excited = 1e300;
    for (int par : {1, -1}) {
      for (int k = 0; k < n; ++k) {
        auto blk = sector_decompose(gen, n, {par, k});
        if (blk.basis.cols() == 0) continue;
        Matrix dense(blk.block);
        auto eig = hermitian_spectrum(dense);
        const bool ground = (par == 1 && k == 0);
        for (Eigen::Index i = ground ? 1 : 0; i < eig.values.size(); ++i)
          sector_min_excited = std::min(sector_min_excited, eig.values(i));
      }
    }
    CHECK(std::abs(sector_min_excited - full.gap) < 1e-9);
  }
  SUBCASE("(+1, k = N/2) at N = 6 realizes the staggered bound") {
    auto c6 = ClassicalIsingChain::from_eta(6, 0.5);
    KineticParamsKI kp{1.0, -0.3};
    auto g6 = build_ki1d(c6, kp, false);
    auto blk = sector_decompose(g6, 6, {1, 3});
    Matrix dense(blk.block);
    auto eig = hermitian_spectrum(dense);
    CHECK(eig.values(0) <= 4 * (1 - kp.delta) + 1e-10);
  }
  SUBCASE("parent commutes with spin flip and translation") {
    const uint64_t d = gen.dim;
    std::vector<Eigen::Triplet<double>> tf, tt;
    for (uint64_t cfg = 0; cfg < d; ++cfg) {
      tf.emplace_back(static_cast<int64_t>(cfg ^ (d - 1)),
                      static_cast<int64_t>(cfg), 1.0);
      tt.emplace_back(static_cast<int64_t>(detail::translate_cfg(cfg, n)),
                      static_cast<int64_t>(cfg), 1.0);
    }
    SparseReal flip(static_cast<int64_t>(d), static_cast<int64_t>(d));
    flip.setFromTriplets(tf.begin(), tf.end());
    SparseReal trans(static_cast<int64_t>(d), static_cast<int64_t>(d));
    trans.setFromTriplets(tt.begin(), tt.end());
    CHECK(RealMatrix(gen.parent * flip - flip * gen.parent)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(RealMatrix(gen.parent * trans - trans * gen.parent)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("variational states") {
  auto chain = ClassicalIsingChain::from_eta(8, 0.5);
  KineticParamsKI kp{1.0, -0.2};
  auto gen = build_ki1d(chain, kp, false);
  RealVector sq = sqrt_equilibrium_vector(chain);

  SUBCASE("orthogonality to the ground state") {
    for (int which : {1, 2, 3, 4, 5}) {
      RealVector v = variational_state(chain, which);
      CHECK(std::abs(v.norm() - 1.0) < 1e-13);
      CHECK(std::abs(sq.dot(v)) < 1e-12);
    }
  }
  SUBCASE("Psi_3 quotient equals the closed form") {
    for (int n : {4, 6, 8, 10}) {
      auto c = ClassicalIsingChain::from_eta(n, 0.5);
      auto g = build_ki1d(c, kp, false);
      RealVector v = variational_state(c, 3);
      const double quot = v.dot(RealVector(g.parent * v));
      CHECK(std::abs(quot - n * (1 + kp.delta) * (1 - c.gamma_eq)) < 1e-10);
    }
  }
  SUBCASE("Psi_4 quotient equals the closed form") {
    RealVector v = variational_state(chain, 4);
    const double quot = v.dot(RealVector(gen.parent * v));
    CHECK(std::abs(quot - 4 * (1 - kp.delta)) < 1e-10);
  }
  SUBCASE("Psi_4 requires even N") {
    auto odd = ClassicalIsingChain::from_eta(5, 0.5);
    CHECK_THROWS_AS(variational_state(odd, 4), std::invalid_argument);
  }
  SUBCASE("Psi_5 captures the soft mode near zero temperature") {
    auto c = ClassicalIsingChain::from_epsilon(10, 0.0);
    KineticParamsKI soft{1.0, -0.99};
    auto g = build_ki1d(c, soft, false);
    RealVector v = variational_state(c, 5);
    const double quot = v.dot(RealVector(g.parent * v));
    const double approx = 4 * (1 + soft.delta) / (10 - 1);
    CHECK(quot < 1.1 * approx + 1e-6);
    CHECK(quot > 0);
  }
}

TEST_CASE("analytic bounds") {
  SUBCASE("infinite-temperature limits") {
    auto hot = ClassicalIsingChain::from_eta(8, 0.0);
    auto b0 = analytic_bounds(hot, KineticParamsKI{1.0, 0.0}, 8);
    CHECK(b0.delta12 == doctest::Approx(2.0).epsilon(1e-12));
    auto bm = analytic_bounds(hot, KineticParamsKI{1.0, -1.0}, 8);
    CHECK(bm.delta3 == doctest::Approx(0.0));
    auto bp = analytic_bounds(hot, KineticParamsKI{1.0, 1.0}, 8);
    CHECK(bp.delta4 == doctest::Approx(0.0));
  }
  SUBCASE("zero temperature rejected") {
    auto cold = ClassicalIsingChain::from_eta(8, 1.0);
    CHECK_THROWS_WITH_AS(analytic_bounds(cold, KineticParamsKI{1.0, 0.0}, 8),
                         doctest::Contains("gap closes"),
                         std::invalid_argument);
  }
  SUBCASE("closed-form optimum against a fine grid") {
    for (double eta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      auto [d_opt, gap_opt] = optimal_coefficients(eta);
      double best = -1e300, best_d = 0;
      for (int i = 0; i <= 50000; ++i) {
        const double del = -4.0 + 5.0 * i / 50000.0;
        const double g = delta12_bound(eta, del);
        if (g > best) {
          best = g;
          best_d = del;
        }
      }
      CHECK(std::abs(best_d - d_opt) < 2e-4);
      CHECK(std::abs(delta12_bound(eta, d_opt) - gap_opt) < 1e-10);
    }
  }
  SUBCASE("optimum endpoints") {
    auto [d0, g0] = optimal_coefficients(0.0);
    CHECK(d0 == doctest::Approx(0.0));
    CHECK(g0 == doctest::Approx(2.0));
    auto [d9, g9] = optimal_coefficients(0.999);
    CHECK(g9 > 0);
    CHECK(g9 < 0.05);
    (void)d9;
  }
  SUBCASE("transition curve") {
    CHECK(transition_delta(0.0) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(transition_delta(1.0) == doctest::Approx(1.0));
    for (double eta : {0.2, 0.4, 0.6, 0.8}) {
      const double ds = transition_delta(eta);
      CHECK(std::abs(delta12_bound(eta, ds) - 4 * (1 - ds)) < 1e-9);
    }
  }
}
