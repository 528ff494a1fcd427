#pragma once

#include "thermogap/core.hpp"

#include <random>

namespace test_helpers {

inline thermogap::Matrix random_complex(Eigen::Index d, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  thermogap::Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      m(i, j) = thermogap::Complex(nd(rng), nd(rng));
  return m;
}

inline thermogap::Matrix random_hermitian(Eigen::Index d, uint64_t seed) {
  thermogap::Matrix m = random_complex(d, seed);
  return 0.5 * (m + m.adjoint());
}

inline thermogap::Matrix random_psd(Eigen::Index d, uint64_t seed) {
  thermogap::Matrix b = random_complex(d, seed);
  return b.adjoint() * b;
}

}  // namespace test_helpers
