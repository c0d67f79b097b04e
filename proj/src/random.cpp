#include "entlab/random.hpp"

namespace entlab {

namespace {

ComplexMatrix ginibre(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = Complex(re, im);
    }
  }
  return g;
}

}  // namespace

ComplexMatrix random_unitary(int dim, std::mt19937_64& rng) {
  const ComplexMatrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0.0) q.col(i) *= r(i, i) / mag;
  }
  return q;
}

ComplexMatrix random_povm_element(int dim, std::mt19937_64& rng) {
  const ComplexMatrix v = random_unitary(dim, rng);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::VectorXd lambda(dim);
  for (int i = 0; i < dim; ++i) lambda(i) = uniform(rng);
  ComplexMatrix m = v * lambda.asDiagonal() * v.adjoint();
  return 0.5 * (m + m.adjoint());
}

PovmPair random_povm_pair(int truncation, std::mt19937_64& rng) {
  const FockBasis basis(truncation);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  ComplexMatrix on = ComplexMatrix::Zero(dim, dim);
  for (int n = 0; n <= truncation; ++n) {
    const auto offset = static_cast<Eigen::Index>(FockBasis::block_offset(n));
    on.block(offset, offset, n + 1, n + 1) = random_povm_element(n + 1, rng);
  }
  return PovmPair::from_on(Operator(basis, std::move(on)), truncation);
}

ComplexMatrix random_density_matrix(int dim, std::mt19937_64& rng) {
  const ComplexMatrix g = ginibre(dim, dim, rng);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace entlab
