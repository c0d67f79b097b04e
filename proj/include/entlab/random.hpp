#pragma once

#include <random>

#include "entlab/fock.hpp"
#include "entlab/optics.hpp"

namespace entlab {

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
ComplexMatrix random_unitary(int dim, std::mt19937_64& rng);

/// V diag(lambda) V^dagger with Haar V and lambda uniform in [0, 1].
ComplexMatrix random_povm_element(int dim, std::mt19937_64& rng);

/// Random Pi_on on the truncated two-mode basis: independent random
/// [0, 1]-spectrum blocks per total photon number, zeros elsewhere.
PovmPair random_povm_pair(int truncation, std::mt19937_64& rng);

/// Random density matrix of dimension dim (Ginibre ensemble).
ComplexMatrix random_density_matrix(int dim, std::mt19937_64& rng);

}  // namespace entlab
