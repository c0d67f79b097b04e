#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "entlab/fock.hpp"
#include "entlab/optics.hpp"
#include "entlab/parallel.hpp"

namespace entlab {

/// Declared A|B split of a product space, dim = dim_a * dim_b.
struct Bipartition {
  int dim_a = 2;
  int dim_b = 2;
};

/// log2 || rho^{T_B} ||_1 of a density operator. Values within 1e-9 of zero
/// are reported as exactly zero.
double log_negativity(const Operator& rho, Bipartition cut = {});

/// Logarithmic negativity of the trace-normalized POVM element.
double measure_of_povm(const Operator& pi, Bipartition cut = {});

struct SwapOutcome {
  Operator rho_ad;     // normalized A-D state after the B-C outcome
  double probability;  // Tr[rho Pi_BC]
};

/// Two Bell pairs (U1 x V1)|Phi+>_AB and (U2 x V2)|Phi+>_CD; Pi_BC is applied
/// to the middle modes (index 2b + c) and A, D are kept. Explicit 16x16 algebra.
SwapOutcome swap_remaining_state(const Operator& pi_bc, const Jones& u1, const Jones& v1, const Jones& u2,
                                 const Jones& v2);

enum class SweepSource { theory, simulated, external };

std::string to_string(SweepSource s);

struct SweepPoint {
  double loss = 0.0;
  double m_ln = 0.0;
  std::optional<double> std_error;
  SweepSource source = SweepSource::theory;
  std::optional<Operator> povm;  // truncated 4x4 Pi_on (theory, or mean of runs)
  std::string error;             // non-empty when the point failed
};

struct TheoryMode {};

struct SimulatedMode {
  std::int64_t shots = 100000;
  int repetitions = 6;
  std::uint64_t seed = 1;
};

using SweepMode = std::variant<TheoryMode, SimulatedMode>;

/// M_LN of the detector Pi_on as a function of the loss in the second arm.
/// Simulated points run the full counts -> reconstruction -> measure pipeline
/// on the 19 experimental probes; std_error is the sample standard deviation
/// over repetitions.
std::vector<SweepPoint> loss_sweep(double eta1, double eta2, std::span<const double> grid, const SweepMode& mode,
                                   Execution exec = Execution::parallel);

/// Evenly spaced grid from a "start:stop:steps" string.
std::vector<double> parse_grid(const std::string& spec);

std::string sweep_to_csv(std::span<const SweepPoint> points);

struct SwapCheckReport {
  int trials = 0;
  std::uint64_t seed = 0;
  double max_abs_difference = 0.0;
  double tolerance = 1e-9;
  bool passed = false;
};

/// Checks E_LN(rho_AD) == M_LN(Pi_BC) over random POVM elements and local
/// unitaries; trial i draws from derive_seed(seed, i).
SwapCheckReport swap_check(int trials, std::uint64_t seed, Execution exec = Execution::parallel);

}  // namespace entlab
