#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "entlab/fock.hpp"
#include "entlab/optics.hpp"
#include "entlab/parallel.hpp"
#include "entlab/probe_spec.hpp"
#include "entlab/probes.hpp"

namespace entlab {

/// Shots and clicks recorded for one probe.
struct CountRecord {
  std::string probe_id;
  std::int64_t shots = 0;
  std::int64_t on_count = 0;

  double frequency() const { return static_cast<double>(on_count) / static_cast<double>(shots); }
};

nlohmann::json counts_to_json(std::span<const CountRecord> counts);
std::vector<CountRecord> counts_from_json(const nlohmann::json& j);

/// Real coordinates of a Hermitian, global-phase-insensitive operator.
///
/// Diagonal entries come first (basis order), then for every pair (i < j) of
/// labels with equal total photon number, sqrt(2) Re and sqrt(2) Im of entry
/// (i, j). The sqrt(2) makes the map an isometry onto the Frobenius norm, so
/// Euclidean projections in parameter space are Frobenius projections.
class HermitianParameterization {
 public:
  explicit HermitianParameterization(int truncation);

  int truncation() const { return basis_.truncation(); }
  const FockBasis& basis() const { return basis_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(diag_count_ + 2 * pairs_.size()); }

  Eigen::VectorXd to_parameters(const Operator& op) const;
  Operator to_operator(const Eigen::VectorXd& x) const;

  /// Row of the forward map: the linear functional x -> <psi|Pi(x)|psi>.
  Eigen::RowVectorXd functional(const ComplexVector& psi) const;

  /// Off-diagonal coordinate pairs (row, col), row < col.
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs() const { return pairs_; }

 private:
  FockBasis basis_;
  std::size_t diag_count_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs_;
};

/// Matrix of the linear map from POVM parameters (HermitianParameterization)
/// to click probabilities, one row per probe.
Eigen::MatrixXd forward_map(std::span<const ProbeSpec> probes, int truncation);

/// Exact click probabilities of `povm` for each probe.
std::vector<double> exact_probabilities(const PovmPair& povm, std::span<const ProbeSpec> probes);

/// Binomial click counts; probabilities evaluated at N = 2. Deterministic in `seed`.
std::vector<CountRecord> simulate_counts(const DetectorModel& model, std::span<const ProbeSpec> probes,
                                         std::int64_t shots, std::uint64_t seed);

struct SolverOptions {
  int max_iterations = 100000;
  double tolerance = 1e-10;
  /// Weight each probe by its inverse binomial variance.
  bool weighted = false;
};

struct ReconstructionResult {
  PovmPair povm;
  Operator on_two_qubit;
  Operator off_two_qubit;
  double residual = 0.0;  // RMS probability misfit
  int iterations = 0;
  bool converged = false;
};

nlohmann::json to_json(const ReconstructionResult& r);

/// Least squares fit of Pi_on over Hermitian, global-phase-insensitive
/// operators with 0 <= Pi_on <= 1, by accelerated projected gradient.
ReconstructionResult reconstruct_convex(std::span<const CountRecord> counts, std::span<const ProbeSpec> probes,
                                        int truncation = 2, const SolverOptions& options = {});

/// Same solver on given probabilities (one per probe). `weights`, if given,
/// multiply the squared residuals.
ReconstructionResult reconstruct_from_probabilities(std::span<const double> probabilities,
                                                    std::span<const ProbeSpec> probes, int truncation = 2,
                                                    const SolverOptions& options = {},
                                                    std::span<const double> weights = {});

/// Split of the discrete phase average of one (s, v) probe group at order t
/// into the target term and the aliased term.
struct AliasTerms {
  Complex target;   // A_t: entries with Delta = t
  Complex aliased;  // B_t: entries with Delta = t + (2s+1)u, u != 0
  /// Coefficient C of every contributing entry: (row, col, Delta, C).
  struct Coefficient {
    Eigen::Index row;
    Eigen::Index col;
    int delta;
    double value;
  };
  std::vector<Coefficient> coefficients;
};

AliasTerms alias_terms(const Operator& pi, double alpha, double beta, int s, int t);

/// (1 / (2s+1)) sum_m p_m exp(-i t 2 pi m / (2s+1)).
Complex phase_average(std::span<const double> group_probabilities, int t);

/// Unconstrained analytic inversion on the phase grid: probabilities are in
/// phase_grid(N) order, generated from `amplitudes`. Peels off the entries
/// with Delta = N, N-1, ..., 0, subtracting aliased terms already known.
Operator reconstruct_analytic(std::span<const double> probabilities, const AmplitudeTable& amplitudes,
                              int truncation = 2);

struct BootstrapResult {
  std::vector<ReconstructionResult> runs;
  Operator mean_on;
  Eigen::MatrixXd std_re;  // per-entry sample standard deviation of Re(Pi_on)
  Eigen::MatrixXd std_im;
  std::vector<double> m_ln;  // measure of each truncated reconstruction
  double m_ln_mean = 0.0;
  double m_ln_std = 0.0;
  bool all_converged = true;
};

/// Repeated independent simulate-and-reconstruct runs with sub-seeds
/// derive_seed(seed, rep). `shots` = nullopt uses exact probabilities.
BootstrapResult bootstrap_errors(const DetectorModel& model, std::span<const ProbeSpec> probes,
                                 std::optional<std::int64_t> shots, int repetitions, std::uint64_t seed,
                                 Execution exec = Execution::parallel, const SolverOptions& options = {});

double sample_std(std::span<const double> xs);

}  // namespace entlab
