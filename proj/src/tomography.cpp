#include "entlab/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "entlab/entanglement.hpp"
#include "entlab/errors.hpp"

namespace entlab {

namespace {

const double kSqrt2 = std::numbers::sqrt2;

// Frobenius projection onto {0 <= Pi <= 1} within the global-phase-insensitive
// subspace: clip eigenvalues of each photon-number block separately, so the
// entries between blocks stay exactly zero.
Operator project_to_unit_interval(const Operator& op, int truncation) {
  ComplexMatrix out = ComplexMatrix::Zero(op.dim(), op.dim());
  for (int n = 0; n <= truncation; ++n) {
    const auto offset = static_cast<Eigen::Index>(FockBasis::block_offset(n));
    const Eigen::Index size = n + 1;
    ComplexMatrix block = op.matrix().block(offset, offset, size, size);
    block = (0.5 * (block + block.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(block);
    if (es.info() != Eigen::Success) {
      throw NumericalError("eigendecomposition failed during projection");
    }
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
    out.block(offset, offset, size, size) =
        es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
  }
  return Operator(op.labels(), std::move(out));
}

ReconstructionResult make_result(const Operator& on, int truncation, double residual, int iterations,
                                 bool converged) {
  PovmPair povm = PovmPair::from_on(on, truncation);
  Operator on4 = truncation == 2 ? truncate_to_two_qubits(povm.on()) : Operator();
  Operator off4 = truncation == 2 ? truncate_to_two_qubits(povm.off()) : Operator();
  return ReconstructionResult{std::move(povm), std::move(on4), std::move(off4), residual, iterations, converged};
}

}  // namespace

nlohmann::json counts_to_json(std::span<const CountRecord> counts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : counts) {
    out.push_back({{"probe_id", c.probe_id}, {"shots", c.shots}, {"on_count", c.on_count}});
  }
  return out;
}

std::vector<CountRecord> counts_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("counts file must hold a JSON array");
  std::vector<CountRecord> counts;
  try {
    for (const auto& e : j) {
      CountRecord c{e.at("probe_id").get<std::string>(), e.at("shots").get<std::int64_t>(),
                    e.at("on_count").get<std::int64_t>()};
      if (c.shots <= 0) throw ValidationError("counts for '" + c.probe_id + "': shots must be positive");
      if (c.on_count < 0 || c.on_count > c.shots) {
        throw ValidationError("counts for '" + c.probe_id + "': on_count outside [0, shots]");
      }
      counts.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("counts JSON: ") + e.what());
  }
  return counts;
}

HermitianParameterization::HermitianParameterization(int truncation)
    : basis_(truncation), diag_count_(basis_.size()) {
  for (int n = 0; n <= truncation; ++n) {
    const auto offset = static_cast<Eigen::Index>(FockBasis::block_offset(n));
    for (Eigen::Index i = 0; i <= n; ++i) {
      for (Eigen::Index j = i + 1; j <= n; ++j) {
        pairs_.emplace_back(offset + i, offset + j);
      }
    }
  }
}

Eigen::VectorXd HermitianParameterization::to_parameters(const Operator& op) const {
  if (op.dim() != static_cast<Eigen::Index>(basis_.size())) {
    throw ValidationError("operator dimension does not match the parameterization");
  }
  Eigen::VectorXd x(size());
  const auto d = static_cast<Eigen::Index>(diag_count_);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = op(i, i).real();
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const Complex z = 0.5 * (op(pairs_[p].first, pairs_[p].second) + std::conj(op(pairs_[p].second, pairs_[p].first)));
    x(d + 2 * static_cast<Eigen::Index>(p)) = kSqrt2 * z.real();
    x(d + 2 * static_cast<Eigen::Index>(p) + 1) = kSqrt2 * z.imag();
  }
  return x;
}

Operator HermitianParameterization::to_operator(const Eigen::VectorXd& x) const {
  if (x.size() != size()) throw ValidationError("parameter vector has the wrong length");
  const auto n = static_cast<Eigen::Index>(basis_.size());
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  const auto d = static_cast<Eigen::Index>(diag_count_);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = x(i);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const Complex z(x(d + 2 * static_cast<Eigen::Index>(p)), x(d + 2 * static_cast<Eigen::Index>(p) + 1));
    m(pairs_[p].first, pairs_[p].second) = z / kSqrt2;
    m(pairs_[p].second, pairs_[p].first) = std::conj(z) / kSqrt2;
  }
  return Operator(basis_, std::move(m));
}

Eigen::RowVectorXd HermitianParameterization::functional(const ComplexVector& psi) const {
  if (psi.size() != static_cast<Eigen::Index>(basis_.size())) {
    throw ValidationError("state dimension does not match the parameterization");
  }
  Eigen::RowVectorXd row(size());
  const auto d = static_cast<Eigen::Index>(diag_count_);
  for (Eigen::Index i = 0; i < d; ++i) row(i) = std::norm(psi(i));
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    // 2 Re(conj(psi_i) Pi_ij psi_j) with Pi_ij = (x_re + i x_im) / sqrt(2)
    const Complex c = std::conj(psi(pairs_[p].first)) * psi(pairs_[p].second);
    row(d + 2 * static_cast<Eigen::Index>(p)) = kSqrt2 * c.real();
    row(d + 2 * static_cast<Eigen::Index>(p) + 1) = -kSqrt2 * c.imag();
  }
  return row;
}

Eigen::MatrixXd forward_map(std::span<const ProbeSpec> probes, int truncation) {
  const HermitianParameterization param(truncation);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(probes.size()), param.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) = param.functional(probes[i].state(truncation).amplitudes);
  }
  return f;
}

std::vector<double> exact_probabilities(const PovmPair& povm, std::span<const ProbeSpec> probes) {
  std::vector<double> p;
  p.reserve(probes.size());
  for (const auto& probe : probes) p.push_back(detection_probability(probe, povm));
  return p;
}

std::vector<CountRecord> simulate_counts(const DetectorModel& model, std::span<const ProbeSpec> probes,
                                         std::int64_t shots, std::uint64_t seed) {
  if (shots <= 0) throw ValidationError("shots must be positive");
  const PovmPair povm = theory_povm(model, 2);
  std::mt19937_64 rng(seed);
  std::vector<CountRecord> counts;
  counts.reserve(probes.size());
  for (const auto& probe : probes) {
    const double p = detection_probability(probe, povm);
    std::binomial_distribution<std::int64_t> draw(shots, p);
    counts.push_back({probe.id, shots, draw(rng)});
  }
  return counts;
}

ReconstructionResult reconstruct_from_probabilities(std::span<const double> probabilities,
                                                    std::span<const ProbeSpec> probes, int truncation,
                                                    const SolverOptions& options,
                                                    std::span<const double> weights) {
  if (probabilities.size() != probes.size()) {
    throw ValidationError("one probability per probe required");
  }
  if (!weights.empty() && weights.size() != probes.size()) {
    throw ValidationError("one weight per probe required");
  }
  if (probes.empty()) throw ValidationError("reconstruction needs at least one probe");
  if (options.max_iterations < 1 || !(options.tolerance > 0.0)) {
    throw ValidationError("solver needs max_iterations >= 1 and tolerance > 0");
  }

  const HermitianParameterization param(truncation);
  const Eigen::MatrixXd forward = forward_map(probes, truncation);
  const auto rows = static_cast<Eigen::Index>(probes.size());
  const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(probabilities.data(), rows);
  Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(rows);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw ValidationError("weights must be non-negative");
    sqrt_w(static_cast<Eigen::Index>(i)) = std::sqrt(weights[i]);
  }
  const Eigen::MatrixXd a = sqrt_w.asDiagonal() * forward;
  const Eigen::VectorXd b = sqrt_w.cwiseProduct(target);

  auto project = [&](const Eigen::VectorXd& x) {
    return param.to_parameters(project_to_unit_interval(param.to_operator(x), truncation));
  };

  // Warm start at the (least-norm) unconstrained solution.
  Eigen::VectorXd x = project(Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(a).solve(b));

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double lipschitz = svd.singularValues().size() > 0 ? std::pow(svd.singularValues()(0), 2) : 0.0;

  int iterations = 0;
  bool converged = lipschitz == 0.0;
  if (!converged) {
    const double step = 1.0 / lipschitz;
    Eigen::VectorXd y = x;
    double momentum = 1.0;
    for (iterations = 1; iterations <= options.max_iterations; ++iterations) {
      const Eigen::VectorXd grad = a.transpose() * (a * y - b);
      Eigen::VectorXd next = project(y - step * grad);
      const double change = (next - x).norm();
      if (change < options.tolerance) {
        x = std::move(next);
        converged = true;
        break;
      }
      const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      if ((y - next).dot(next - x) > 0.0) {
        // Adaptive restart: momentum is pointing uphill.
        y = next;
        momentum = 1.0;
      } else {
        y = next + ((momentum - 1.0) / next_momentum) * (next - x);
        momentum = next_momentum;
      }
      x = std::move(next);
    }
    if (!converged) iterations = options.max_iterations;
  }

  const double residual = std::sqrt((forward * x - target).squaredNorm() / static_cast<double>(rows));
  return make_result(param.to_operator(x), truncation, residual, iterations, converged);
}

ReconstructionResult reconstruct_convex(std::span<const CountRecord> counts, std::span<const ProbeSpec> probes,
                                        int truncation, const SolverOptions& options) {
  std::unordered_map<std::string, const ProbeSpec*> by_id;
  for (const auto& p : probes) by_id.emplace(p.id, &p);
  std::vector<ProbeSpec> used;
  std::vector<double> freq;
  std::vector<double> weights;
  for (const auto& c : counts) {
    const auto it = by_id.find(c.probe_id);
    if (it == by_id.end()) throw ValidationError("counts reference unknown probe id '" + c.probe_id + "'");
    if (c.shots <= 0 || c.on_count < 0 || c.on_count > c.shots) {
      throw ValidationError("infeasible counts for probe '" + c.probe_id + "'");
    }
    used.push_back(*it->second);
    freq.push_back(c.frequency());
    if (options.weighted) {
      // Laplace-smoothed binomial variance keeps zero-click probes finite.
      const double n = static_cast<double>(c.shots);
      const double smoothed = (static_cast<double>(c.on_count) + 1.0) / (n + 2.0);
      weights.push_back(n / (smoothed * (1.0 - smoothed)));
    }
  }
  if (options.weighted) {
    const double scale = *std::max_element(weights.begin(), weights.end());
    for (double& w : weights) w /= scale;
  }
  return reconstruct_from_probabilities(freq, used, truncation, options, weights);
}

nlohmann::json to_json(const ReconstructionResult& r) {
  nlohmann::json j{{"truncation", r.povm.truncation()},
                   {"on", to_json(r.povm.on())},
                   {"off", to_json(r.povm.off())},
                   {"residual", r.residual},
                   {"iterations", r.iterations},
                   {"converged", r.converged}};
  if (r.on_two_qubit.dim() > 0) {
    j["on_4x4"] = to_json(r.on_two_qubit);
    j["off_4x4"] = to_json(r.off_two_qubit);
  }
  return j;
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

BootstrapResult bootstrap_errors(const DetectorModel& model, std::span<const ProbeSpec> probes,
                                 std::optional<std::int64_t> shots, int repetitions, std::uint64_t seed,
                                 Execution exec, const SolverOptions& options) {
  if (repetitions < 2) throw ValidationError("bootstrap needs at least 2 repetitions");
  if (shots && *shots <= 0) throw ValidationError("shots must be positive");
  model.validate();
  const int truncation = 2;
  const std::vector<double> exact =
      shots ? std::vector<double>{} : exact_probabilities(theory_povm(model, truncation), probes);

  std::vector<std::optional<ReconstructionResult>> slots(static_cast<std::size_t>(repetitions));
  for_each_index(slots.size(), exec, [&](std::size_t rep) {
    if (shots) {
      const auto counts = simulate_counts(model, probes, *shots, derive_seed(seed, rep));
      slots[rep] = reconstruct_convex(counts, probes, truncation, options);
    } else {
      slots[rep] = reconstruct_from_probabilities(exact, probes, truncation, options);
    }
  });

  BootstrapResult out;
  for (auto& s : slots) out.runs.push_back(std::move(*s));
  const Eigen::Index dim = out.runs.front().povm.on().dim();
  ComplexMatrix mean = ComplexMatrix::Zero(dim, dim);
  for (const auto& r : out.runs) {
    mean += r.povm.on().matrix();
    out.all_converged = out.all_converged && r.converged;
    out.m_ln.push_back(measure_of_povm(r.on_two_qubit));
  }
  mean /= static_cast<double>(repetitions);
  out.mean_on = Operator(out.runs.front().povm.on().labels(), mean);
  out.std_re = Eigen::MatrixXd::Zero(dim, dim);
  out.std_im = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<double> re(out.runs.size());
  std::vector<double> im(out.runs.size());
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      for (std::size_t k = 0; k < out.runs.size(); ++k) {
        re[k] = out.runs[k].povm.on()(r, c).real();
        im[k] = out.runs[k].povm.on()(r, c).imag();
      }
      out.std_re(r, c) = sample_std(re);
      out.std_im(r, c) = sample_std(im);
    }
  }
  double m_sum = 0.0;
  for (double m : out.m_ln) m_sum += m;
  out.m_ln_mean = m_sum / static_cast<double>(out.m_ln.size());
  out.m_ln_std = sample_std(out.m_ln);
  return out;
}

}  // namespace entlab
