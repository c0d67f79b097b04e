#include "entlab/entanglement.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include "entlab/errors.hpp"
#include "entlab/probes.hpp"
#include "entlab/random.hpp"
#include "entlab/tomography.hpp"

namespace entlab {

namespace {

constexpr double kZeroFloor = 1e-9;

void check_cut(const Operator& op, Bipartition cut) {
  if (cut.dim_a <= 0 || cut.dim_b <= 0 || op.dim() != static_cast<Eigen::Index>(cut.dim_a) * cut.dim_b) {
    throw ValidationError("operator of dimension " + std::to_string(op.dim()) + " does not match the " +
                          std::to_string(cut.dim_a) + "x" + std::to_string(cut.dim_b) + " bipartition");
  }
  if (!op.is_hermitian(kZeroFloor)) throw ValidationError("operator is not Hermitian");
}

double snapped_log_negativity(const ComplexMatrix& rho, Bipartition cut) {
  const Operator sym(0.5 * (rho + rho.adjoint()));
  const double norm = trace_norm(partial_transpose(sym, cut.dim_a, cut.dim_b, Subsystem::B));
  const double value = std::log2(norm);
  return std::abs(value) <= kZeroFloor ? 0.0 : value;
}

void check_unitary(const Jones& u, const char* name) {
  if ((u.adjoint() * u - Jones::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError(std::string(name) + " is not unitary");
  }
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

double log_negativity(const Operator& rho, Bipartition cut) {
  check_cut(rho, cut);
  const Eigen::VectorXd ev = hermitian_eigenvalues(rho);
  if (ev.minCoeff() < -kZeroFloor) {
    throw ValidationError("density operator is not positive semidefinite (eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
  }
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > kZeroFloor) {
    throw ValidationError("density operator has trace " + std::to_string(tr) + ", expected 1");
  }
  return snapped_log_negativity(rho.matrix(), cut);
}

double measure_of_povm(const Operator& pi, Bipartition cut) {
  check_cut(pi, cut);
  const Eigen::VectorXd ev = hermitian_eigenvalues(pi);
  if (ev.minCoeff() < -kZeroFloor) {
    throw ValidationError("POVM element is not positive semidefinite (eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
  }
  const double tr = pi.trace().real();
  if (!(tr > 1e-12)) {
    throw ValidationError("POVM element has zero trace");
  }
  return snapped_log_negativity(pi.matrix() / tr, cut);
}

SwapOutcome swap_remaining_state(const Operator& pi_bc, const Jones& u1, const Jones& v1, const Jones& u2,
                                 const Jones& v2) {
  if (pi_bc.dim() != 4) throw ValidationError("Pi_BC must be 4x4");
  const Eigen::VectorXd ev = hermitian_eigenvalues(pi_bc);
  if (ev.minCoeff() < -kZeroFloor || ev.maxCoeff() > 1.0 + kZeroFloor) {
    throw ValidationError("Pi_BC is not a valid POVM element (spectrum outside [0, 1])");
  }
  check_unitary(u1, "U1");
  check_unitary(v1, "V1");
  check_unitary(u2, "U2");
  check_unitary(v2, "V2");

  ComplexVector phi_plus = ComplexVector::Zero(4);
  phi_plus(0) = phi_plus(3) = 1.0 / std::sqrt(2.0);
  const ComplexVector psi1 = kron(Operator(ComplexMatrix(u1)), Operator(ComplexMatrix(v1))).matrix() * phi_plus;
  const ComplexVector psi2 = kron(Operator(ComplexMatrix(u2)), Operator(ComplexMatrix(v2))).matrix() * phi_plus;

  const Operator rho = kron(Operator(ComplexMatrix(psi1 * psi1.adjoint())), Operator(ComplexMatrix(psi2 * psi2.adjoint())));
  const Operator id2(ComplexMatrix::Identity(2, 2));
  const Operator lifted = kron(id2, kron(Operator(pi_bc.matrix()), id2));
  const Operator conditioned(ComplexMatrix(rho.matrix() * lifted.matrix()));

  const double p = conditioned.trace().real();
  if (!(p >= 1e-14)) {
    throw ValidationError("outcome probability " + std::to_string(p) + " is too small to condition on");
  }
  const std::array<int, 4> dims{2, 2, 2, 2};
  const std::array<int, 2> keep{0, 3};
  const Operator reduced = partial_trace(conditioned, dims, keep);
  ComplexMatrix rho_ad = reduced.matrix() / p;
  rho_ad = (0.5 * (rho_ad + rho_ad.adjoint())).eval();
  return {Operator(two_qubit_labels(), std::move(rho_ad)), std::min(p, 1.0)};
}

std::string to_string(SweepSource s) {
  switch (s) {
    case SweepSource::theory:
      return "theory";
    case SweepSource::simulated:
      return "simulated";
    case SweepSource::external:
      return "external";
  }
  return "unknown";
}

std::vector<SweepPoint> loss_sweep(double eta1, double eta2, std::span<const double> grid, const SweepMode& mode,
                                   Execution exec) {
  for (double l : grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("loss grid values must lie in [0, 1]");
  }
  DetectorModel base{eta1, eta2, 0.0, 22.5, true};
  base.validate();
  if (const auto* sim = std::get_if<SimulatedMode>(&mode)) {
    if (sim->shots <= 0) throw ValidationError("shots must be positive");
    if (sim->repetitions < 2) throw ValidationError("simulated sweep needs at least 2 repetitions");
  }
  const std::vector<ProbeSpec> probes = experimental_probe_set();

  std::vector<SweepPoint> points(grid.size());
  for_each_index(grid.size(), exec, [&](std::size_t i) {
    SweepPoint& pt = points[i];
    pt.loss = grid[i];
    DetectorModel model = base;
    model.loss = grid[i];
    try {
      if (std::holds_alternative<TheoryMode>(mode)) {
        pt.source = SweepSource::theory;
        Operator on4 = truncate_to_two_qubits(theory_povm(model, 2).on());
        pt.m_ln = measure_of_povm(on4);
        pt.povm = std::move(on4);
      } else {
        const auto& sim = std::get<SimulatedMode>(mode);
        pt.source = SweepSource::simulated;
        const BootstrapResult boot = bootstrap_errors(model, probes, sim.shots, sim.repetitions,
                                                      derive_seed(sim.seed, i), Execution::serial);
        pt.m_ln = boot.m_ln_mean;
        pt.std_error = boot.m_ln_std;
        pt.povm = truncate_to_two_qubits(boot.mean_on);
        if (!boot.all_converged) pt.error = "solver did not converge in every repetition";
      }
    } catch (const std::exception& e) {
      pt.error = e.what();
      pt.m_ln = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return points;
}

std::vector<double> parse_grid(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? std::string::npos : spec.find(':', first + 1);
  if (second == std::string::npos) {
    throw ValidationError("grid spec must look like start:stop:steps, got '" + spec + "'");
  }
  double start = 0.0;
  double stop = 0.0;
  int steps = 0;
  auto parse = [&](std::string_view text, auto& out) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      throw ValidationError("cannot parse '" + std::string(text) + "' in grid spec '" + spec + "'");
    }
  };
  const std::string_view view(spec);
  parse(view.substr(0, first), start);
  parse(view.substr(first + 1, second - first - 1), stop);
  parse(view.substr(second + 1), steps);
  if (steps < 1) throw ValidationError("grid needs at least one step");
  std::vector<double> grid;
  for (int i = 0; i < steps; ++i) {
    grid.push_back(steps == 1 ? start : start + (stop - start) * i / (steps - 1));
  }
  return grid;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::string out = "L,m_ln,stderr,source\n";
  for (const auto& p : points) {
    out += format_double(p.loss) + "," + format_double(p.m_ln) + "," +
           (p.std_error ? format_double(*p.std_error) : std::string()) + "," + to_string(p.source) + "\n";
  }
  return out;
}

SwapCheckReport swap_check(int trials, std::uint64_t seed, Execution exec) {
  if (trials < 1) throw ValidationError("swap check needs at least one trial");
  std::vector<double> diffs(static_cast<std::size_t>(trials));
  for_each_index(diffs.size(), exec, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    const Operator pi(random_povm_element(4, rng));
    const Jones u1 = random_unitary(2, rng);
    const Jones v1 = random_unitary(2, rng);
    const Jones u2 = random_unitary(2, rng);
    const Jones v2 = random_unitary(2, rng);
    const SwapOutcome out = swap_remaining_state(pi, u1, v1, u2, v2);
    diffs[i] = std::abs(log_negativity(out.rho_ad) - measure_of_povm(pi));
  });
  SwapCheckReport report;
  report.trials = trials;
  report.seed = seed;
  for (double d : diffs) report.max_abs_difference = std::max(report.max_abs_difference, d);
  report.passed = report.max_abs_difference <= report.tolerance;
  return report;
}

}  // namespace entlab
