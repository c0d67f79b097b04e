#include <cmath>
#include <numbers>

#include "entlab/errors.hpp"
#include "entlab/tomography.hpp"

namespace entlab {

namespace {

int truncation_for_dimension(Eigen::Index dim) {
  for (int n = 0; FockBasis::dimension(n) <= static_cast<std::size_t>(dim); ++n) {
    if (FockBasis::dimension(n) == static_cast<std::size_t>(dim)) return n;
  }
  throw ValidationError("dimension " + std::to_string(dim) + " is not a two-mode Fock basis size");
}

double factorial(int n) { return std::tgamma(n + 1.0); }

double real_pow(double x, int n) { return n == 0 ? 1.0 : std::pow(x, n); }

// Coefficient of Pi[(k, n-k), (l, n-l)] in p(alpha, beta e^{i delta}), without
// the phase factor e^{i delta (k - l)}.
double coefficient(double alpha, double beta, int n, int k, int l) {
  return std::exp(-alpha * alpha - beta * beta) * real_pow(alpha, k + l) * real_pow(beta, 2 * n - k - l) /
         std::sqrt(factorial(k) * factorial(n - k) * factorial(l) * factorial(n - l));
}

// Index of (k, n - k) in the canonical basis.
Eigen::Index label_index(int n, int k) {
  return static_cast<Eigen::Index>(FockBasis::block_offset(n)) + (n - k);
}

// Congruence modulo a positive period.
bool congruent(int a, int b, int period) { return ((a - b) % period + period) % period == 0; }

}  // namespace

AliasTerms alias_terms(const Operator& pi, double alpha, double beta, int s, int t) {
  const int truncation = truncation_for_dimension(pi.dim());
  if (s < 0) throw ValidationError("phase level s must be non-negative");
  const int period = 2 * s + 1;
  AliasTerms out{0.0, 0.0, {}};
  for (int n = 0; n <= truncation; ++n) {
    for (int k = 0; k <= n; ++k) {
      for (int l = 0; l <= n; ++l) {
        const int delta = k - l;
        if (!congruent(delta, t, period)) continue;
        const double c = coefficient(alpha, beta, n, k, l);
        const Eigen::Index row = label_index(n, k);
        const Eigen::Index col = label_index(n, l);
        (delta == t ? out.target : out.aliased) += pi(row, col) * c;
        out.coefficients.push_back({row, col, delta, c});
      }
    }
  }
  return out;
}

Complex phase_average(std::span<const double> group_probabilities, int t) {
  const auto period = static_cast<int>(group_probabilities.size());
  if (period % 2 == 0) throw ValidationError("a phase group holds 2s+1 probabilities");
  Complex sum = 0.0;
  for (int m = 0; m < period; ++m) {
    sum += group_probabilities[m] * std::polar(1.0, -2.0 * std::numbers::pi * t * m / period);
  }
  return sum / static_cast<double>(period);
}

Operator reconstruct_analytic(std::span<const double> probabilities, const AmplitudeTable& amplitudes,
                              int truncation) {
  if (amplitudes.truncation() != truncation) {
    throw ValidationError("amplitude table truncation does not match N");
  }
  const auto grid = phase_grid(truncation);
  if (probabilities.size() != grid.size()) {
    throw ValidationError("expected " + std::to_string(grid.size()) + " probabilities on the phase grid, got " +
                          std::to_string(probabilities.size()));
  }
  // Start of each (s, v) group within the grid ordering.
  std::vector<std::vector<std::size_t>> group_start(static_cast<std::size_t>(truncation) + 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].m == 0) group_start[grid[i].s].push_back(i);
  }

  const FockBasis basis(truncation);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  ComplexMatrix pi = ComplexMatrix::Zero(dim, dim);

  for (int t = truncation; t >= 0; --t) {
    // Unknown entries with Delta = k - l = t.
    struct Unknown {
      Eigen::Index row, col;
      int n, k;
    };
    std::vector<Unknown> unknowns;
    for (int n = t; n <= truncation; ++n) {
      for (int k = t; k <= n; ++k) {
        unknowns.push_back({label_index(n, k), label_index(n, k - t), n, k});
      }
    }
    const auto size = static_cast<Eigen::Index>(unknowns.size());
    Eigen::MatrixXd system(size, size);
    Eigen::VectorXcd rhs(size);
    Eigen::Index eq = 0;
    for (int s = t; s <= truncation; ++s) {
      const int period = 2 * s + 1;
      for (int v = 0; v <= truncation - s; ++v) {
        const auto& amp = amplitudes.at(s, v);
        const std::size_t start = group_start[s][v];
        Complex value = phase_average(probabilities.subspan(start, static_cast<std::size_t>(period)), t);
        // Aliased entries all have |Delta| > t and are already known.
        for (int n = 0; n <= truncation; ++n) {
          for (int k = 0; k <= n; ++k) {
            for (int l = 0; l <= n; ++l) {
              if (k - l == t || !congruent(k - l, t, period)) continue;
              value -= pi(label_index(n, k), label_index(n, l)) * coefficient(amp.alpha, amp.beta, n, k, l);
            }
          }
        }
        for (Eigen::Index u = 0; u < size; ++u) {
          const auto& x = unknowns[u];
          system(eq, u) = coefficient(amp.alpha, amp.beta, x.n, x.k, x.k - t);
        }
        rhs(eq) = value;
        ++eq;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) {
      throw ValidationError("phase-grid amplitudes give a singular system at Delta = " + std::to_string(t));
    }
    const Eigen::VectorXd re = lu.solve(rhs.real());
    const Eigen::VectorXd im = lu.solve(rhs.imag());
    for (Eigen::Index u = 0; u < size; ++u) {
      const auto& x = unknowns[u];
      if (t == 0) {
        pi(x.row, x.col) = re(u);
      } else {
        pi(x.row, x.col) = Complex(re(u), im(u));
        pi(x.col, x.row) = Complex(re(u), -im(u));
      }
    }
  }
  return Operator(basis, std::move(pi));
}

}  // namespace entlab
