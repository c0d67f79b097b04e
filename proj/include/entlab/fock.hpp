#pragma once

#include <complex>
#include <compare>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace entlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Occupation numbers of the horizontal and vertical polarization modes.
struct BasisLabel {
  int n_h = 0;
  int n_v = 0;

  int total() const { return n_h + n_v; }
  auto operator<=>(const BasisLabel&) const = default;
};

/// Two-mode Fock basis truncated at total photon number N.
///
/// Labels are ordered by total photon number, then by descending n_h within a
/// total: for N = 2 this is (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
class FockBasis {
 public:
  explicit FockBasis(int truncation);

  int truncation() const { return truncation_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<BasisLabel>& labels() const { return labels_; }
  const BasisLabel& operator[](std::size_t i) const { return labels_[i]; }

  std::optional<std::size_t> index_of(const BasisLabel& label) const;

  /// Offset of the first label with the given total photon number.
  static std::size_t block_offset(int total) {
    return static_cast<std::size_t>(total) * (total + 1) / 2;
  }

  static std::size_t dimension(int truncation) {
    return static_cast<std::size_t>(truncation + 1) * (truncation + 2) / 2;
  }

  bool operator==(const FockBasis& other) const { return truncation_ == other.truncation_; }

 private:
  int truncation_;
  std::vector<BasisLabel> labels_;
};

FockBasis make_basis(int truncation);

/// Labels of the qubit-pair product basis, index = 2 * n_h + n_v.
const std::vector<BasisLabel>& two_qubit_labels();

/// Square complex matrix, optionally tagged with the basis labels of its rows.
/// An empty label list means "explicit dimension only" (e.g. four-mode operators).
class Operator {
 public:
  Operator() = default;
  explicit Operator(ComplexMatrix m);
  Operator(std::vector<BasisLabel> labels, ComplexMatrix m);
  Operator(const FockBasis& basis, ComplexMatrix m);

  static Operator identity(const FockBasis& basis);

  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }
  const std::vector<BasisLabel>& labels() const { return labels_; }
  bool has_labels() const { return !labels_.empty(); }

  Complex operator()(Eigen::Index r, Eigen::Index c) const { return matrix_(r, c); }
  Complex trace() const { return matrix_.trace(); }

  /// max |A - A^dagger| over all entries.
  double hermiticity_defect() const;
  bool is_hermitian(double tol = 1e-10) const { return hermiticity_defect() <= tol; }

 private:
  std::vector<BasisLabel> labels_;
  ComplexMatrix matrix_;
};

struct StateVector {
  FockBasis basis;
  ComplexVector amplitudes;

  double squared_norm() const { return amplitudes.squaredNorm(); }
};

/// Truncated two-mode coherent state |alpha, beta e^{i delta}>_N. Not renormalized.
StateVector coherent_state(double alpha, double beta, double delta, int truncation);

/// Same expansion for arbitrary complex mode amplitudes.
StateVector coherent_state(Complex alpha, Complex beta, int truncation);

/// Keep the (0,0) (0,1) (1,0) (1,1) entries of an operator on the N = 2 basis,
/// reordered into the qubit-pair product basis.
Operator truncate_to_two_qubits(const Operator& op);

enum class Subsystem { A, B };

Operator partial_transpose(const Operator& op, int dim_a, int dim_b, Subsystem which = Subsystem::B);

/// Trace over every factor not listed in `keep`. Factors are ordered with the
/// first one most significant in the row index.
Operator partial_trace(const Operator& op, std::span<const int> dims, std::span<const int> keep);

Operator kron(const Operator& a, const Operator& b);

enum class Hermiticity { hermitian, general };

/// Sum of |eigenvalues| (Hermitian) or of singular values (general).
double trace_norm(const Operator& op, Hermiticity kind = Hermiticity::hermitian);

/// Eigenvalues of a Hermitian operator in ascending order.
Eigen::VectorXd hermitian_eigenvalues(const Operator& op);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of the trace-normalized inputs.
double uhlmann_fidelity(const Operator& a, const Operator& b);

nlohmann::json to_json(const Operator& op);
Operator operator_from_json(const nlohmann::json& j);

}  // namespace entlab
