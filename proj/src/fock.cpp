#include "entlab/fock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "entlab/errors.hpp"

namespace entlab {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kPsdTol = 1e-9;

double factorial(int n) { return std::tgamma(n + 1.0); }

// sqrt of a Hermitian PSD matrix; eigenvalues down to -kPsdTol are clipped to 0.
ComplexMatrix psd_sqrt(const ComplexMatrix& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericalError(std::string("eigendecomposition failed for ") + what);
  }
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -kPsdTol) {
    throw ValidationError(std::string(what) + " is not positive semidefinite (eigenvalue " +
                          std::to_string(ev.minCoeff()) + ")");
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

FockBasis::FockBasis(int truncation) : truncation_(truncation) {
  if (truncation < 0) {
    throw ValidationError("truncation order must be non-negative");
  }
  labels_.reserve(dimension(truncation));
  for (int total = 0; total <= truncation; ++total) {
    for (int n_h = total; n_h >= 0; --n_h) {
      labels_.push_back({n_h, total - n_h});
    }
  }
}

std::optional<std::size_t> FockBasis::index_of(const BasisLabel& label) const {
  if (label.n_h < 0 || label.n_v < 0 || label.total() > truncation_) {
    return std::nullopt;
  }
  return block_offset(label.total()) + static_cast<std::size_t>(label.n_v);
}

FockBasis make_basis(int truncation) { return FockBasis(truncation); }

const std::vector<BasisLabel>& two_qubit_labels() {
  static const std::vector<BasisLabel> labels{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  return labels;
}

Operator::Operator(ComplexMatrix m) : matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw ValidationError("operator matrix must be square");
  }
}

Operator::Operator(std::vector<BasisLabel> labels, ComplexMatrix m)
    : labels_(std::move(labels)), matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw ValidationError("operator matrix must be square");
  }
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != matrix_.rows()) {
    throw ValidationError("label count " + std::to_string(labels_.size()) +
                          " does not match dimension " + std::to_string(matrix_.rows()));
  }
}

Operator::Operator(const FockBasis& basis, ComplexMatrix m) : Operator(basis.labels(), std::move(m)) {}

Operator Operator::identity(const FockBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  return Operator(basis, ComplexMatrix::Identity(n, n));
}

double Operator::hermiticity_defect() const {
  if (matrix_.size() == 0) return 0.0;
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

StateVector coherent_state(Complex alpha, Complex beta, int truncation) {
  FockBasis basis(truncation);
  ComplexVector amps(static_cast<Eigen::Index>(basis.size()));
  const double envelope = std::exp(-0.5 * (std::norm(alpha) + std::norm(beta)));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto [n_h, n_v] = basis[i];
    // std::pow(Complex(0), 0) is 1, matching the vacuum term.
    const Complex a = n_h == 0 ? Complex(1.0) : std::pow(alpha, n_h);
    const Complex b = n_v == 0 ? Complex(1.0) : std::pow(beta, n_v);
    amps(static_cast<Eigen::Index>(i)) = envelope * a * b / std::sqrt(factorial(n_h) * factorial(n_v));
  }
  return {std::move(basis), std::move(amps)};
}

StateVector coherent_state(double alpha, double beta, double delta, int truncation) {
  return coherent_state(Complex(alpha), std::polar(beta, delta), truncation);
}

Operator truncate_to_two_qubits(const Operator& op) {
  const FockBasis basis(2);
  if (op.dim() != static_cast<Eigen::Index>(basis.size())) {
    throw ValidationError("truncate_to_two_qubits expects a 6x6 operator on the N = 2 basis, got " +
                          std::to_string(op.dim()) + "x" + std::to_string(op.dim()));
  }
  const auto& product = two_qubit_labels();
  std::array<Eigen::Index, 4> src{};
  for (std::size_t i = 0; i < product.size(); ++i) {
    src[i] = static_cast<Eigen::Index>(*basis.index_of(product[i]));
  }
  ComplexMatrix out(4, 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      out(r, c) = op(src[r], src[c]);
    }
  }
  return Operator(product, std::move(out));
}

Operator partial_transpose(const Operator& op, int dim_a, int dim_b, Subsystem which) {
  if (dim_a <= 0 || dim_b <= 0 || op.dim() != static_cast<Eigen::Index>(dim_a) * dim_b) {
    throw ValidationError("operator of dimension " + std::to_string(op.dim()) +
                          " is not a product of " + std::to_string(dim_a) + " x " +
                          std::to_string(dim_b));
  }
  const ComplexMatrix& m = op.matrix();
  ComplexMatrix out(m.rows(), m.cols());
  for (int i = 0; i < dim_a; ++i) {
    for (int j = 0; j < dim_b; ++j) {
      for (int k = 0; k < dim_a; ++k) {
        for (int l = 0; l < dim_b; ++l) {
          // <i j| X^T |k l>
          const Complex value = which == Subsystem::B ? m(i * dim_b + l, k * dim_b + j)
                                                      : m(k * dim_b + j, i * dim_b + l);
          out(i * dim_b + j, k * dim_b + l) = value;
        }
      }
    }
  }
  return Operator(op.labels(), std::move(out));
}

Operator partial_trace(const Operator& op, std::span<const int> dims, std::span<const int> keep) {
  const std::size_t factors = dims.size();
  if (factors == 0) {
    throw ValidationError("partial_trace needs at least one factor");
  }
  Eigen::Index total = 1;
  for (int d : dims) {
    if (d <= 0) throw ValidationError("partial_trace: factor dimensions must be positive");
    total *= d;
  }
  if (total != op.dim()) {
    throw ValidationError("partial_trace: factor dimensions multiply to " + std::to_string(total) +
                          ", operator has dimension " + std::to_string(op.dim()));
  }
  std::vector<bool> kept(factors, false);
  for (int k : keep) {
    if (k < 0 || static_cast<std::size_t>(k) >= factors || kept[k]) {
      throw ValidationError("partial_trace: invalid or repeated factor index in keep set");
    }
    kept[k] = true;
  }

  Eigen::Index out_dim = 1;
  Eigen::Index traced_dim = 1;
  for (std::size_t f = 0; f < factors; ++f) {
    if (kept[f]) {
      out_dim *= dims[f];
    } else {
      traced_dim *= dims[f];
    }
  }

  // Compose a full index from a kept multi-index and a traced multi-index.
  auto compose = [&](Eigen::Index kept_index, Eigen::Index traced_index) {
    Eigen::Index full = 0;
    Eigen::Index kept_stride = out_dim;
    Eigen::Index traced_stride = traced_dim;
    for (std::size_t f = 0; f < factors; ++f) {
      Eigen::Index digit;
      if (kept[f]) {
        kept_stride /= dims[f];
        digit = (kept_index / kept_stride) % dims[f];
      } else {
        traced_stride /= dims[f];
        digit = (traced_index / traced_stride) % dims[f];
      }
      full = full * dims[f] + digit;
    }
    return full;
  };

  const ComplexMatrix& m = op.matrix();
  ComplexMatrix out = ComplexMatrix::Zero(out_dim, out_dim);
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    for (Eigen::Index c = 0; c < out_dim; ++c) {
      Complex sum = 0.0;
      for (Eigen::Index t = 0; t < traced_dim; ++t) {
        sum += m(compose(r, t), compose(c, t));
      }
      out(r, c) = sum;
    }
  }
  return Operator(std::move(out));
}

Operator kron(const Operator& a, const Operator& b) {
  const ComplexMatrix& x = a.matrix();
  const ComplexMatrix& y = b.matrix();
  ComplexMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
  }
  return Operator(std::move(out));
}

Eigen::VectorXd hermitian_eigenvalues(const Operator& op) {
  if (!op.is_hermitian(kHermitianTol)) {
    throw ValidationError("operator is not Hermitian (defect " +
                          std::to_string(op.hermiticity_defect()) + ")");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(op.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite()) {
    throw NumericalError("Hermitian eigensolver did not converge");
  }
  return es.eigenvalues();
}

double trace_norm(const Operator& op, Hermiticity kind) {
  if (kind == Hermiticity::hermitian) {
    return hermitian_eigenvalues(op).cwiseAbs().sum();
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(op.matrix());
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw NumericalError("singular value decomposition failed");
  }
  return svd.singularValues().sum();
}

double uhlmann_fidelity(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError("fidelity arguments have different dimensions");
  }
  if (!a.is_hermitian(kHermitianTol) || !b.is_hermitian(kHermitianTol)) {
    throw ValidationError("fidelity arguments must be Hermitian");
  }
  const double tr_a = a.trace().real();
  const double tr_b = b.trace().real();
  if (tr_a <= 0.0 || tr_b <= 0.0) {
    throw ValidationError("fidelity arguments must have positive trace");
  }
  const ComplexMatrix rho = a.matrix() / tr_a;
  const ComplexMatrix sigma = b.matrix() / tr_b;
  const ComplexMatrix root = psd_sqrt(0.5 * (rho + rho.adjoint()), "first fidelity argument");
  // Validate the second argument too; its square root is not needed.
  psd_sqrt(0.5 * (sigma + sigma.adjoint()), "second fidelity argument");
  ComplexMatrix inner = root * sigma * root;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inner, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed in fidelity");
  }
  const double root_trace = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root_trace * root_trace, 0.0, 1.0);
}

nlohmann::json to_json(const Operator& op) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : op.labels()) {
    labels.push_back({l.n_h, l.n_v});
  }
  nlohmann::json entries = nlohmann::json::array();
  const ComplexMatrix& m = op.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      entries.push_back({m(r, c).real(), m(r, c).imag()});
    }
  }
  return {{"n", op.dim()}, {"labels", std::move(labels)}, {"re_im", std::move(entries)}};
}

Operator operator_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    if (n < 0) throw ValidationError("operator: negative dimension");
    std::vector<BasisLabel> labels;
    for (const auto& l : j.at("labels")) {
      if (!l.is_array() || l.size() != 2) throw ValidationError("operator: label must be [nH, nV]");
      labels.push_back({l[0].get<int>(), l[1].get<int>()});
    }
    const auto& entries = j.at("re_im");
    if (!entries.is_array() || static_cast<Eigen::Index>(entries.size()) != n * n) {
      throw ValidationError("operator: re_im must hold n*n entries");
    }
    ComplexMatrix m(n, n);
    for (Eigen::Index k = 0; k < n * n; ++k) {
      const auto& e = entries[static_cast<std::size_t>(k)];
      if (!e.is_array() || e.size() != 2) throw ValidationError("operator: entry must be [re, im]");
      m(k / n, k % n) = Complex(e[0].get<double>(), e[1].get<double>());
    }
    return Operator(std::move(labels), std::move(m));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("operator JSON: ") + e.what());
  }
}

}  // namespace entlab
