#include "entlab/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "entlab/errors.hpp"

namespace entlab {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kUnitaryTol = 1e-10;

double binomial(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }

double factorial(int n) { return std::tgamma(n + 1.0); }

Complex ipow(Complex z, int n) { return n == 0 ? Complex(1.0) : std::pow(z, n); }

void check_unit_interval(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " + std::to_string(x));
  }
}

}  // namespace

Jones jones_hwp(double theta_deg) {
  const double c = std::cos(2.0 * theta_deg * kDeg);
  const double s = std::sin(2.0 * theta_deg * kDeg);
  Jones u;
  u << c, s, s, -c;
  return u;
}

Jones jones_qwp(double theta_deg) {
  const double c = std::cos(2.0 * theta_deg * kDeg);
  const double s = std::sin(2.0 * theta_deg * kDeg);
  const Complex i(0.0, 1.0);
  Jones u;
  u << 1.0 - i * c, -i * s, -i * s, 1.0 + i * c;
  return u / std::sqrt(2.0);
}

ProbeSpec waveplates_to_probe(const WavePlateSetting& setting, std::string id) {
  if (!(setting.power >= 0.0)) {
    throw ValidationError("wave-plate setting: power must be non-negative");
  }
  const Eigen::Vector2cd input(std::sqrt(setting.power), 0.0);
  const Eigen::Vector2cd out = jones_hwp(setting.theta_h_deg) * jones_qwp(setting.theta_q_deg) * input;

  // Rounding in cos/sin of exact multiples of 45 degrees leaves ~1e-17
  // residues where an amplitude is analytically zero.
  const double floor = 1e-12 * std::max(1.0, std::sqrt(setting.power));
  double alpha = std::abs(out(0));
  double beta = std::abs(out(1));
  std::optional<double> delta;
  if (alpha <= floor) alpha = 0.0;
  if (beta <= floor) beta = 0.0;
  if (alpha > 0.0 && beta > 0.0) {
    double d = std::arg(out(1) * std::conj(out(0)));
    // Report the half-open range (-pi, pi].
    if (d <= -std::numbers::pi + 1e-12) d = std::numbers::pi;
    delta = d;
  }
  return ProbeSpec::make(std::move(id), alpha, beta, delta, alpha * alpha + beta * beta);
}

void DetectorModel::validate() const {
  check_unit_interval(eta1, "eta1");
  check_unit_interval(eta2, "eta2");
  check_unit_interval(loss, "loss");
  if (!std::isfinite(hwp0_deg)) {
    throw ValidationError("hwp0_deg must be finite");
  }
  if (!pbs_present && loss != 0.0) {
    throw ValidationError("loss must be 0 when the PBS is absent");
  }
}

nlohmann::json to_json(const DetectorModel& m) {
  return {{"eta1", m.eta1}, {"eta2", m.eta2}, {"loss", m.loss}, {"hwp0_deg", m.hwp0_deg},
          {"pbs", m.pbs_present}};
}

DetectorModel detector_model_from_json(const nlohmann::json& j) {
  DetectorModel m;
  try {
    m.eta1 = j.at("eta1").get<double>();
    m.eta2 = j.at("eta2").get<double>();
    m.loss = j.value("loss", 0.0);
    m.hwp0_deg = j.value("hwp0_deg", 22.5);
    m.pbs_present = j.value("pbs", true);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("detector model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

PovmPair PovmPair::from_on(Operator on, int truncation) {
  const Eigen::Index n = on.dim();
  ComplexMatrix off = ComplexMatrix::Identity(n, n) - on.matrix();
  Operator off_op(on.labels(), std::move(off));
  return PovmPair(std::move(on), std::move(off_op), truncation);
}

std::string povm_invariant_violation(const PovmPair& povm, bool two_mode) {
  const Operator& on = povm.on();
  const Operator& off = povm.off();
  const Eigen::Index n = on.dim();
  const double completeness =
      (on.matrix() + off.matrix() - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (completeness > 1e-10) {
    return "completeness defect " + std::to_string(completeness);
  }
  if (!on.is_hermitian(1e-10) || !off.is_hermitian(1e-10)) {
    return "POVM element is not Hermitian";
  }
  if (hermitian_eigenvalues(on).minCoeff() < -1e-9) return "Pi_on is not PSD";
  if (hermitian_eigenvalues(off).minCoeff() < -1e-9) return "Pi_off is not PSD";
  if (two_mode && on.has_labels()) {
    const auto& labels = on.labels();
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        if (labels[r].total() != labels[c].total() && std::abs(on(r, c)) > 1e-10) {
          return "structural zero violated at (" + std::to_string(r) + "," + std::to_string(c) + ")";
        }
      }
    }
  }
  return {};
}

Operator mode_unitary_to_fock(const Jones& u, int truncation) {
  if ((u.adjoint() * u - Jones::Identity()).cwiseAbs().maxCoeff() > kUnitaryTol) {
    throw ValidationError("mode transformation is not unitary");
  }
  const FockBasis basis(truncation);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const auto [n_h, n_v] = basis[col];
    const int total = n_h + n_v;
    const double norm_in = std::sqrt(factorial(n_h) * factorial(n_v));
    // (u11 a_H^+ + u21 a_V^+)^n_h (u12 a_H^+ + u22 a_V^+)^n_v |0> / sqrt(n_h! n_v!)
    for (int j = 0; j <= n_h; ++j) {
      const Complex from_h = binomial(n_h, j) * ipow(u(0, 0), j) * ipow(u(1, 0), n_h - j);
      for (int k = 0; k <= n_v; ++k) {
        const Complex from_v = binomial(n_v, k) * ipow(u(0, 1), k) * ipow(u(1, 1), n_v - k);
        const int out_h = j + k;
        const auto row = *basis.index_of({out_h, total - out_h});
        out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
            from_h * from_v * std::sqrt(factorial(out_h) * factorial(total - out_h)) / norm_in;
      }
    }
  }
  return Operator(basis, std::move(out));
}

PovmPair onoff_povm_single_mode(double eta, int truncation) {
  check_unit_interval(eta, "eta");
  if (truncation < 0) throw ValidationError("truncation order must be non-negative");
  const Eigen::Index dim = truncation + 1;
  ComplexMatrix on = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index n = 0; n < dim; ++n) {
    on(n, n) = 1.0 - std::pow(1.0 - eta, static_cast<double>(n));
  }
  return PovmPair::from_on(Operator(std::move(on)), truncation);
}

PovmPair theory_povm(const DetectorModel& model, int truncation) {
  model.validate();
  const FockBasis basis(truncation);
  const Operator mixer = mode_unitary_to_fock(jones_hwp(model.hwp0_deg), truncation);
  const double keep_h = 1.0 - model.eta1;
  const double keep_v = 1.0 - model.effective_eta2();
  // Both click detectors are diagonal in the arm photon numbers; the OR of the
  // two "no click" events is their product.
  Eigen::VectorXcd no_click(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    no_click(static_cast<Eigen::Index>(i)) =
        std::pow(keep_h, basis[i].n_h) * std::pow(keep_v, basis[i].n_v);
  }
  const ComplexMatrix& u = mixer.matrix();
  ComplexMatrix off = u.adjoint() * no_click.asDiagonal() * u;
  ComplexMatrix on = ComplexMatrix::Identity(off.rows(), off.cols()) - off;
  on = (0.5 * (on + on.adjoint())).eval();
  return PovmPair::from_on(Operator(basis, std::move(on)), truncation);
}

double detection_probability(const ProbeSpec& probe, const PovmPair& povm) {
  const StateVector psi = probe.state(povm.truncation());
  if (psi.amplitudes.size() != povm.on().dim()) {
    throw ValidationError("probe and POVM truncations differ");
  }
  const double p = psi.amplitudes.dot(povm.on().matrix() * psi.amplitudes).real();
  if (p < -1e-9 || p > 1.0 + 1e-9) {
    throw ValidationError("detection probability " + std::to_string(p) + " for probe '" + probe.id +
                          "' lies outside [0, 1]; the POVM is inconsistent");
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace entlab
