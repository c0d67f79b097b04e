#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "entlab/fock.hpp"
#include "entlab/probe_spec.hpp"

namespace entlab {

/// 2x2 field transformation acting on (horizontal, vertical) amplitudes.
using Jones = Eigen::Matrix2cd;

Jones jones_hwp(double theta_deg);
Jones jones_qwp(double theta_deg);

/// Probe preparation: horizontally polarized light of mean photon number
/// `power` passed through a QWP then a HWP.
struct WavePlateSetting {
  double theta_q_deg = 0.0;
  double theta_h_deg = 0.0;
  double power = 0.0;
};

ProbeSpec waveplates_to_probe(const WavePlateSetting& setting, std::string id = {});

/// Physical parameters of the two-mode click detector.
///
/// The input passes a HWP at `hwp0_deg`, then a PBS sends H to SNSPD1
/// (efficiency eta1) and V to SNSPD2 (efficiency eta2, extra loss `loss`).
/// The two click signals are OR-ed. Without the PBS, eta1/eta2 are the
/// efficiencies of a single detector for the two polarizations and loss must be 0.
struct DetectorModel {
  double eta1 = 0.2;
  double eta2 = 0.2;
  double loss = 0.0;
  double hwp0_deg = 22.5;
  bool pbs_present = true;

  void validate() const;
  /// Effective efficiency of the second arm, eta2 * (1 - loss).
  double effective_eta2() const { return eta2 * (1.0 - loss); }
};

nlohmann::json to_json(const DetectorModel& m);
DetectorModel detector_model_from_json(const nlohmann::json& j);

/// Click / no-click POVM. `off` is always computed as identity - `on`.
class PovmPair {
 public:
  static PovmPair from_on(Operator on, int truncation);

  const Operator& on() const { return on_; }
  const Operator& off() const { return off_; }
  int truncation() const { return truncation_; }

 private:
  PovmPair(Operator on, Operator off, int truncation)
      : on_(std::move(on)), off_(std::move(off)), truncation_(truncation) {}

  Operator on_;
  Operator off_;
  int truncation_ = 0;
};

/// Returns the first violated PovmPair invariant, or an empty string.
/// `two_mode` enables the structural-zero check (entries between different
/// total photon numbers must vanish).
std::string povm_invariant_violation(const PovmPair& povm, bool two_mode = true);

/// Second-quantized action of a passive two-mode transformation on the
/// truncated Fock basis: a_H^+ -> u11 a_H^+ + u21 a_V^+, a_V^+ -> u12 a_H^+ + u22 a_V^+.
Operator mode_unitary_to_fock(const Jones& u, int truncation);

/// Single-mode click detector on the basis |0>..|N>.
PovmPair onoff_povm_single_mode(double eta, int truncation);

PovmPair theory_povm(const DetectorModel& model, int truncation = 2);

/// <psi|Pi_on|psi> for the probe's truncated coherent state.
double detection_probability(const ProbeSpec& probe, const PovmPair& povm);

}  // namespace entlab
