#include <gtest/gtest.h>

#include <numbers>

#include "entlab/errors.hpp"
#include "entlab/optics.hpp"
#include "entlab/probe_spec.hpp"
#include "oracles.hpp"

using namespace entlab;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Jones, HalfWavePlate) {
  Jones expected;
  expected << 1, 0, 0, -1;
  EXPECT_LT(max_abs(jones_hwp(0.0) - expected), 1e-15);
  expected << 0, 1, 1, 0;
  EXPECT_LT(max_abs(jones_hwp(45.0) - expected), 1e-15);
  expected << 1, 1, 1, -1;
  EXPECT_LT(max_abs(jones_hwp(22.5) - expected / std::sqrt(2.0)), 1e-15);
}

TEST(Jones, QuarterWavePlate) {
  const Complex i(0.0, 1.0);
  Jones expected;
  expected << 1.0 - i, 0, 0, 1.0 + i;
  EXPECT_LT(max_abs(jones_qwp(0.0) - expected / std::sqrt(2.0)), 1e-15);
  expected << 1, -i, -i, 1;
  EXPECT_LT(max_abs(jones_qwp(45.0) - expected / std::sqrt(2.0)), 1e-15);
}

TEST(Jones, QuarterWavePlateIsUnitary) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  for (int k = 0; k < 100; ++k) {
    const Jones q = jones_qwp(angle(rng));
    EXPECT_LT(max_abs(q.adjoint() * q - Jones::Identity()), 1e-14);
  }
}

TEST(WavePlates, TableRows) {
  struct Row {
    double p, tq, th, alpha, beta, delta_deg;
  };
  for (const Row& r : {Row{0.20, 0, 22.5, 0.316, 0.316, 0}, Row{0.20, -45, -22.5, 0.316, 0.316, -90},
                       Row{0.05, -30, -15, 0.194, 0.112, -90}}) {
    const ProbeSpec s = waveplates_to_probe({r.tq, r.th, r.p});
    EXPECT_NEAR(s.alpha, r.alpha, 5e-4);
    EXPECT_NEAR(s.beta, r.beta, 5e-4);
    ASSERT_TRUE(s.delta.has_value());
    EXPECT_NEAR(*s.delta / kDeg, r.delta_deg, 1e-9);
    EXPECT_NEAR(s.alpha * s.alpha + s.beta * s.beta, r.p, 1e-12);
  }
}

TEST(WavePlates, PhaseAbsentForSingleMode) {
  EXPECT_FALSE(waveplates_to_probe({0.0, 0.0, 0.2}).delta.has_value());
  EXPECT_FALSE(waveplates_to_probe({0.0, 45.0, 0.2}).delta.has_value());
  EXPECT_THROW(waveplates_to_probe({0.0, 0.0, -0.1}), ValidationError);
}

TEST(ModeUnitary, IdentityMapsToIdentity) {
  const Operator f = mode_unitary_to_fock(Jones::Identity(), 3);
  EXPECT_LT(max_abs(f.matrix() - ComplexMatrix::Identity(10, 10)), 1e-15);
}

TEST(ModeUnitary, HalfWavePlateAtZeroFlipsOddVertical) {
  const Operator f = mode_unitary_to_fock(jones_hwp(0.0), 2);
  const std::vector<double> signs{1, 1, -1, 1, -1, 1};
  ComplexMatrix expected = ComplexMatrix::Zero(6, 6);
  for (int i = 0; i < 6; ++i) expected(i, i) = signs[i];
  EXPECT_LT(max_abs(f.matrix() - expected), 1e-15);
}

TEST(ModeUnitary, HadamardOnTwoPhotonsByHand) {
  // a_H^dag -> (a_H^dag + a_V^dag)/sqrt2, a_V^dag -> (a_H^dag - a_V^dag)/sqrt2.
  // |2,0> -> (|2,0> + sqrt2 |1,1> + |0,2>)/2
  // |1,1> -> (|2,0> - |0,2>)/sqrt2
  // |0,2> -> (|2,0> - sqrt2 |1,1> + |0,2>)/2
  const ComplexMatrix f = mode_unitary_to_fock(jones_hwp(22.5), 2).matrix();
  const double r2 = std::sqrt(2.0);
  Eigen::Matrix3d block;
  block << 0.5, 1 / r2, 0.5, r2 / 2, 0, -r2 / 2, 0.5, -1 / r2, 0.5;
  EXPECT_LT((f.block(3, 3, 3, 3).real() - block).cwiseAbs().maxCoeff(), 1e-15);
  Eigen::Matrix2d single;
  single << 1 / r2, 1 / r2, 1 / r2, -1 / r2;
  EXPECT_LT((f.block(1, 1, 2, 2).real() - single).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(f.imag().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ModeUnitary, RejectsNonUnitary) {
  Jones m = Jones::Identity();
  m(0, 0) = 2.0;
  EXPECT_THROW(mode_unitary_to_fock(m, 2), ValidationError);
}

TEST(OnOffSingleMode, Examples) {
  EXPECT_LT(max_abs(onoff_povm_single_mode(0.0, 3).on().matrix()), 1e-15);
  ComplexMatrix expected = ComplexMatrix::Identity(3, 3);
  expected(0, 0) = 0.0;
  EXPECT_LT(max_abs(onoff_povm_single_mode(1.0, 2).on().matrix() - expected), 1e-15);
  EXPECT_NEAR(onoff_povm_single_mode(0.2, 2).off().matrix()(2, 2).real(), 0.64, 1e-15);
  EXPECT_THROW(onoff_povm_single_mode(1.5, 2), ValidationError);
}

TEST(TheoryPovm, ZeroLossSinglePhotonBlockIsDiagonal) {
  const PovmPair p = theory_povm(DetectorModel{0.2, 0.2, 0.0, 22.5, true});
  EXPECT_NEAR(p.on().matrix()(1, 1).real(), 0.2, 1e-14);
  EXPECT_NEAR(p.on().matrix()(2, 2).real(), 0.2, 1e-14);
  EXPECT_LE(std::abs(p.on().matrix()(1, 2)), 1e-12);
}

TEST(TheoryPovm, FullLossProjectsOntoSymmetricSinglePhoton) {
  const double eta = 0.2;
  const ComplexMatrix on = theory_povm(DetectorModel{eta, eta, 1.0, 22.5, true}).on().matrix();
  // Only one arm clicks; a single photon reaches it with amplitude (<1,0| + <0,1|)/sqrt2.
  EXPECT_NEAR(on(1, 1).real(), eta / 2, 1e-14);
  EXPECT_NEAR(on(2, 2).real(), eta / 2, 1e-14);
  EXPECT_NEAR(on(1, 2).real(), eta / 2, 1e-14);
  EXPECT_NEAR(on(1, 2).imag(), 0.0, 1e-14);
}

TEST(TheoryPovm, UnequalEfficienciesGiveDiagonals) {
  const ComplexMatrix on = theory_povm(DetectorModel{0.209, 0.201, 0.0, 22.5, true}).on().matrix();
  // |1,0> and |0,1> each split evenly between the arms.
  EXPECT_NEAR(on(1, 1).real(), 0.205, 1e-14);
  EXPECT_NEAR(on(2, 2).real(), 0.205, 1e-14);
  const ComplexMatrix direct = theory_povm(DetectorModel{0.209, 0.201, 0.0, 0.0, true}).on().matrix();
  EXPECT_NEAR(direct(1, 1).real(), 0.209, 1e-14);
  EXPECT_NEAR(direct(2, 2).real(), 0.201, 1e-14);
}

TEST(TheoryPovm, NoPbsRequiresZeroLoss) {
  EXPECT_THROW(theory_povm(DetectorModel{0.2, 0.2, 0.1, 22.5, false}), ValidationError);
  EXPECT_NO_THROW(theory_povm(DetectorModel{0.2, 0.15, 0.0, 22.5, false}));
}

TEST(TheoryPovm, RejectsOutOfRangeParameters) {
  EXPECT_THROW(theory_povm(DetectorModel{-0.1, 0.2, 0.0, 22.5, true}), ValidationError);
  EXPECT_THROW(theory_povm(DetectorModel{0.2, 0.2, 1.1, 22.5, true}), ValidationError);
}

TEST(TheoryPovm, SatisfiesInvariants) {
  for (double loss : {0.0, 0.3, 1.0}) {
    const PovmPair p = theory_povm(DetectorModel{0.3, 0.7, loss, 22.5, true}, 3);
    EXPECT_EQ(povm_invariant_violation(p), "");
  }
}

TEST(DetectionProbability, VacuumNeverClicks) {
  const PovmPair p = theory_povm(DetectorModel{0.5, 0.4, 0.2, 22.5, true});
  EXPECT_EQ(detection_probability(ProbeSpec::make("vac", 0.0, 0.0, std::nullopt), p), 0.0);
}

TEST(DetectionProbability, MatchesClosedFormPoisson) {
  const double eta = 0.2, power = 0.2;
  const PovmPair p = theory_povm(DetectorModel{eta, eta, 0.0, 22.5, true});
  const double got = detection_probability(ProbeSpec::make("h", std::sqrt(power), 0.0, std::nullopt), p);
  // Half the light reaches each detector.
  const double closed = 1.0 - std::exp(-eta * power / 2) * std::exp(-eta * power / 2);
  EXPECT_NEAR(got, closed, 1e-3);
}

TEST(DetectionProbability, PhasePeriodicity) {
  const PovmPair p = theory_povm(DetectorModel{0.2, 0.2, 0.6, 22.5, true});
  const double a = detection_probability(ProbeSpec::make("a", 0.3, 0.25, 0.7), p);
  const double b = detection_probability(ProbeSpec::make("b", 0.3, 0.25, 0.7 + 2 * std::numbers::pi), p);
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(DetectorModelJson, RoundTrip) {
  const DetectorModel m{0.209, 0.201 * 0.721, 0.0, 12.25, false};
  const DetectorModel back = detector_model_from_json(to_json(m));
  EXPECT_EQ(back.eta1, m.eta1);
  EXPECT_EQ(back.eta2, m.eta2);
  EXPECT_EQ(back.loss, m.loss);
  EXPECT_EQ(back.hwp0_deg, m.hwp0_deg);
  EXPECT_EQ(back.pbs_present, m.pbs_present);
  EXPECT_THROW(detector_model_from_json(nlohmann::json{{"eta1", "x"}}), ValidationError);
}
