#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "entlab/optics.hpp"
#include "entlab/probe_spec.hpp"

namespace entlab {

/// One point (s, v, m) of the phase grid: phase level s, amplitude index v,
/// phase index m; the probe phase is 2 pi m / (2 s + 1).
struct PhaseGridPoint {
  int s = 0;
  int v = 0;
  int m = 0;

  double delta() const;
};

/// Grid points in canonical order: s ascending, then v, then m.
std::vector<PhaseGridPoint> phase_grid(int truncation);

/// Mode amplitudes (alpha, beta) for every (s, v) pair of the phase grid.
class AmplitudeTable {
 public:
  struct Entry {
    double alpha = 0.0;
    double beta = 0.0;
  };

  explicit AmplitudeTable(int truncation);

  int truncation() const { return truncation_; }
  void set(int s, int v, Entry e);
  /// Throws ValidationError when the entry is missing.
  const Entry& at(int s, int v) const;
  bool complete() const;

 private:
  int truncation_;
  std::vector<std::vector<std::optional<Entry>>> entries_;  // [s][v]
};

/// Default amplitudes. For N = 2: s = 2 uses P = 0.20 split evenly, s = 1 uses
/// P = 0.05 split 1:3 and 3:1, s = 0 uses the two single-mode P = 0.20 probes
/// and the vacuum. Other N use a generic low-power ladder.
AmplitudeTable default_amplitude_table(int truncation);

/// The minimal probe set: one probe per phase-grid point, sum_s (N-s+1)(2s+1)
/// probes, in phase_grid order.
std::vector<ProbeSpec> minimal_probe_set(int truncation, const AmplitudeTable& amplitudes);

/// Wave-plate settings of the 19-probe experimental set (vacuum last).
const std::vector<WavePlateSetting>& experimental_waveplate_settings();

/// The 19 experimental probes, ids "e01".."e19".
std::vector<ProbeSpec> experimental_probe_set();

/// Number of real parameters of a global-phase-insensitive Hermitian POVM
/// element at truncation N: (N+1)(N+2)(2N+3)/6.
int povm_parameter_count(int truncation);

struct ConditioningReport {
  int rank = 0;
  int parameter_count = 0;
  double largest_singular_value = 0.0;
  double smallest_singular_value = 0.0;
  std::vector<double> singular_values;
  bool rank_deficient = true;
};

/// Numerical rank (threshold 1e-8 relative to the largest singular value) of
/// the tomography forward map for these probes.
ConditioningReport conditioning_report(std::span<const ProbeSpec> probes, int truncation);

nlohmann::json to_json(const ConditioningReport& r);

nlohmann::json probes_to_json(std::span<const ProbeSpec> probes);
std::vector<ProbeSpec> probes_from_json(const nlohmann::json& j);

/// Resolves "paper19", "minimal14" or a path to a probe file.
std::vector<ProbeSpec> load_probes(const std::string& spec);

}  // namespace entlab
