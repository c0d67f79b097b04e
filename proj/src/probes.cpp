#include "entlab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "entlab/errors.hpp"
#include "entlab/tomography.hpp"

namespace entlab {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double truncated_norm(double power, int truncation) {
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m <= truncation; ++m) {
    term *= power / m;
    sum += term;
  }
  return std::exp(-power) * sum;
}

// Largest power whose truncated coherent state keeps norm >= 0.999.
double ladder_power(int truncation) {
  double lo = 0.0;
  double hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (truncated_norm(mid, truncation) >= 0.999 ? lo : hi) = mid;
  }
  return lo;
}

std::string grid_id(const PhaseGridPoint& g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%d-v%d-m%d", g.s, g.v, g.m);
  return buf;
}

}  // namespace

ProbeSpec ProbeSpec::make(std::string id, double alpha, double beta, std::optional<double> delta,
                          std::optional<double> power) {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw ValidationError("probe '" + id + "': amplitudes must be non-negative");
  }
  const double p = power.value_or(alpha * alpha + beta * beta);
  if (!(p >= 0.0) || std::abs(alpha * alpha + beta * beta - p) > 1e-9) {
    throw ValidationError("probe '" + id + "': power " + std::to_string(p) +
                          " inconsistent with alpha^2 + beta^2");
  }
  const bool phase_defined = alpha > 0.0 && beta > 0.0;
  if (phase_defined && !delta) {
    throw ValidationError("probe '" + id + "': relative phase required when both amplitudes are nonzero");
  }
  if (delta && !std::isfinite(*delta)) {
    throw ValidationError("probe '" + id + "': relative phase must be finite");
  }
  ProbeSpec probe;
  probe.id = std::move(id);
  probe.alpha = alpha;
  probe.beta = beta;
  probe.delta = phase_defined ? delta : std::nullopt;
  probe.power = p;
  return probe;
}

double PhaseGridPoint::delta() const { return 2.0 * std::numbers::pi * m / (2 * s + 1); }

std::vector<PhaseGridPoint> phase_grid(int truncation) {
  if (truncation < 0) throw ValidationError("truncation order must be non-negative");
  std::vector<PhaseGridPoint> grid;
  for (int s = 0; s <= truncation; ++s) {
    for (int v = 0; v <= truncation - s; ++v) {
      for (int m = 0; m <= 2 * s; ++m) {
        grid.push_back({s, v, m});
      }
    }
  }
  return grid;
}

AmplitudeTable::AmplitudeTable(int truncation) : truncation_(truncation) {
  if (truncation < 0) throw ValidationError("truncation order must be non-negative");
  entries_.resize(static_cast<std::size_t>(truncation) + 1);
  for (int s = 0; s <= truncation; ++s) {
    entries_[s].resize(static_cast<std::size_t>(truncation - s) + 1);
  }
}

void AmplitudeTable::set(int s, int v, Entry e) {
  if (s < 0 || s > truncation_ || v < 0 || v > truncation_ - s) {
    throw ValidationError("amplitude table index (" + std::to_string(s) + ", " + std::to_string(v) +
                          ") out of range");
  }
  if (!(e.alpha >= 0.0) || !(e.beta >= 0.0)) {
    throw ValidationError("amplitudes must be non-negative");
  }
  entries_[s][v] = e;
}

const AmplitudeTable::Entry& AmplitudeTable::at(int s, int v) const {
  if (s < 0 || s > truncation_ || v < 0 || v > truncation_ - s || !entries_[s][v]) {
    throw ValidationError("amplitude table has no entry for (s=" + std::to_string(s) +
                          ", v=" + std::to_string(v) + ")");
  }
  return *entries_[s][v];
}

bool AmplitudeTable::complete() const {
  for (const auto& level : entries_) {
    for (const auto& e : level) {
      if (!e) return false;
    }
  }
  return true;
}

AmplitudeTable default_amplitude_table(int truncation) {
  AmplitudeTable table(truncation);
  if (truncation == 2) {
    const double p1 = 0.20;
    const double p2 = 0.05;
    table.set(2, 0, {std::sqrt(p1 / 2), std::sqrt(p1 / 2)});
    table.set(1, 0, {std::sqrt(p2 / 4), std::sqrt(3 * p2 / 4)});
    table.set(1, 1, {std::sqrt(3 * p2 / 4), std::sqrt(p2 / 4)});
    table.set(0, 0, {std::sqrt(p1), 0.0});
    table.set(0, 1, {0.0, std::sqrt(p1)});
    table.set(0, 2, {0.0, 0.0});
    return table;
  }
  const double p_max = ladder_power(truncation);
  for (int s = 0; s <= truncation; ++s) {
    const int count = truncation - s + 1;
    for (int v = 0; v < count; ++v) {
      const double power = p_max * (v + 1) / count;
      const double split = (v + 1.0) / (count + 1.0);
      table.set(s, v, {std::sqrt(power * split), std::sqrt(power * (1.0 - split))});
    }
  }
  return table;
}

std::vector<ProbeSpec> minimal_probe_set(int truncation, const AmplitudeTable& amplitudes) {
  if (amplitudes.truncation() != truncation) {
    throw ValidationError("amplitude table truncation does not match N");
  }
  std::vector<ProbeSpec> probes;
  for (const PhaseGridPoint& g : phase_grid(truncation)) {
    const auto& e = amplitudes.at(g.s, g.v);
    const double power = e.alpha * e.alpha + e.beta * e.beta;
    const double norm = truncated_norm(power, truncation);
    if (norm < 0.99) {
      throw ValidationError("probe " + grid_id(g) + " has truncated norm " + std::to_string(norm) +
                            " < 0.99 at N = " + std::to_string(truncation));
    }
    probes.push_back(ProbeSpec::make(grid_id(g), e.alpha, e.beta, g.delta(), power));
  }
  return probes;
}

const std::vector<WavePlateSetting>& experimental_waveplate_settings() {
  // {theta_Q, theta_H, P}
  static const std::vector<WavePlateSetting> table{
      {-22.5, -33.75, 0.20}, {-45.0, -22.5, 0.20}, {-22.5, 11.25, 0.20}, {0.0, 22.5, 0.20},
      {22.5, 33.75, 0.20},   {45.0, 22.5, 0.20},   {22.5, -11.25, 0.20}, {0.0, -22.5, 0.20},
      {0.0, 0.0, 0.20},      {0.0, 45.0, 0.20},    {-30.0, -15.0, 0.05}, {0.0, 15.0, 0.05},
      {30.0, 15.0, 0.05},    {0.0, -15.0, 0.05},   {-30.0, 30.0, 0.05},  {0.0, 30.0, 0.05},
      {30.0, -30.0, 0.05},   {0.0, -30.0, 0.05},   {0.0, 0.0, 0.0},
  };
  return table;
}

std::vector<ProbeSpec> experimental_probe_set() {
  std::vector<ProbeSpec> probes;
  const auto& table = experimental_waveplate_settings();
  for (std::size_t i = 0; i < table.size(); ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "e%02zu", i + 1);
    probes.push_back(waveplates_to_probe(table[i], id));
  }
  return probes;
}

int povm_parameter_count(int truncation) {
  return (truncation + 1) * (truncation + 2) * (2 * truncation + 3) / 6;
}

ConditioningReport conditioning_report(std::span<const ProbeSpec> probes, int truncation) {
  if (probes.empty()) throw ValidationError("conditioning report needs at least one probe");
  const Eigen::MatrixXd forward = forward_map(probes, truncation);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(forward);
  const Eigen::VectorXd sv = svd.singularValues();
  ConditioningReport report;
  report.parameter_count = povm_parameter_count(truncation);
  report.largest_singular_value = sv.size() > 0 ? sv(0) : 0.0;
  const double threshold = 1e-8 * report.largest_singular_value;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    report.singular_values.push_back(sv(i));
    if (sv(i) > threshold) ++report.rank;
  }
  report.smallest_singular_value = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  report.rank_deficient = report.rank < report.parameter_count;
  return report;
}

nlohmann::json to_json(const ConditioningReport& r) {
  return {{"rank", r.rank},
          {"parameter_count", r.parameter_count},
          {"largest_singular_value", r.largest_singular_value},
          {"smallest_singular_value", r.smallest_singular_value},
          {"singular_values", r.singular_values},
          {"rank_deficient", r.rank_deficient}};
}

nlohmann::json probes_to_json(std::span<const ProbeSpec> probes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : probes) {
    nlohmann::json delta = nullptr;
    if (p.delta) delta = *p.delta / kDeg;
    out.push_back({{"id", p.id}, {"alpha", p.alpha}, {"beta", p.beta}, {"delta_deg", delta}, {"power", p.power}});
  }
  return out;
}

std::vector<ProbeSpec> probes_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("probe file must hold a JSON array");
  std::vector<ProbeSpec> probes;
  try {
    for (const auto& e : j) {
      std::optional<double> delta;
      if (e.contains("delta_deg") && !e.at("delta_deg").is_null()) {
        delta = e.at("delta_deg").get<double>() * kDeg;
      }
      std::optional<double> power;
      if (e.contains("power")) power = e.at("power").get<double>();
      probes.push_back(ProbeSpec::make(e.at("id").get<std::string>(), e.at("alpha").get<double>(),
                                       e.at("beta").get<double>(), delta, power));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("probe JSON: ") + e.what());
  }
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t k = i + 1; k < probes.size(); ++k) {
      if (probes[i].id == probes[k].id) throw ValidationError("duplicate probe id '" + probes[i].id + "'");
    }
  }
  return probes;
}

std::vector<ProbeSpec> load_probes(const std::string& spec) {
  if (spec == "paper19") return experimental_probe_set();
  if (spec == "minimal14") return minimal_probe_set(2, default_amplitude_table(2));
  std::ifstream in(spec);
  if (!in) throw IoError("cannot open probe file '" + spec + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(spec + ": " + e.what());
  }
  return probes_from_json(j);
}

}  // namespace entlab
