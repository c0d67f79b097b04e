#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "entlab/entanglement.hpp"
#include "entlab/errors.hpp"
#include "entlab/optics.hpp"
#include "entlab/probes.hpp"
#include "entlab/tomography.hpp"

namespace entlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

/// Record of one invocation, written next to its outputs.
struct Manifest {
  std::string command;
  std::optional<std::uint64_t> seed;
  json parameters = json::object();
  std::vector<std::string> artifacts;
  std::vector<std::string> argv;

  void write(const std::string& path) const {
    json j{{"command", command},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"parameters", parameters},
           {"artifacts", artifacts},
           {"version", ENTLAB_VERSION},
           {"argv", argv}};
    write_atomic(path, dump(j));
  }
};

std::string sibling(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  p.replace_extension(suffix);
  return p.string();
}

std::vector<double> exact_from_json(const json& j, std::span<const ProbeSpec> probes, std::vector<ProbeSpec>& used) {
  if (!j.is_array()) throw ValidationError("probability file must hold a JSON array");
  std::vector<double> p;
  try {
    for (const auto& e : j) {
      const auto id = e.at("probe_id").get<std::string>();
      const double value = e.at("probability").get<double>();
      const auto it = std::find_if(probes.begin(), probes.end(), [&](const ProbeSpec& s) { return s.id == id; });
      if (it == probes.end()) throw ValidationError("probabilities reference unknown probe id '" + id + "'");
      if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("probability for '" + id + "' outside [0, 1]");
      used.push_back(*it);
      p.push_back(value);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("probability JSON: ") + e.what());
  }
  return p;
}

json exact_to_json(std::span<const ProbeSpec> probes, std::span<const double> p) {
  json j = json::array();
  for (std::size_t i = 0; i < probes.size(); ++i) j.push_back({{"probe_id", probes[i].id}, {"probability", p[i]}});
  return j;
}

Operator povm_for_measure(const json& j) {
  Operator op = j.contains("on_4x4") ? operator_from_json(j.at("on_4x4"))
                : j.contains("on")   ? operator_from_json(j.at("on"))
                                     : operator_from_json(j);
  if (op.dim() == 4) return op;
  if (op.dim() == 6) return truncate_to_two_qubits(op);
  throw ValidationError("POVM element must be 4x4 or 6x6, got dimension " + std::to_string(op.dim()));
}

struct Options {
  std::string model;
  std::string probes = "paper19";
  std::int64_t shots = 100000;
  int reps = 6;
  std::uint64_t seed = 1;
  std::string out;
  bool exact_flag = false;
  std::string counts;
  std::string exact_file;
  int max_iters = 100000;
  double tol = 1e-10;
  bool weighted = false;
  std::string povm;
  double eta1 = 0.2;
  double eta2 = 0.2;
  std::string grid = "0:1:11";
  std::string mode = "theory";
  bool emit_povms = false;
  int trials = 1000;
  std::string manifest;
};

int cmd_simulate(const Options& o, Manifest& m, std::ostream& out) {
  const DetectorModel model = detector_model_from_json(read_json(o.model));
  model.validate();
  if (o.shots <= 0) throw ValidationError("--shots must be positive");
  if (o.reps < 1) throw ValidationError("--reps must be at least 1");
  const auto probes = load_probes(o.probes);
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create output directory '" + o.out + "': " + ec.message());

  m.parameters = {{"model", to_json(model)}, {"probes", o.probes}, {"exact", o.exact_flag}};
  if (o.exact_flag) {
    const auto p = exact_probabilities(theory_povm(model), probes);
    const std::string path = (fs::path(o.out) / "exact.json").string();
    write_atomic(path, dump(exact_to_json(probes, p)));
    m.artifacts.push_back(path);
  } else {
    m.seed = o.seed;
    m.parameters["shots"] = o.shots;
    m.parameters["reps"] = o.reps;
    std::vector<std::vector<CountRecord>> runs(static_cast<std::size_t>(o.reps));
    for_each_index(runs.size(), Execution::parallel, [&](std::size_t rep) {
      runs[rep] = simulate_counts(model, probes, o.shots, derive_seed(o.seed, rep));
    });
    for (std::size_t rep = 0; rep < runs.size(); ++rep) {
      char name[32];
      std::snprintf(name, sizeof name, "counts_rep%02zu.json", rep + 1);
      const std::string path = (fs::path(o.out) / name).string();
      write_atomic(path, dump(counts_to_json(runs[rep])));
      m.artifacts.push_back(path);
    }
  }
  m.write((fs::path(o.out) / "manifest.json").string());
  for (const auto& a : m.artifacts) out << a << "\n";
  return ok;
}

int cmd_reconstruct(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  if (o.counts.empty() == o.exact_file.empty()) throw ValidationError("give exactly one of --counts or --exact");
  const auto probes = load_probes(o.probes);
  SolverOptions opts;
  opts.max_iterations = o.max_iters;
  opts.tolerance = o.tol;
  opts.weighted = o.weighted;
  if (opts.max_iterations < 1 || !(opts.tolerance > 0.0)) throw ValidationError("invalid solver options");

  const ReconstructionResult r = [&] {
    if (!o.counts.empty()) return reconstruct_convex(counts_from_json(read_json(o.counts)), probes, 2, opts);
    std::vector<ProbeSpec> used;
    const auto p = exact_from_json(read_json(o.exact_file), probes, used);
    return reconstruct_from_probabilities(p, used, 2, opts);
  }();
  ensure_parent(o.out);
  write_atomic(o.out, dump(to_json(r)));
  m.parameters = {{"counts", o.counts},   {"exact", o.exact_file}, {"probes", o.probes},
                  {"max_iters", o.max_iters}, {"tol", o.tol},     {"weighted", o.weighted}};
  m.artifacts.push_back(o.out);
  m.write(o.out + ".manifest.json");
  out << json{{"residual", r.residual}, {"iterations", r.iterations}, {"converged", r.converged}}.dump() << "\n";
  if (!r.converged) {
    err << "error: solver did not converge within " << o.max_iters << " iterations\n";
    return numerical;
  }
  return ok;
}

int cmd_measure(const Options& o, Manifest& m, std::ostream& out) {
  const Operator pi = povm_for_measure(read_json(o.povm));
  const double value = measure_of_povm(pi);
  const json report{{"input", o.povm}, {"m_ln", value}, {"trace", pi.trace().real()}};
  ensure_parent(o.out);
  write_atomic(o.out, dump(report));
  m.parameters = {{"povm", o.povm}};
  m.artifacts.push_back(o.out);
  m.write(o.out + ".manifest.json");
  out << report.dump() << "\n";
  return ok;
}

int cmd_sweep(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  const auto grid = parse_grid(o.grid);
  SweepMode mode;
  if (o.mode == "theory") {
    mode = TheoryMode{};
  } else if (o.mode == "simulated") {
    mode = SimulatedMode{o.shots, o.reps, o.seed};
    m.seed = o.seed;
  } else {
    throw ValidationError("--mode must be 'theory' or 'simulated'");
  }
  const auto points = loss_sweep(o.eta1, o.eta2, grid, mode);

  ensure_parent(o.out);
  const std::string csv = sweep_to_csv(points);
  write_atomic(o.out, csv);
  m.artifacts.push_back(o.out);
  if (o.emit_povms) {
    json pts = json::array();
    for (const auto& p : points) {
      json e{{"L", p.loss},
             {"m_ln", p.m_ln},
             {"stderr", p.std_error ? json(*p.std_error) : json(nullptr)},
             {"source", to_string(p.source)},
             {"povm", p.povm ? to_json(*p.povm) : json(nullptr)}};
      if (!p.error.empty()) e["error"] = p.error;
      pts.push_back(std::move(e));
    }
    const std::string path = sibling(o.out, ".povms.json");
    write_atomic(path, dump(json{{"eta1", o.eta1}, {"eta2", o.eta2}, {"mode", o.mode}, {"points", pts}}));
    m.artifacts.push_back(path);
  }
  m.parameters = {{"eta1", o.eta1}, {"eta2", o.eta2}, {"grid", o.grid}, {"mode", o.mode}};
  if (o.mode == "simulated") {
    m.parameters["shots"] = o.shots;
    m.parameters["reps"] = o.reps;
  }
  m.write(o.out + ".manifest.json");
  out << csv;

  int code = ok;
  for (const auto& p : points) {
    if (!p.error.empty()) {
      err << "error at L=" << p.loss << ": " << p.error << "\n";
      code = numerical;
    }
  }
  return code;
}

int cmd_swap_check(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  const SwapCheckReport r = swap_check(o.trials, o.seed);
  const json report{{"trials", r.trials},
                    {"seed", r.seed},
                    {"max_abs_difference", r.max_abs_difference},
                    {"tolerance", r.tolerance},
                    {"passed", r.passed}};
  ensure_parent(o.out);
  write_atomic(o.out, dump(report));
  m.seed = o.seed;
  m.parameters = {{"trials", o.trials}};
  m.artifacts.push_back(o.out);
  m.write(o.out + ".manifest.json");
  out << (r.passed ? "PASS" : "FAIL") << " " << report.dump() << "\n";
  if (!r.passed) {
    err << "error: swap law violated beyond tolerance\n";
    return numerical;
  }
  return ok;
}

int cmd_probes(const Options& o, Manifest& m, std::ostream& out) {
  const auto probes = load_probes(o.probes);
  const json report = to_json(conditioning_report(probes, 2));
  ensure_parent(o.out);
  write_atomic(o.out, dump(probes_to_json(probes)));
  const std::string cond = sibling(o.out, ".conditioning.json");
  write_atomic(cond, dump(report));
  m.parameters = {{"probes", o.probes}};
  m.artifacts = {o.out, cond};
  m.write(o.out + ".manifest.json");
  out << report.dump() << "\n";
  return ok;
}

}  // namespace

void write_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + tmp + "'");
    f << contents;
    f.flush();
    if (!f) throw IoError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into '" + path + "'");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polarization detector POVM tomography and entanglement measure"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ENTLAB_VERSION);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate click counts (or exact probabilities) for a detector model");
  simulate->add_option("--model", o.model, "Detector model JSON")->required();
  simulate->add_option("--probes", o.probes, "Probe set: paper19, minimal14 or a JSON file");
  simulate->add_option("--shots", o.shots, "Shots per probe");
  simulate->add_option("--reps", o.reps, "Independent repetitions");
  simulate->add_option("--seed", o.seed, "Master seed");
  simulate->add_option("--out", o.out, "Output directory")->required();
  simulate->add_flag("--exact", o.exact_flag, "Write exact probabilities instead of counts");

  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct the POVM from counts or exact probabilities");
  reconstruct->add_option("--counts", o.counts, "Counts JSON");
  reconstruct->add_option("--exact", o.exact_file, "Exact probabilities JSON");
  reconstruct->add_option("--probes", o.probes, "Probe set: paper19, minimal14 or a JSON file");
  reconstruct->add_option("--out", o.out, "Output JSON")->required();
  reconstruct->add_option("--max-iters", o.max_iters, "Iteration cap");
  reconstruct->add_option("--tol", o.tol, "Step-size stopping tolerance");
  reconstruct->add_flag("--weighted", o.weighted, "Inverse-variance weighting");

  auto* measure = app.add_subcommand("measure", "Entanglement measure of a POVM element");
  measure->add_option("povm,--povm", o.povm, "Operator or reconstruction JSON")->required();
  measure->add_option("--out", o.out, "Report JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "Measure versus loss in one channel");
  sweep->add_option("--eta1", o.eta1, "Efficiency of detector 1");
  sweep->add_option("--eta2", o.eta2, "Efficiency of detector 2");
  sweep->add_option("--grid", o.grid, "start:stop:steps");
  sweep->add_option("--mode", o.mode, "theory or simulated");
  sweep->add_option("--shots", o.shots, "Shots per probe (simulated)");
  sweep->add_option("--reps", o.reps, "Repetitions per point (simulated)");
  sweep->add_option("--seed", o.seed, "Master seed (simulated)");
  sweep->add_option("--out", o.out, "Output CSV")->required();
  sweep->add_flag("--emit-povms", o.emit_povms, "Also write per-point POVMs as JSON");

  auto* swap = app.add_subcommand("swap-check", "Check the entanglement-swapping law on random instances");
  swap->add_option("--trials", o.trials, "Random instances");
  swap->add_option("--seed", o.seed, "Master seed");
  swap->add_option("--out", o.out, "Report JSON")->required();

  auto* probes = app.add_subcommand("probes", "Write a probe set and its conditioning report");
  probes->add_option("--probes", o.probes, "Probe set: paper19, minimal14 or a JSON file");
  probes->add_option("--out", o.out, "Output probe JSON")->required();

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest,--manifest", o.manifest, "Manifest JSON")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return validation;
  }

  Manifest m;
  m.argv = args;
  try {
    if (*simulate) {
      m.command = "simulate";
      return cmd_simulate(o, m, out);
    }
    if (*reconstruct) {
      m.command = "reconstruct";
      return cmd_reconstruct(o, m, out, err);
    }
    if (*measure) {
      m.command = "measure";
      return cmd_measure(o, m, out);
    }
    if (*sweep) {
      m.command = "sweep";
      return cmd_sweep(o, m, out, err);
    }
    if (*swap) {
      m.command = "swap-check";
      return cmd_swap_check(o, m, out, err);
    }
    if (*probes) {
      m.command = "probes";
      return cmd_probes(o, m, out);
    }
    if (*replay) {
      const json j = read_json(o.manifest);
      std::vector<std::string> argv;
      try {
        argv = j.at("argv").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        throw ValidationError(o.manifest + ": " + e.what());
      }
      if (argv.empty() || argv.front() == "replay") throw ValidationError("manifest does not hold a replayable command");
      return run(argv, out, err);
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return validation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return numerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return numerical;
  }
  return validation;
}

}  // namespace entlab::cli
