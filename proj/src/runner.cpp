#include "boundary_ctrl/runner.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "boundary_ctrl/control.hpp"
#include "boundary_ctrl/errors.hpp"
#include "boundary_ctrl/gauge.hpp"
#include "boundary_ctrl/parallel.hpp"
#include "boundary_ctrl/propagator.hpp"
#include "boundary_ctrl/random.hpp"
#include "boundary_ctrl/spectral.hpp"

namespace bctrl::runner {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kResidualSamples = 512;
constexpr int kEnvelopeSamplesPerWindow = 16;

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(long long v) { return raw(std::to_string(v)); }
  CsvWriter& raw(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

struct Outputs {
  fs::path dir;
  std::vector<fs::path> files;
  json verdicts = json::object();

  void write(const std::string& name, const std::string& contents) {
    write_atomic(dir / name, contents);
    files.push_back(dir / name);
  }
  void write_json(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }
};

propagator::FreezeRule freeze_rule(const ExperimentConfig& c) {
  return c.freeze == "left" ? propagator::FreezeRule::LeftEndpoint : propagator::FreezeRule::Midpoint;
}

spectral::FourierBasis make_basis(const ExperimentConfig& c) {
  return spectral::FourierBasis(spectral::IntervalGeometry(c.l), c.N);
}

control::ControlSystem make_system(const ExperimentConfig& c) {
  return control::build_control_system(make_basis(c), c.a, c.mu0, c.mu1);
}

void append_le(std::string& buffer, std::uint64_t bits) {
  for (int b = 0; b < 8; ++b) buffer.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

// ------------------------------------------------------------------ evolve

json evolve_outputs(const ExperimentConfig& config, const control::ControlSystem& system,
                    const control::ControlEnvelope& envelope, Outputs& out) {
  const auto& basis = system.basis;
  const CVector psi0 = resolve_state(config.initial, system.spectrum.eigenvectors, config.N, "initial");
  const CVector target = resolve_state(config.target, system.spectrum.eigenvectors, config.N, "target");
  const auto path = control::assemble_boundary_run(envelope, basis, system.static_terms(),
                                                   system.coupled_terms());
  const propagator::Trajectory traj = propagator::evolve(path, psi0, config.tolerance, freeze_rule(config));

  std::vector<std::string> header = {"t", "A", "norm", "fidelity", "boundary_residual"};
  const auto modes = basis.modes();
  for (int n : modes) header.push_back("p_magnetic_" + std::to_string(n));
  for (int n : modes) header.push_back("arg_magnetic_" + std::to_string(n));
  for (int n : modes) header.push_back("p_boundary_" + std::to_string(n));
  CsvWriter csv(header);

  const std::size_t count = traj.states.size();
  const std::size_t stride =
      std::max<std::size_t>(1, (count + static_cast<std::size_t>(config.max_rows) - 2) /
                                   static_cast<std::size_t>(config.max_rows - 1));
  double max_drift = 0.0, max_residual = 0.0;
  std::size_t rows = 0;
  std::string binary;
  std::string truncation_note;
  const Index dim = basis.dimension();
  const gauge::BoundaryResidualEvaluator boundary_residual(basis, kResidualSamples);
  for (std::size_t r = 0; r < count; ++r) {
    const CVector& phi = traj.states[r];
    const double t = traj.times[r];
    const double a = envelope.value(std::min(t, envelope.potential().end()));
    const double norm = phi.norm();
    const double residual = boundary_residual(phi, a);
    max_drift = std::max(max_drift, std::abs(norm - 1.0));
    max_residual = std::max(max_residual, residual);
    if (r % stride != 0 && r + 1 != count) continue;
    ++rows;
    csv.cell(t).cell(a).cell(norm).cell(control::projective_fidelity(target, phi)).cell(residual);
    for (Index i = 0; i < dim; ++i) csv.cell(std::norm(phi(i)));
    for (Index i = 0; i < dim; ++i) csv.cell(std::arg(phi(i)));
    try {
      const CVector psi = gauge::gauge_matrix(a, basis).adjoint() * phi;
      for (Index i = 0; i < dim; ++i) csv.cell(std::norm(psi(i)));
    } catch (const TruncationError& e) {
      truncation_note = e.what();
      for (Index i = 0; i < dim; ++i) csv.raw("nan");
    }
    csv.end_row();
    if (config.binary_dump) {
      for (double v : {t, a, norm, control::projective_fidelity(target, phi), residual})
        append_le(binary, std::bit_cast<std::uint64_t>(v));
      for (Index i = 0; i < dim; ++i) {
        append_le(binary, std::bit_cast<std::uint64_t>(phi(i).real()));
        append_le(binary, std::bit_cast<std::uint64_t>(phi(i).imag()));
      }
    }
  }
  out.write("trajectory.csv", csv.str());
  if (config.binary_dump) {
    std::string dump = "BCT1";
    append_le(dump, static_cast<std::uint64_t>(rows));
    out.write("trajectory.bct", dump + binary);
  }

  json summary;
  summary["command"] = "evolve";
  summary["subdivisions"] = traj.k;
  summary["refinement_gap"] = traj.gap;
  summary["freeze"] = config.freeze;
  summary["rows"] = rows;
  summary["windows"] = envelope.control().windows();
  summary["horizon"] = envelope.horizon();
  summary["final_fidelity"] = control::projective_fidelity(target, traj.states.back());
  summary["max_norm_drift"] = max_drift;
  summary["max_boundary_residual"] = max_residual;
  summary["envelope_sup_deviation"] = envelope.sup_deviation(1000);
  summary["envelope_bound"] = envelope.control().windows() ? config.c * envelope.control().tau() : 0.0;
  summary["boundary_populations"] = truncation_note.empty() ? "ok" : truncation_note;
  out.write_json("evolve.json", summary);
  out.verdicts["norm_drift_ok"] = max_drift <= 1e-9;
  return summary;
}

control::ControlEnvelope envelope_from(const ExperimentConfig& config, const std::vector<double>& u) {
  if (u.empty()) return control::constant_envelope(config.a, config.horizon);
  return control::reconstruct_vector_potential(control::PiecewiseConstantControl(u, config.tau, config.c),
                                                config.a);
}

// ---------------------------------------------------------------- commands

int cmd_spectrum(const ExperimentConfig& config, Outputs& out) {
  const auto system = make_system(config);
  const auto& s = system.spectrum;
  CsvWriter csv({"index", "mode", "eigenvalue", "gap"});
  for (Index k = 0; k < s.dimension(); ++k) {
    csv.cell(static_cast<long long>(k)).cell(static_cast<long long>(s.dominant_modes[k])).cell(s.eigenvalues(k));
    if (k + 1 < s.dimension()) {
      csv.cell(s.eigenvalues(k + 1) - s.eigenvalues(k));
    } else {
      csv.raw("");
    }
    csv.end_row();
  }
  out.write("spectrum.csv", csv.str());
  json summary;
  summary["command"] = "spectrum";
  summary["dimension"] = s.dimension();
  summary["eigenvalues"] = std::vector<double>(s.eigenvalues.data(), s.eigenvalues.data() + s.dimension());
  const RVector gaps = s.gaps();
  summary["min_gap"] = gaps.size() ? gaps.minCoeff() : 0.0;
  summary["degenerate"] = gaps.size() && gaps.minCoeff() <= 1e-10 * std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
  out.write_json("spectrum.json", summary);
  return kExitOk;
}

int cmd_evolve(const ExperimentConfig& config, const RunOptions& options, Outputs& out) {
  std::vector<double> u;
  if (options.envelope) u = read_envelope(*options.envelope);
  const auto system = make_system(config);
  evolve_outputs(config, system, envelope_from(config, u), out);
  return kExitOk;
}

json report_json(const control::ControllabilityReport& normal, const control::ControllabilityReport& r) {
  json j;
  j["command"] = "check";
  j["normal"] = {{"a1_hermitian", normal.a1_hermitian},
                 {"a1_max_asymmetry", normal.a1_max_asymmetry},
                 {"a2_eigenbasis", normal.a2_eigenbasis},
                 {"a2_unitarity_defect", normal.a2_unitarity_defect},
                 {"a3_domain", normal.a3_domain},
                 {"a3_note", normal.a3_note},
                 {"degenerate_spectrum", normal.degenerate_spectrum}};
  j["denominator_bound"] = r.denominator_bound;
  j["gaps_screened"] = r.gaps_screened;
  j["gaps_independent"] = r.gaps_independent;
  j["unresolved_pairs"] = r.unresolved_pairs;
  json witnesses = json::array();
  for (const auto& w : r.witnesses) {
    witnesses.push_back(
        {{"kind", w.kind}, {"i", w.i}, {"j", w.j}, {"p", w.p}, {"q", w.q}, {"residual", w.residual}});
  }
  j["witnesses"] = witnesses;
  j["couplings_nonzero"] = r.couplings_nonzero;
  j["first_failing_coupling"] = r.first_failing_coupling;
  j["min_coupling"] = r.min_coupling;
  j["couplings"] = r.couplings;
  std::vector<std::string> notes = normal.notes;
  notes.insert(notes.end(), r.notes.begin(), r.notes.end());
  j["notes"] = notes;
  j["verdict"] = "screened";
  j["passed"] = normal.normal() && r.gaps_independent && r.couplings_nonzero;
  return j;
}

int cmd_check(const ExperimentConfig& config, Outputs& out) {
  const auto system = make_system(config);
  const auto normal = control::check_normal_system(system.h0, system.h1);
  const auto chambrion = control::check_chambrion_conditions(system.spectrum, system.h1, config.Q);
  const json report = report_json(normal, chambrion);
  out.write_json("check.json", report);
  const bool passed = report["passed"].get<bool>();
  out.verdicts["controllability_screen"] = passed;
  return passed ? kExitOk : kExitCheckFailed;
}

int cmd_synthesize(const ExperimentConfig& config, Outputs& out) {
  const auto system = make_system(config);
  const CVector psi0 = resolve_state(config.initial, system.spectrum.eigenvectors, config.N, "initial");
  const CVector target = resolve_state(config.target, system.spectrum.eigenvectors, config.N, "target");
  control::SynthesisOptions opts;
  opts.tau = config.tau;
  opts.starts = config.starts;
  opts.levels = config.levels;
  opts.seed = config.seed;
  const auto factory =
      config.model == "boundary"
          ? control::boundary_window_model(system.basis, config.a, system.static_terms(),
                                           system.coupled_terms(), config.substeps)
          : control::auxiliary_window_model(system.h0, system.h1);
  if (config.model == "auxiliary") opts.golden_steps = 12;
  const auto result = control::synthesize_with_model(factory, psi0, target, config.c, config.horizon,
                                                     config.fidelity_target, opts);

  CsvWriter controls({"window", "u"});
  for (std::size_t j = 0; j < result.control.windows(); ++j) {
    controls.cell(static_cast<long long>(j)).cell(result.control.values()[j]);
    controls.end_row();
  }
  out.write("control.csv", controls.str());

  const auto envelope = control::reconstruct_vector_potential(result.control, config.a);
  CsvWriter env({"t", "A", "deviation"});
  for (std::size_t j = 0; j < result.control.windows(); ++j) {
    const auto& p = envelope.pieces()[j];
    for (int s = 0; s <= kEnvelopeSamplesPerWindow; ++s) {
      const double t = p.t0 + (p.t1 - p.t0) * s / kEnvelopeSamplesPerWindow;
      const double a = p.value(t);
      env.cell(t).cell(a).cell(a - config.a);
      env.end_row();
    }
  }
  out.write("envelope.csv", env.str());

  bool monotone = true;
  for (std::size_t i = 1; i < result.history.size(); ++i)
    monotone = monotone && result.history[i] >= result.history[i - 1];
  json summary;
  summary["command"] = "synthesize";
  summary["model"] = config.model;
  summary["fidelity"] = result.fidelity;
  summary["initial_fidelity"] = result.initial_fidelity;
  summary["fidelity_target"] = config.fidelity_target;
  summary["converged"] = result.converged;
  summary["windows"] = result.windows;
  summary["tau"] = result.tau;
  summary["horizon"] = result.control.horizon();
  summary["best_start"] = result.best_start;
  summary["accepted_steps"] = result.history.size();
  summary["monotone"] = monotone;
  const double sup = envelope.sup_deviation(10000);
  summary["envelope_sup_deviation"] = sup;
  summary["envelope_bound"] = config.c * result.tau;
  out.write_json("synthesis.json", summary);

  ExperimentConfig evolve_config = config;
  evolve_config.tau = result.tau;
  evolve_config.horizon = result.control.horizon();
  evolve_outputs(evolve_config, system, envelope, out);
  out.verdicts["synthesis_converged"] = result.converged;
  out.verdicts["envelope_within_bound"] = sup <= config.c * result.tau;
  return result.converged ? kExitOk : kExitNotConverged;
}

struct TrialOutcome {
  propagator::BoundReport report;
};

int cmd_certify(const ExperimentConfig& config, Outputs& out) {
  const spectral::FourierBasis basis(spectral::IntervalGeometry(config.l), config.certify_N);
  const auto terms = control::boundary_terms(basis);
  const double horizon = config.certify_horizon;
  constexpr int kPieces = 8;
  std::vector<propagator::BoundReport> reports(static_cast<std::size_t>(config.trials));
  parallel_for(reports.size(), [&](std::size_t trial) {
    Rng rng(config.seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL * (trial + 1));
    std::vector<PiecewisePolynomial> f, g;
    const double eps = std::pow(10.0, rng.uniform(-6.0, -3.0));
    for (std::size_t i = 0; i < terms.size(); ++i) {
      std::vector<double> fv(kPieces), gv(kPieces);
      for (int p = 0; p < kPieces; ++p) {
        fv[p] = i == 0 ? rng.uniform(0.5, 1.5) : rng.uniform(-2.0, 2.0);
        gv[p] = config.certify_identical ? fv[p] : fv[p] + eps * rng.uniform(-1.0, 1.0);
      }
      f.push_back(PiecewisePolynomial::steps(fv, 0.0, horizon));
      g.push_back(PiecewisePolynomial::steps(gv, 0.0, horizon));
    }
    const CVector state = rng.normalized_state(basis.dimension());
    const propagator::CoefficientPath p1(terms, f, 0.0, horizon);
    const propagator::CoefficientPath p2(terms, g, 0.0, horizon);
    propagator::CertifyOptions opts;
    opts.rule = propagator::FreezeRule::LeftEndpoint;
    if (config.certify_corrupt) opts.corrupt = [](CMatrix& u) { u = -u; };
    reports[trial] = propagator::measure_distance_bound(p1, p2, state, opts);
  });

  CsvWriter csv({"trial", "bound", "measured", "margin", "k1", "k2"});
  std::size_t worst = 0;
  bool all_pass = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    csv.cell(static_cast<long long>(i)).cell(r.bound).cell(r.measured).cell(r.margin());
    csv.cell(static_cast<long long>(r.k1)).cell(static_cast<long long>(r.k2));
    csv.end_row();
    if (r.margin() < reports[worst].margin()) worst = i;
    all_pass = all_pass && r.margin() >= -1e-8;
  }
  out.write("certify.csv", csv.str());
  json summary;
  summary["command"] = "certify";
  summary["trials"] = reports.size();
  summary["all_pass"] = all_pass;
  summary["worst_trial"] = worst;
  summary["worst_margin"] = reports[worst].margin();
  summary["worst_bound"] = reports[worst].bound;
  summary["worst_measured"] = reports[worst].measured;
  summary["identical_pairs"] = config.certify_identical;
  summary["corrupted"] = config.certify_corrupt;
  out.write_json("certify.json", summary);
  out.verdicts["bound_certified"] = all_pass;
  return all_pass ? kExitOk : kExitCertificationFailed;
}

std::string file_digest_json_name(const fs::path& p) { return p.filename().string(); }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw Error("cannot write " + tmp.string());
    o.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!o) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string sha256_hex(const std::string& contents) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(contents.data(), contents.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::vector<double> read_envelope(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--envelope", "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("--envelope", "empty envelope file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "window,u") throw ConfigError("--envelope", "header must be 'window,u'");
  std::vector<double> u;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("--envelope", "row " + std::to_string(row) + " lacks a comma");
    const std::string idx = line.substr(0, comma), val = line.substr(comma + 1);
    long window = -1;
    std::from_chars(idx.data(), idx.data() + idx.size(), window);
    if (window != row) throw ConfigError("--envelope", "window indices must be 0, 1, 2, ... in order");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc() || ptr != val.data() + val.size()) {
      throw ConfigError("--envelope", "row " + std::to_string(row) + ": bad control value '" + val + "'");
    }
    u.push_back(v);
    ++row;
  }
  return u;
}

RunResult run_command(const std::string& command, const ExperimentConfig& base_config,
                      const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig config = base_config;
  if (options.seed) config.seed = *options.seed;
  RunResult result;
  Outputs out;
  out.dir = options.out_dir;
  fs::create_directories(out.dir);
  try {
    validate(config);
    if (command == "spectrum") {
      result.exit_code = cmd_spectrum(config, out);
    } else if (command == "evolve") {
      result.exit_code = cmd_evolve(config, options, out);
    } else if (command == "check") {
      result.exit_code = cmd_check(config, out);
    } else if (command == "synthesize") {
      result.exit_code = cmd_synthesize(config, out);
    } else if (command == "certify") {
      result.exit_code = cmd_certify(config, out);
    } else {
      throw ConfigError("command", "unknown command '" + command + "'");
    }
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const InvalidArgument& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const NonConvergenceError& e) {
    result.exit_code = kExitNotConverged;
    result.message = e.what();
  }
  if (result.exit_code == kExitConfig) return result;

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest;
  manifest["tool"] = "boundary-ctrl";
  manifest["version"] = BOUNDARY_CTRL_VERSION;
  manifest["command"] = command;
  manifest["config"] = config_to_json(config);
  manifest["modules"] = {{"spectral", BOUNDARY_CTRL_VERSION}, {"gauge", BOUNDARY_CTRL_VERSION},
                         {"propagator", BOUNDARY_CTRL_VERSION}, {"control", BOUNDARY_CTRL_VERSION},
                         {"runner", BOUNDARY_CTRL_VERSION}};
  manifest["wall_clock_seconds"] = seconds;
  json files = json::array();
  for (const auto& f : out.files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string data = buffer.str();
    files.push_back({{"name", file_digest_json_name(f)}, {"sha256", sha256_hex(data)}, {"bytes", data.size()}});
  }
  manifest["files"] = files;
  manifest["verdicts"] = out.verdicts;
  manifest["exit_code"] = result.exit_code;
  if (!result.message.empty()) manifest["message"] = result.message;
  write_atomic(out.dir / "manifest.json", manifest.dump(2) + "\n");
  result.files = out.files;
  result.files.push_back(out.dir / "manifest.json");
  return result;
}

}  // namespace bctrl::runner
