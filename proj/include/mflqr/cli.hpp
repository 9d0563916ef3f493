#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mflqr/core.hpp"
#include "mflqr/data_io.hpp"
#include "mflqr/pipeline.hpp"

// Subcommands of the `mflqr` tool. Each returns a process exit code and
// writes its artifacts below the output directory.

namespace mflqr::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kParse = 2,
  kDegenerateData = 3,
  kNotConverged = 4,
  kToleranceExceeded = 5,
  kHashMismatch = 6,
  kInvalidInput = 7,
  kModel = 8,
  kIoFailure = 9,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigParse: return kParse;
    case ErrorCode::kDegenerateData: return kDegenerateData;
    case ErrorCode::kMaxIterations:
    case ErrorCode::kLineSearchFailure: return kNotConverged;
    case ErrorCode::kHashMismatch: return kHashMismatch;
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kNonUniformTime:
    case ErrorCode::kNonFiniteValue:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidArgument: return kInvalidInput;
    case ErrorCode::kNotStabilizable:
    case ErrorCode::kNotDetectable:
    case ErrorCode::kNoPsdSolution:
    case ErrorCode::kSingularR:
    case ErrorCode::kNonFiniteState:
    case ErrorCode::kGimbalLock:
    case ErrorCode::kNotAnEquilibrium: return kModel;
    case ErrorCode::kIo: return kIoFailure;
    case ErrorCode::kHorizonTooShort: return kInvalidInput;
  }
  return kUnexpected;
}

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  bool force = false;
  /// Inputs of later stages; empty means the default name under `out`.
  std::filesystem::path data;
  std::filesystem::path result;
  std::filesystem::path baseline;
  /// Debug: added to P·I in verify-lemmas.
  double corrupt_p = 0.0;
};

inline constexpr const char* kDatasetFile = "dataset.csv";
inline constexpr const char* kResultFile = "result.txt";
inline constexpr const char* kBaselineFile = "baseline.txt";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kResolvedConfigFile = "resolved_config.ini";
inline constexpr const char* kVerifyReportFile = "verify_report.txt";

/// Config file (if any) with defaults filled in and --seed applied.
inline RunConfig load_config(const Options& opts, std::optional<PlantKind> required = std::nullopt) {
  Config config;
  if (opts.config) config = Config::load(*opts.config);
  if (required) config.set_default("run", "plant", to_string(*required));
  RunConfig run = RunConfig::from_config(config);
  if (required && run.plant != *required) {
    throw Error(ErrorCode::kConfigParse, "this command needs [run] plant = " + to_string(*required));
  }
  if (opts.seed) run.seed = *opts.seed;
  return run;
}

namespace detail {

inline std::filesystem::path or_default(const std::filesystem::path& given, const Options& opts, const char* name) {
  return given.empty() ? opts.out / name : given;
}

inline Metadata stamp(const RunConfig& run, const std::string& artifact) {
  return {{"artifact", artifact}, {"config_hash", run.hash()}};
}

inline void write_resolved_config(const RunConfig& run, const Options& opts) {
  write_text_atomic(opts.out / kResolvedConfigFile, "# config_hash = " + run.hash() + "\n" + run.to_text());
}

inline void check_hash(const std::string& what, const Metadata& meta, const RunConfig& run, const Options& opts,
                       std::ostream& log) {
  const auto it = meta.find("config_hash");
  const std::string found = it == meta.end() ? "(none)" : it->second;
  if (found == run.hash()) return;
  const std::string message = what + " has config hash " + found + ", current config is " + run.hash();
  if (!opts.force) throw Error(ErrorCode::kHashMismatch, message + " (use --force to override)");
  log << "warning: " << message << "\n";
}

inline std::string format_complex(std::complex<double> z) {
  return format_double(z.real()) + (z.imag() < 0 ? " - " : " + ") + format_double(std::abs(z.imag())) + "i";
}

inline std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

inline std::string report_text(const ComparisonReport& r, const RunConfig& run) {
  std::string out = "# closed-loop comparison of the model-free and LQR gains\n\n[meta]\n";
  out += "config_hash = " + run.hash() + "\n";
  out += matrix_section("K_mf", r.K_mf) + matrix_section("K_lqr", r.K_lqr) +
         matrix_section("abs_deviation", r.abs_deviation) + matrix_section("rel_deviation", r.rel_deviation);
  out += "\n[summary]\n";
  out += "max_rel_deviation = " + format_double(r.max_rel_deviation) + "\n";
  out += std::string("stable_mf = ") + (r.stable_mf ? "true" : "false") + "\n";
  out += std::string("stable_lqr = ") + (r.stable_lqr ? "true" : "false") + "\n";
  out += "rms_difference = " + format_double(r.rms_difference) + "\n";
  out += "rms_state = " + format_double(r.rms_state) + "\n";
  out += "relative_rms = " + format_double(r.relative_rms()) + "\n";
  if (!r.stable_mf || !r.traj_mf) out += "flag_mf = UnstableClosedLoop\n";
  if (!r.stable_lqr || !r.traj_lqr) out += "flag_lqr = UnstableClosedLoop\n";
  out += "\n[eigenvalues]\n";
  for (Index i = 0; i < r.eig_mf.size(); ++i) out += "mf = " + format_complex(r.eig_mf(i)) + "\n";
  for (Index i = 0; i < r.eig_lqr.size(); ++i) out += "lqr = " + format_complex(r.eig_lqr(i)) + "\n";
  return out;
}

/// Wide CSV of both closed-loop runs: t, ref_i, lqr_x_i, mf_x_i, lqr_u_j, mf_u_j.
inline std::string figure_csv(const ComparisonReport& r, const RunConfig& run) {
  if (!r.traj_lqr || !r.traj_mf) return {};
  const Trajectory& a = *r.traj_lqr;
  const Trajectory& b = *r.traj_mf;
  std::string out = "# config_hash: " + run.hash() + "\nt";
  for (Index i = 0; i < a.num_states(); ++i) out += ",ref_" + std::to_string(i + 1);
  for (Index i = 0; i < a.num_states(); ++i) out += ",lqr_x_" + std::to_string(i + 1);
  for (Index i = 0; i < a.num_states(); ++i) out += ",mf_x_" + std::to_string(i + 1);
  for (Index i = 0; i < a.num_inputs(); ++i) out += ",lqr_u_" + std::to_string(i + 1);
  for (Index i = 0; i < a.num_inputs(); ++i) out += ",mf_u_" + std::to_string(i + 1);
  out += "\n";
  for (Index k = 0; k < a.num_samples(); ++k) {
    out += format_double(a.times(k));
    for (Index i = 0; i < a.num_states(); ++i) out += "," + format_double(r.reference(i, k));
    for (Index i = 0; i < a.num_states(); ++i) out += "," + format_double(a.states(i, k));
    for (Index i = 0; i < a.num_states(); ++i) out += "," + format_double(b.states(i, k));
    for (Index i = 0; i < a.num_inputs(); ++i) out += "," + format_double(a.inputs(i, k));
    for (Index i = 0; i < a.num_inputs(); ++i) out += "," + format_double(b.inputs(i, k));
    out += "\n";
  }
  return out;
}

inline std::string verify_table(const VerificationReport& report) {
  std::ostringstream s;
  s << std::left << std::setw(34) << "check" << std::setw(26) << "value" << std::setw(26) << "tolerance"
    << "status\n";
  for (const auto& c : report.checks) {
    s << std::left << std::setw(34) << c.name << std::setw(26) << format_double(c.value) << std::setw(26)
      << format_double(c.tolerance) << (c.passed ? "ok" : "EXCEEDED") << "\n";
  }
  return s.str();
}

inline std::string gain_line(const Matrix& K) {
  std::string out;
  for (Index i = 0; i < K.rows(); ++i) {
    out += i > 0 ? "; [" : "[";
    for (Index j = 0; j < K.cols(); ++j) out += (j > 0 ? ", " : "") + fixed(K(i, j));
    out += "]";
  }
  return out;
}

}  // namespace detail

inline int cmd_generate(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts);
  const DataSet data = generate_dataset(run);
  detail::write_resolved_config(run, opts);
  write_dataset(data, opts.out / kDatasetFile, detail::stamp(run, "dataset"));
  log << "wrote " << (opts.out / kDatasetFile).string() << " (" << data.num_samples() << " samples)\n";
  return kSuccess;
}

inline int cmd_synthesize(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts);
  Metadata meta;
  const auto data_path = detail::or_default(opts.data, opts, kDatasetFile);
  const DataSet data = read_dataset(data_path, &meta);
  detail::check_hash(data_path.string(), meta, run, opts, log);
  const SynthesisResult result = synthesize(run, data);
  ResultFile file{result, true, detail::stamp(run, "synthesis"), {}};
  write_result(file, opts.out / kResultFile);
  const auto& d = result.diagnostics;
  log << "K_mf = " << detail::gain_line(result.K) << "\n"
      << "solver: " << d.message << " after " << d.outer_iterations << " outer / " << d.inner_iterations
      << " inner iterations, max |g| = " << format_double(d.max_violation_raw) << "\n";
  return d.converged ? kSuccess : kNotConverged;
}

inline int cmd_baseline(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts);
  const Baseline b = baseline(run);
  SynthesisResult r;
  r.K = b.K;
  r.P = b.P;
  write_result({r, false, detail::stamp(run, "baseline"), {}}, opts.out / kBaselineFile);
  log << "K_lqr = " << detail::gain_line(b.K) << "\n";
  return kSuccess;
}

inline int cmd_compare(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts);
  const auto result_path = detail::or_default(opts.result, opts, kResultFile);
  const auto baseline_path = detail::or_default(opts.baseline, opts, kBaselineFile);
  const ResultFile mf = read_result(result_path);
  const ResultFile lqr = read_result(baseline_path);
  for (const auto& w : mf.warnings) log << "warning: " << result_path.string() << ": " << w << "\n";
  for (const auto& w : lqr.warnings) log << "warning: " << baseline_path.string() << ": " << w << "\n";
  detail::check_hash(result_path.string(), mf.metadata, run, opts, log);
  detail::check_hash(baseline_path.string(), lqr.metadata, run, opts, log);
  const ComparisonReport report = compare(run, mf.result.K, lqr.result.K);
  write_text_atomic(opts.out / kReportFile, detail::report_text(report, run));
  const std::string figure = detail::figure_csv(report, run);
  if (!figure.empty()) write_text_atomic(opts.out / ("figure_closed_loop_" + to_string(run.plant) + ".csv"), figure);
  log << "max relative gain deviation " << detail::fixed(report.max_rel_deviation) << ", closed loop "
      << (report.stable_mf ? "stable" : "UNSTABLE") << " (model-free) / " << (report.stable_lqr ? "stable" : "UNSTABLE")
      << " (LQR), RMS trajectory difference " << detail::fixed(100.0 * report.relative_rms(), 2) << "% of RMS state\n";
  return kSuccess;
}

inline int cmd_verify_lemmas(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts);
  const VerificationReport report = verify_lemmas(run, opts.corrupt_p);
  const std::string table = detail::verify_table(report);
  write_text_atomic(opts.out / kVerifyReportFile, "# config_hash: " + run.hash() + "\n" + table);
  log << table;
  return report.all_passed() ? kSuccess : kToleranceExceeded;
}

namespace detail {

struct Stage {
  SynthesisResult result;
  ComparisonReport report;
};

inline Stage run_pipeline(const RunConfig& run, const std::filesystem::path& dir, const Baseline& b) {
  const DataSet data = generate_dataset(run);
  write_dataset(data, dir / kDatasetFile, stamp(run, "dataset"));
  Stage s;
  s.result = synthesize(run, data);
  write_result({s.result, true, stamp(run, "synthesis"), {}}, dir / kResultFile);
  s.report = compare(run, s.result.K, b.K);
  write_text_atomic(dir / kReportFile, report_text(s.report, run));
  const std::string figure = figure_csv(s.report, run);
  if (!figure.empty()) write_text_atomic(dir / ("figure_closed_loop_" + to_string(run.plant) + ".csv"), figure);
  write_text_atomic(dir / kResolvedConfigFile, "# config_hash = " + run.hash() + "\n" + run.to_text());
  return s;
}

inline std::string line_check(const std::string& name, bool ok, const std::string& detail_text) {
  return (ok ? "PASS  " : "FAIL  ") + name + ": " + detail_text + "\n";
}

}  // namespace detail

/**
 * The 747 experiment in two regimes: the printed sampling setup (10 Hz,
 * σ = 1e-3, five seeds) and a dense noiseless run (100 Hz), each compared to
 * the ARE gain and flown on the roll doublet.
 */
inline int cmd_repro_747(const Options& opts, std::ostream& log) {
  const RunConfig base = load_config(opts, PlantKind::kB747);
  const Baseline b = baseline(base);
  SynthesisResult lqr;
  lqr.K = b.K;
  lqr.P = b.P;
  write_result({lqr, false, detail::stamp(base, "baseline"), {}}, opts.out / kBaselineFile);
  std::string summary = "# 747 lateral LQR from data\nK_lqr = " + detail::gain_line(b.K) + "\n\n";
  bool ok = true;

  RunConfig clean = base;
  clean.rate_hz = 100.0;
  clean.substeps = 1;
  clean.sigma = 0.0;
  const auto c = detail::run_pipeline(clean, opts.out / "clean", b);
  const double clean_error = (c.result.K - b.K).cwiseAbs().maxCoeff() / b.K.cwiseAbs().maxCoeff();
  const bool clean_ok = clean_error <= 0.02 && c.report.stable_mf && c.report.relative_rms() <= 0.1;
  ok = ok && clean_ok;
  summary += "[clean: 100 Hz, noiseless]\nK_mf = " + detail::gain_line(c.result.K) + "\n" +
             detail::line_check("gain", clean_error <= 0.02,
                                "|K_mf - K_lqr|_inf / |K_lqr|_inf = " + detail::fixed(clean_error, 5) + " (<= 0.02)") +
             detail::line_check("roll doublet", c.report.stable_mf && c.report.relative_rms() <= 0.1,
                                "RMS difference " + detail::fixed(100.0 * c.report.relative_rms(), 2) + "% of RMS state") +
             "solver: " + c.result.diagnostics.message + "\n\n";

  summary += "[sampled: " + detail::fixed(base.rate_hz, 1) + " Hz, sigma = " + format_double(base.sigma) + "]\n";
  std::vector<double> worst;
  for (std::uint64_t k = 0; k < 5; ++k) {
    RunConfig run = base;
    run.seed = base.seed + k;
    const auto s = detail::run_pipeline(run, opts.out / ("seed_" + std::to_string(run.seed)), b);
    worst.push_back(s.report.max_rel_deviation);
    summary += "seed " + std::to_string(run.seed) + ": K_mf = " + detail::gain_line(s.result.K) +
               ", max element deviation " + detail::fixed(100.0 * s.report.max_rel_deviation, 1) + "%, " +
               s.result.diagnostics.message + "\n";
  }
  std::vector<double> sorted = worst;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const bool sampled_ok = median <= 0.15;
  ok = ok && sampled_ok;
  summary += detail::line_check("elementwise 15%", sampled_ok,
                                "median over seeds of the worst element deviation " + detail::fixed(100.0 * median, 1) + "%");
  write_text_atomic(opts.out / "summary.txt", summary);
  log << summary;
  return ok ? kSuccess : kToleranceExceeded;
}

/// Quadcopter attitude experiment: excite near hover, learn the attitude gain,
/// compare with the hover-linearization LQR gain and fly both on the doublets.
inline int cmd_repro_quad(const Options& opts, std::ostream& log) {
  const RunConfig run = load_config(opts, PlantKind::kQuad);
  const Baseline b = baseline(run);
  SynthesisResult lqr;
  lqr.K = b.K;
  lqr.P = b.P;
  write_result({lqr, false, detail::stamp(run, "baseline"), {}}, opts.out / kBaselineFile);
  const auto s = detail::run_pipeline(run, opts.out, b);
  const Matrix& K = s.result.K;

  const QuadGainCheck g = quad_gain_check(K, b.K);
  const bool gain_ok = g.on_axis_error <= 0.10;
  const bool pattern_ok = g.cross_ratio <= 0.02;
  const bool loop_ok = s.report.stable_mf && s.report.relative_rms() <= 0.1;
  std::string summary = "# quadcopter attitude LQR from data\nK_lqr = " + detail::gain_line(b.K) +
                        "\nK_mf  = " + detail::gain_line(K) + "\nsolver: " + s.result.diagnostics.message + "\n" +
                        detail::line_check("gain", gain_ok, "worst on-axis deviation " + detail::fixed(100.0 * g.on_axis_error, 2) + "% (<= 10%)") +
                        detail::line_check("zero pattern", pattern_ok, "largest cross-axis ratio " + detail::fixed(100.0 * g.cross_ratio, 2) + "% (<= 2%)") +
                        detail::line_check("doublets", loop_ok, "RMS difference " + detail::fixed(100.0 * s.report.relative_rms(), 2) + "% of RMS state") +
                        "info: worst deviation from the printed gain " + detail::fixed(100.0 * g.printed_error, 2) +
                        "% (input scaling differs, not checked)\n";
  write_text_atomic(opts.out / "summary.txt", summary);
  log << summary;
  return gain_ok && pattern_ok && loop_ok ? kSuccess : kToleranceExceeded;
}

}  // namespace mflqr::cli
