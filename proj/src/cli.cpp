#include "arraycal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "arraycal/dataset_io.hpp"
#include "arraycal/metrics.hpp"
#include "arraycal/offsets.hpp"
#include "arraycal/parallel.hpp"
#include "arraycal/scenario.hpp"

namespace arraycal::cli {

namespace {

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void print(std::ostream& os, bool aligned) const {
    if (!aligned) {
      print_row(os, header_, {});
      for (const auto& row : rows_) print_row(os, row, {});
      return;
    }
    std::vector<std::size_t> widths(header_.size());
    for (std::size_t c = 0; c < header_.size(); ++c) widths[c] = header_[c].size();
    for (const auto& row : rows_)
      for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    print_row(os, header_, widths);
    for (const auto& row : rows_) print_row(os, row, widths);
  }

 private:
  static void print_row(std::ostream& os, const std::vector<std::string>& row, const std::vector<std::size_t>& widths) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (widths.empty()) {
        os << (c ? "," : "") << row[c];
      } else {
        os << (c ? "  " : "") << std::setw(static_cast<int>(widths[c])) << row[c];
      }
    }
    os << "\n";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string fmt(double v, int precision = 12) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

IdealTensor ideal_for(const DatasetBundle& bundle) {
  if (bundle.ideal) return *bundle.ideal;
  return build_ideal_tensor(bundle.geometry, bundle.track, bundle.config);
}

void require_subcarrier(const DatasetBundle& bundle, std::size_t n) {
  if (n >= bundle.config.num_subcarriers)
    throw ValidationError("subcarrier " + std::to_string(n) + " out of range (bundle has " +
                          std::to_string(bundle.config.num_subcarriers) + ")");
}

struct GenerateOptions {
  std::string scenario = "grid-4x8";
  std::string array_file;
  std::string track_file;
  std::size_t num_positions = 256;
  std::size_t num_subcarriers = 64;
  double subcarrier_spacing = 781250.0;
  double carrier_freq = 1.272e9;
  double center_freq = 0.0;
  std::optional<double> snr_db;
  std::uint64_t seed = 1;
  double time_fraction = 0.45;
  bool no_ideal = false;
  std::string output;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  SyntheticOptions options;
  if (o.center_freq > 0.0) {
    options.config = RadioConfig::from_center_frequency(o.center_freq, o.subcarrier_spacing, o.num_subcarriers);
  } else {
    options.config.carrier_freq_hz = o.carrier_freq;
    options.config.subcarrier_spacing_hz = o.subcarrier_spacing;
    options.config.num_subcarriers = o.num_subcarriers;
  }
  options.config.validate();
  options.seed = o.seed;
  options.snr_db = o.snr_db;
  options.include_ideal = !o.no_ideal;
  options.time_fraction = o.time_fraction;

  DatasetBundle bundle;
  if (!o.array_file.empty() || !o.track_file.empty()) {
    if (o.array_file.empty() || o.track_file.empty())
      throw ValidationError("--array-file and --track-file must be given together");
    bundle = synthesize_bundle(import_geometry(o.array_file), import_track(o.track_file), options);
    bundle.attributes["scenario"] = "imported";
  } else {
    if (o.num_positions < 1) throw ValidationError("--num-positions must be at least 1");
    bundle = generate_scenario(parse_scenario(o.scenario), o.num_positions, options);
  }
  write_bundle(bundle, o.output);

  out << "wrote " << o.output << ": L=" << bundle.num_antennas() << " D=" << bundle.num_positions()
      << " N_sub=" << bundle.config.num_subcarriers << " snr_db=" << (o.snr_db ? fmt(*o.snr_db) : "none")
      << " subarrays=";
  for (std::size_t k = 0; k < bundle.geometry.subarrays.size(); ++k)
    out << (k ? "/" : "") << bundle.geometry.subarrays[k].label;
  out << "\npayload_digest=" << payload_digest(bundle.measurements) << "\n";
  return kSuccess;
}

struct CalibrateOptions {
  std::string input;
  std::string output;
  std::string algorithm = "iterative";
  int max_iterations = 40;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
  bool no_gains = false;
  bool check_truth = false;
};

int cmd_calibrate(const CalibrateOptions& o, std::ostream& out, bool aligned) {
  const Algorithm algorithm = parse_algorithm(o.algorithm);
  SolverConfig solver{o.max_iterations, o.tolerance, o.seed};
  solver.validate();
  const DatasetBundle bundle = read_bundle(o.input);
  const IdealTensor ideal = ideal_for(bundle);

  const std::vector<GainPhaseEstimate> estimates = estimate_subcarriers(bundle.measurements, ideal, algorithm, solver);
  CalibrationRecord record;
  record.config = bundle.config;
  record.offsets = extract_offsets(estimates, bundle.config);
  double total_sq = 0.0;
  GainSeries gains;
  for (const auto& e : estimates) {
    record.residuals.push_back(e.residual_frobenius);
    total_sq += e.residual_frobenius * e.residual_frobenius;
    gains.push_back(e.g_hat);
  }
  if (!o.no_gains) record.gains = std::move(gains);
  record.provenance.algorithm = to_string(algorithm);
  record.provenance.max_iterations = algorithm == Algorithm::kCoordinateDescent ? o.max_iterations : 0;
  record.provenance.seed = o.seed;
  record.provenance.input_digest = payload_digest(bundle.measurements);
  write_calibration(record, o.output);

  Table table({"antenna", "phase_offset_rad", "time_offset_ns", "fit_residual_rad"});
  for (std::size_t l = 0; l < record.offsets.size(); ++l) {
    const auto& off = record.offsets[l];
    table.add({std::to_string(l), fmt(off.phase_offset_rad), fmt(off.time_offset_s * 1e9),
               fmt(off.fit_residual_rad, 6)});
  }
  table.print(out, aligned);
  out << "# algorithm=" << record.provenance.algorithm << " total_residual=" << fmt(std::sqrt(total_sq))
      << " reference_antenna=0\n";

  if (o.check_truth) {
    if (!bundle.truth_profile) throw ValidationError("--check-truth needs a bundle with ground truth");
    const auto& truth = *bundle.truth_profile;
    double max_phase_error = 0.0;
    double max_time_error = 0.0;
    for (std::size_t l = 0; l < record.offsets.size(); ++l) {
      const double expected_phase = wrap_to_2pi(truth.phase_offsets[l] - truth.phase_offsets[0]);
      const double expected_time = truth.time_offsets[l] - truth.time_offsets[0];
      max_phase_error =
          std::max(max_phase_error, std::abs(wrap_to_pi(record.offsets[l].phase_offset_rad - expected_phase)));
      max_time_error = std::max(max_time_error, std::abs(record.offsets[l].time_offset_s - expected_time));
    }
    const bool pass = max_phase_error <= 1e-9 && max_time_error <= 1e-12;
    out << "check-truth: " << (pass ? "PASS" : "FAIL") << " max_phase_error_rad=" << fmt(max_phase_error, 3)
        << " max_time_error_s=" << fmt(max_time_error, 3) << "\n";
    if (!pass) return kDegenerate;
  }
  return kSuccess;
}

struct ApplyOptions {
  std::string input;
  std::string calibration;
  std::string output;
  std::string mode = "per-subcarrier";
  bool force = false;
};

int cmd_apply(const ApplyOptions& o, std::ostream& out) {
  if (o.mode != "per-subcarrier" && o.mode != "parametric")
    throw ValidationError("unknown mode '" + o.mode + "' (expected per-subcarrier or parametric)");
  DatasetBundle bundle = read_bundle(o.input);
  const CalibrationRecord record = read_calibration(o.calibration);
  check_provenance(record, bundle, o.force);

  CalibrationMode mode;
  if (o.mode == "per-subcarrier") {
    if (!record.gains) throw ValidationError("calibration record has no per-subcarrier gains; use --mode parametric");
    mode = PerSubcarrierCalibration{*record.gains};
  } else {
    mode = ParametricCalibration{record.offsets, bundle.config};
  }
  const std::string source_digest = payload_digest(bundle.measurements);
  bundle.measurements = apply_calibration(bundle.measurements, mode);
  // The embedded impairment truth no longer describes the corrected data.
  bundle.truth_profile.reset();
  bundle.attributes["calibrated"] = o.mode;
  bundle.attributes["source_digest"] = source_digest;
  write_bundle(bundle, o.output);
  out << "wrote " << o.output << " (" << o.mode << ")\npayload_digest=" << payload_digest(bundle.measurements)
      << "\n";
  return kSuccess;
}

struct EvaluateOptions {
  std::string input;
  std::string calibration;
  std::string reference;
  std::size_t subcarrier = 0;
  std::string algorithm = "iterative";
  int max_iterations = 40;
  std::uint64_t seed = 0;
  std::string subarray_b;
  std::string subarray_c;
};

CVector gains_from_record(const std::string& path, std::size_t n) {
  const CalibrationRecord record = read_calibration(path);
  if (!record.gains) throw ValidationError("calibration record '" + path + "' has no per-subcarrier gains");
  if (n >= record.gains->size()) throw ValidationError("calibration record does not cover the subcarrier");
  return (*record.gains)[n];
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, bool aligned) {
  const DatasetBundle bundle = read_bundle(o.input);
  require_subcarrier(bundle, o.subcarrier);
  const IdealTensor ideal = ideal_for(bundle);
  const CMatrix& R = bundle.measurements[o.subcarrier];
  const CMatrix& A = ideal[o.subcarrier];

  CVector g_hat;
  if (!o.calibration.empty()) {
    g_hat = gains_from_record(o.calibration, o.subcarrier);
  } else {
    SolverConfig solver{o.max_iterations, 1e-10, o.seed};
    g_hat = estimate(parse_algorithm(o.algorithm), R, A, solver).g_hat;
  }
  if (static_cast<std::size_t>(g_hat.size()) != bundle.num_antennas())
    throw ValidationError("gain vector length does not match the bundle");

  std::optional<CVector> g_ref;
  if (!o.reference.empty()) {
    g_ref = gains_from_record(o.reference, o.subcarrier);
  } else if (bundle.truth_profile) {
    g_ref = impairment_gains(*bundle.truth_profile, o.subcarrier, bundle.config);
  }
  if (g_ref) {
    if (g_ref->size() != g_hat.size()) throw ValidationError("reference gain vector length does not match");
    out << "p_db," << fmt(cosine_similarity_db(g_hat, *g_ref), 17) << "\n";
  } else {
    out << "# no ground truth or --reference; P_dB not computed\n";
  }

  if (!o.subarray_b.empty() || !o.subarray_c.empty()) {
    if (o.subarray_b.empty() || o.subarray_c.empty())
      throw ValidationError("--subarray-b and --subarray-c must be given together");
    const Subarray& b = bundle.geometry.subarray(o.subarray_b);
    const Subarray& c = bundle.geometry.subarray(o.subarray_c);
    const AgreementSeries series = starting_phase_agreement(R, A, g_hat, b.antennas, c.antennas, b.label, c.label);
    Table table({"d", "agreement_" + c.label + "_" + b.label});
    for (std::size_t d = 0; d < series.values.size(); ++d)
      table.add({std::to_string(d), series.values[d] ? fmt(*series.values[d], 17) : "undefined"});
    table.print(out, aligned);
  }
  return kSuccess;
}

struct SweepOptions {
  std::string input;
  std::string output;
  std::size_t subcarrier = 0;
  std::string snr = "-12:1:5";
  std::size_t realizations = 200;
  int max_iterations = 40;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
  std::string reference = "truth";
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  const std::vector<double> grid = parse_snr_grid(o.snr);
  SolverConfig solver{o.max_iterations, o.tolerance, o.seed};
  solver.validate();
  if (o.realizations < 1) throw ValidationError("--realizations must be at least 1");
  const DatasetBundle bundle = read_bundle(o.input);
  require_subcarrier(bundle, o.subcarrier);
  const IdealTensor ideal = ideal_for(bundle);
  const CMatrix& R = bundle.measurements[o.subcarrier];
  const CMatrix& A = ideal[o.subcarrier];

  CVector g_true;
  if (o.reference == "truth") {
    if (!bundle.truth_profile) throw ValidationError("bundle has no ground truth; use --reference estimate");
    g_true = impairment_gains(*bundle.truth_profile, o.subcarrier, bundle.config);
  } else if (o.reference == "estimate") {
    g_true = coordinate_descent(R, A, solver).g_hat;
  } else {
    throw ValidationError("unknown reference '" + o.reference + "' (expected truth or estimate)");
  }

  const SweepResult result = snr_sweep(R, A, g_true, grid, o.realizations, solver, o.seed);
  if (o.output.empty()) {
    write_sweep_table(out, result);
  } else {
    std::ofstream file(o.output);
    if (!file) throw IoError("cannot open '" + o.output + "' for writing");
    write_sweep_table(file, result);
    if (!file) throw IoError("error while writing '" + o.output + "'");
    out << "wrote " << o.output << ": " << result.rows.size() << " rows (" << grid.size() << " SNR points x 2 algorithms, "
        << o.realizations << " realizations each)\n";
  }
  return kSuccess;
}

int default_parallelism() {
  if (const char* env = std::getenv(kParallelismEnv)) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw ValidationError(std::string(kParallelismEnv) + " must be an integer");
    }
  }
  return 1;
}

}  // namespace

std::vector<double> parse_snr_grid(const std::string& text) {
  std::vector<double> grid;
  const auto parse = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size() || !std::isfinite(v))
      throw ValidationError("invalid SNR value '" + token + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw ValidationError("SNR range must be start:step:stop");
    const double start = parse(parts[0]);
    const double step = parse(parts[1]);
    const double stop = parse(parts[2]);
    if (!(step > 0.0) || stop < start) throw ValidationError("SNR range needs step > 0 and stop >= start");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) grid.push_back(start + static_cast<double>(k) * step);
  } else {
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) grid.push_back(parse(token));
  }
  if (grid.empty()) throw ValidationError("SNR grid is empty");
  return grid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool aligned) {
  CLI::App app{"Phase and sampling-time offset calibration for distributed antenna arrays"};
  app.name(args.empty() ? "arraycal" : args.front());
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--parallel", threads, "Worker threads (default: $ARRAYCAL_PARALLELISM or 1)");

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Synthesize a bundle with embedded ground truth");
  generate->add_option("--scenario", gen.scenario, "grid-4x8 or distributed-4x-2x4")->capture_default_str();
  generate->add_option("--array-file", gen.array_file, "Antenna positions (index, x, y, z per line)");
  generate->add_option("--track-file", gen.track_file, "Transmitter positions (index, x, y, z per line)");
  generate->add_option("--num-positions", gen.num_positions, "Transmitter positions D")->capture_default_str();
  generate->add_option("--num-subcarriers", gen.num_subcarriers, "Subcarriers N_sub")->capture_default_str();
  generate->add_option("--subcarrier-spacing", gen.subcarrier_spacing, "Hz")->capture_default_str();
  auto* carrier = generate->add_option("--carrier-freq", gen.carrier_freq, "Lowermost subcarrier frequency, Hz")
                      ->capture_default_str();
  generate->add_option("--center-freq", gen.center_freq, "Band-center frequency, Hz")->excludes(carrier);
  generate->add_option("--snr", gen.snr_db, "Per-element SNR in dB (omit for noiseless)");
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--time-fraction", gen.time_fraction, "Time offsets within this fraction of the unambiguous limit")
      ->capture_default_str();
  generate->add_flag("--no-ideal", gen.no_ideal, "Do not embed the ideal tensor");
  generate->add_option("-o,--output", gen.output)->required();

  CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate per-antenna phase and time offsets");
  calibrate->add_option("-i,--input", cal.input)->required();
  calibrate->add_option("-o,--output", cal.output)->required();
  calibrate->add_option("--algorithm", cal.algorithm, "iterative or eigenvector")->capture_default_str();
  calibrate->add_option("--max-iterations", cal.max_iterations)->capture_default_str();
  calibrate->add_option("--tolerance", cal.tolerance, "Relative residual change for early stop")->capture_default_str();
  calibrate->add_option("--seed", cal.seed)->capture_default_str();
  calibrate->add_flag("--no-gains", cal.no_gains, "Omit the per-subcarrier gain payload");
  calibrate->add_flag("--check-truth", cal.check_truth, "Compare against the embedded ground truth");

  ApplyOptions app_opts;
  auto* apply = app.add_subcommand("apply", "Apply a calibration record to a bundle");
  apply->add_option("-i,--input", app_opts.input)->required();
  apply->add_option("-c,--calibration", app_opts.calibration)->required();
  apply->add_option("-o,--output", app_opts.output)->required();
  apply->add_option("--mode", app_opts.mode, "per-subcarrier or parametric")->capture_default_str();
  apply->add_flag("--force", app_opts.force, "Apply even if the record was computed from other data");

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Cosine similarity and subarray starting-phase agreement");
  evaluate->add_option("-i,--input", ev.input)->required();
  evaluate->add_option("-c,--calibration", ev.calibration, "Record providing the estimate (default: estimate now)");
  evaluate->add_option("--reference", ev.reference, "Record providing the reference (default: ground truth)");
  evaluate->add_option("--subcarrier", ev.subcarrier)->capture_default_str();
  evaluate->add_option("--algorithm", ev.algorithm)->capture_default_str();
  evaluate->add_option("--max-iterations", ev.max_iterations)->capture_default_str();
  evaluate->add_option("--seed", ev.seed)->capture_default_str();
  evaluate->add_option("--subarray-b", ev.subarray_b);
  evaluate->add_option("--subarray-c", ev.subarray_c);

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "Paired low-SNR comparison of both estimators");
  sweep->add_option("-i,--input", sw.input)->required();
  sweep->add_option("-o,--output", sw.output, "Table file (default: stdout)");
  sweep->add_option("--subcarrier", sw.subcarrier)->capture_default_str();
  sweep->add_option("--snr", sw.snr, "start:step:stop or comma list, dB")->capture_default_str();
  sweep->add_option("--realizations", sw.realizations)->capture_default_str();
  sweep->add_option("--max-iterations", sw.max_iterations)->capture_default_str();
  sweep->add_option("--tolerance", sw.tolerance)->capture_default_str();
  sweep->add_option("--seed", sw.seed)->capture_default_str();
  sweep->add_option("--reference", sw.reference, "truth or estimate")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    set_parallelism(threads > 0 ? threads : default_parallelism());
    if (*generate) return cmd_generate(gen, out);
    if (*calibrate) return cmd_calibrate(cal, out, aligned);
    if (*apply) return cmd_apply(app_opts, out);
    if (*evaluate) return cmd_evaluate(ev, out, aligned);
    if (*sweep) return cmd_sweep(sw, out);
  } catch (const ProvenanceError& e) {
    err << "error: " << e.what() << "\n";
    return kProvenance;
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace arraycal::cli
