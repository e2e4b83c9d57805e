#include "arraycal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "arraycal/parallel.hpp"
#include "arraycal/rng.hpp"

namespace arraycal {

double cosine_similarity_db(const CVector& g_hat, const CVector& g_true) {
  if (g_hat.size() != g_true.size()) throw ValidationError("vectors differ in length");
  const double norm_hat = g_hat.squaredNorm();
  const double norm_true = g_true.squaredNorm();
  if (!(norm_hat > 0.0) || !(norm_true > 0.0)) throw DegenerateError("cosine similarity of a zero vector");
  const double ratio = std::norm(g_hat.dot(g_true)) / (norm_hat * norm_true);
  if (!(ratio > 0.0)) return kOrthogonalSimilarityDb;
  return std::clamp(10.0 * std::log10(std::min(ratio, 1.0)), kOrthogonalSimilarityDb, 0.0);
}

AgreementSeries starting_phase_agreement(const CMatrix& R, const CMatrix& A, const CVector& g,
                                         const std::vector<std::size_t>& subset_b,
                                         const std::vector<std::size_t>& subset_c, std::string label_b,
                                         std::string label_c) {
  if (R.rows() != A.rows() || R.cols() != A.cols() || g.size() != R.rows())
    throw ValidationError("R, A and g have inconsistent shapes");
  if (subset_b.empty() || subset_c.empty()) throw ValidationError("antenna subsets must be non-empty");
  for (std::size_t l : subset_b)
    if (l >= static_cast<std::size_t>(R.rows())) throw ValidationError("antenna index out of range");
  for (std::size_t l : subset_c) {
    if (l >= static_cast<std::size_t>(R.rows())) throw ValidationError("antenna index out of range");
    if (std::find(subset_b.begin(), subset_b.end(), l) != subset_b.end())
      throw ValidationError("antenna subsets must be disjoint");
  }

  AgreementSeries series{std::move(label_b), std::move(label_c), {}};
  series.values.resize(static_cast<std::size_t>(R.cols()));
  const auto projection = [&](const std::vector<std::size_t>& subset, Eigen::Index d) {
    cplx sum(0.0, 0.0);
    for (std::size_t l : subset) {
      const auto i = static_cast<Eigen::Index>(l);
      sum += std::conj(R(i, d)) * g(i) * A(i, d);
    }
    return sum;
  };
  for (Eigen::Index d = 0; d < R.cols(); ++d) {
    const cplx sum_b = projection(subset_b, d);
    const cplx sum_c = projection(subset_c, d);
    if (sum_b == cplx(0.0, 0.0) || sum_c == cplx(0.0, 0.0)) continue;
    const cplx s_b = std::polar(1.0, std::arg(sum_b));
    const cplx s_c = std::polar(1.0, std::arg(sum_c));
    series.values[static_cast<std::size_t>(d)] = std::min(std::abs(s_c - s_b), 2.0);
  }
  return series;
}

CMatrix add_noise(const CMatrix& clean, double snr_db, std::uint64_t seed) {
  CMatrix noisy = clean;
  Engine engine = make_engine(seed, StreamPurpose::kMeasurementNoise);
  detail::add_gaussian_noise(noisy, snr_db, engine);
  return noisy;
}

MeasurementTensor add_noise(const MeasurementTensor& clean, double snr_db, std::uint64_t seed) {
  MeasurementTensor noisy = clean;
  parallel_for(noisy.num_subcarriers(), [&](std::size_t n) {
    Engine engine = make_engine(seed, StreamPurpose::kMeasurementNoise, {n});
    detail::add_gaussian_noise(noisy.slices[n], snr_db, engine);
  });
  return noisy;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double position = q * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, values.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return values[lower] + fraction * (values[upper] - values[lower]);
}

const SweepRow& SweepResult::row(double snr_db, Algorithm algorithm) const {
  for (const auto& r : rows)
    if (r.snr_db == snr_db && r.algorithm == algorithm) return r;
  throw ValidationError("no sweep row for the requested SNR and algorithm");
}

SweepResult snr_sweep(const CMatrix& R_clean, const CMatrix& A, const CVector& g_true,
                      const std::vector<double>& snr_grid, std::size_t realizations,
                      const SolverConfig& config, std::uint64_t master_seed) {
  if (snr_grid.empty()) throw ValidationError("SNR grid is empty");
  if (realizations == 0) throw ValidationError("at least one realization per SNR is required");
  if (R_clean.rows() != A.rows() || R_clean.cols() != A.cols() || g_true.size() != R_clean.rows())
    throw ValidationError("R, A and g_true have inconsistent shapes");
  config.validate();

  const std::size_t trials = snr_grid.size() * realizations;
  std::vector<double> iterative(trials);
  std::vector<double> eigen(trials);
  parallel_for(trials, [&](std::size_t job) {
    const std::size_t i = job / realizations;
    const std::size_t t = job % realizations;
    const CMatrix noisy = add_noise(R_clean, snr_grid[i], stream_seed(master_seed, StreamPurpose::kSweepNoise, {i, t}));
    SolverConfig trial_config = config;
    trial_config.seed = stream_seed(master_seed, StreamPurpose::kInitialGain, {i, t});
    iterative[job] = cosine_similarity_db(coordinate_descent(noisy, A, trial_config).g_hat, g_true);
    eigen[job] = cosine_similarity_db(eigenvector_estimate(noisy, A).g_hat, g_true);
  });

  SweepResult result;
  result.num_antennas = static_cast<std::size_t>(R_clean.rows());
  result.num_positions = static_cast<std::size_t>(R_clean.cols());
  result.seed = master_seed;
  result.max_iterations = config.max_iterations;
  const auto summarize = [&](const std::vector<double>& all, std::size_t i, Algorithm algorithm) {
    const auto first = all.begin() + static_cast<std::ptrdiff_t>(i * realizations);
    std::vector<double> sample(first, first + static_cast<std::ptrdiff_t>(realizations));
    SweepRow row;
    row.snr_db = snr_grid[i];
    row.algorithm = algorithm;
    row.mean_p_db = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(realizations);
    row.q1_p_db = quantile(sample, 0.25);
    row.q3_p_db = quantile(sample, 0.75);
    row.n_realizations = realizations;
    return row;
  };
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    result.rows.push_back(summarize(iterative, i, Algorithm::kCoordinateDescent));
    result.rows.push_back(summarize(eigen, i, Algorithm::kEigenvector));
  }
  return result;
}

void write_sweep_table(std::ostream& os, const SweepResult& result, char delimiter) {
  const auto saved = os.precision();
  os << "# arraycal snr sweep\n"
     << "# antennas=" << result.num_antennas << " positions=" << result.num_positions << " seed=" << result.seed
     << " max_iterations=" << result.max_iterations << "\n"
     << "# realizations per snr point: " << (result.rows.empty() ? 0 : result.rows.front().n_realizations)
     << " (desk scale; studies of the low-snr regime typically use thousands)\n";
  os << "snr_db" << delimiter << "algorithm" << delimiter << "mean_p_db" << delimiter << "q1_p_db" << delimiter
     << "q3_p_db" << delimiter << "n_realizations\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : result.rows) {
    os << row.snr_db << delimiter << to_string(row.algorithm) << delimiter << row.mean_p_db << delimiter
       << row.q1_p_db << delimiter << row.q3_p_db << delimiter << row.n_realizations << "\n";
  }
  os.precision(saved);
}

ResidualTrace residual_trace(const CMatrix& R, const CMatrix& A, const SolverConfig& config,
                             std::size_t restarts) {
  if (restarts < 1) throw ValidationError("at least one restart is required");
  ResidualTrace trace;
  trace.restarts.resize(restarts);
  parallel_for(restarts, [&](std::size_t k) {
    SolverConfig restart_config = config;
    restart_config.seed = stream_seed(config.seed, StreamPurpose::kInitialGain, {k});
    trace.restarts[k] = coordinate_descent(R, A, restart_config).residual_trace;
  });
  trace.eigenvector_residual = eigenvector_estimate(R, A).residual_frobenius;
  trace.measurement_norm = R.norm();
  return trace;
}

}  // namespace arraycal
