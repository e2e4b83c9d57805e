#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "arraycal/estimator.hpp"
#include "arraycal/geometry.hpp"

namespace arraycal {

/// Reported for orthogonal vectors instead of -inf; also the floor for any
/// similarity too small to represent meaningfully.
inline constexpr double kOrthogonalSimilarityDb = -1000.0;

/// 10 log10(|ĝ^H g|^2 / (||ĝ||^2 ||g||^2)), clamped to [kOrthogonalSimilarityDb, 0].
double cosine_similarity_db(const CVector& g_hat, const CVector& g_true);

/// |s_C,d - s_B,d| per transmit position, where each s is the starting-phase
/// estimate exp(j arg Σ_{l∈set} r*_{ld} g_l a_{ld}) using only one subarray.
struct AgreementSeries {
  std::string label_b;
  std::string label_c;
  std::vector<std::optional<double>> values;  // nullopt where a sum vanished
};

AgreementSeries starting_phase_agreement(const CMatrix& R, const CMatrix& A, const CVector& g,
                                         const std::vector<std::size_t>& subset_b,
                                         const std::vector<std::size_t>& subset_c,
                                         std::string label_b = "B", std::string label_c = "C");

/// White circular Gaussian noise at the per-element SNR relative to the
/// power of the input. snr_db = +inf returns the input unchanged.
CMatrix add_noise(const CMatrix& clean, double snr_db, std::uint64_t seed);
MeasurementTensor add_noise(const MeasurementTensor& clean, double snr_db, std::uint64_t seed);

/// Linear interpolation between order statistics (numpy's default).
double quantile(std::vector<double> values, double q);

struct SweepRow {
  double snr_db = 0.0;
  Algorithm algorithm = Algorithm::kCoordinateDescent;
  double mean_p_db = 0.0;
  double q1_p_db = 0.0;
  double q3_p_db = 0.0;
  std::size_t n_realizations = 0;
};

struct SweepResult {
  std::size_t num_antennas = 0;
  std::size_t num_positions = 0;
  std::uint64_t seed = 0;
  int max_iterations = 0;
  std::vector<SweepRow> rows;  // snr-major, iterative before eigenvector

  const SweepRow& row(double snr_db, Algorithm algorithm) const;
};

/// Paired Monte-Carlo comparison of both estimators: for every (snr, trial)
/// one noise draw is shared by the two algorithms. Deterministic in
/// `master_seed` and independent of the parallelism degree.
SweepResult snr_sweep(const CMatrix& R_clean, const CMatrix& A, const CVector& g_true,
                      const std::vector<double>& snr_grid, std::size_t realizations,
                      const SolverConfig& config, std::uint64_t master_seed);

/// Writes the sweep as delimited text: '#' header lines echoing the
/// configuration, then snr_db,algorithm,mean_p_db,q1_p_db,q3_p_db,n_realizations.
void write_sweep_table(std::ostream& os, const SweepResult& result, char delimiter = ',');

struct ResidualTrace {
  std::vector<std::vector<double>> restarts;  // residual after each iteration
  double eigenvector_residual = 0.0;
  double measurement_norm = 0.0;              // ||R||_F
};

/// Runs coordinate descent from `restarts` independent initializations.
ResidualTrace residual_trace(const CMatrix& R, const CMatrix& A, const SolverConfig& config,
                             std::size_t restarts);

}  // namespace arraycal
