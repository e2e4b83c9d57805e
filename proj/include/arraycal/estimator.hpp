#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arraycal/types.hpp"

namespace arraycal {

// Per-subcarrier estimation of the antenna gain/phase vector g from the
// measured matrix R and the ideal line-of-sight matrix A under the model
//
//   R = diag(g) A diag(s) + Z,   |s_d| = 1.
//
// Both estimators leave g determined up to a global phase; results are
// returned with that gauge fixed so that arg(g_1) = 0.

enum class Algorithm { kCoordinateDescent, kEigenvector };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

struct SolverConfig {
  int max_iterations = 40;
  /// Stop early once |r_{m-1} - r_m| / r_{m-1} drops below this value.
  /// Zero disables early stopping.
  double relative_residual_tolerance = 1e-10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GainPhaseEstimate {
  CVector g_hat;
  CVector s_hat;
  double residual_frobenius = 0.0;
  int iterations_used = 0;
  Algorithm algorithm = Algorithm::kCoordinateDescent;
  /// Residual after each full iteration (coordinate descent only).
  std::vector<double> residual_trace;
  /// Columns whose projection in the s-block update was exactly zero.
  std::size_t uninformative_columns = 0;
};

/// ||diag(g) A diag(s) - R||_F
double residual_norm(const CMatrix& R, const CMatrix& A, const CVector& g, const CVector& s);

struct PhaseBlock {
  CVector s;
  std::vector<std::size_t> uninformative;  // columns where the projection vanished; s_i = 1 there
};

/// Exact minimizer over unit-modulus s with g fixed:
/// s_i = exp(-j arg(R_{:i}^H (g ⊙ A_{:i}))).
PhaseBlock update_s_block(const CMatrix& R, const CMatrix& A, const CVector& g);

/// Exact minimizer over g with s fixed:
/// g_i = (A_{i:} ⊙ s)^H R_{i:} / ||A_{i:} ⊙ s||^2.
CVector update_g_block(const CMatrix& R, const CMatrix& A, const CVector& s);

/// Alternating block minimization starting from a complex standard normal
/// g, s-block first in every iteration.
GainPhaseEstimate coordinate_descent(const CMatrix& R, const CMatrix& A, const SolverConfig& config);

/// Sample mean of (R_{:d} ⊘ A_{:d})(R_{:d} ⊘ A_{:d})^H over d, symmetrized.
CMatrix sample_autocorrelation(const CMatrix& R, const CMatrix& A);

struct EigenPair {
  double value = 0.0;
  CVector vector;  // unit norm
};

struct EigenSolverOptions {
  /// Dense Hermitian decomposition up to this size, power iteration above.
  std::size_t dense_limit = 512;
  double power_tolerance = 1e-12;
  int power_max_iterations = 100000;
};

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix. Among
/// equal largest eigenvalues the first in the solver's ascending order wins.
EigenPair principal_eigpair(const CMatrix& C, const EigenSolverOptions& options = {});

/// g = sqrt(λ) v for the principal pair of the sample autocorrelation, then
/// one s-block pass so the result carries transmit phases and a residual.
GainPhaseEstimate eigenvector_estimate(const CMatrix& R, const CMatrix& A,
                                       const EigenSolverOptions& options = {});

GainPhaseEstimate estimate(Algorithm algorithm, const CMatrix& R, const CMatrix& A,
                           const SolverConfig& config);

/// Rotation e^{-j arg(g_k)} for the first nonzero g_k (k = 0 when possible).
cplx global_phase_rotation(const CVector& g);

/// g e^{-j arg(g_1)}; falls back to the first nonzero entry when g_1 = 0.
CVector normalize_global_phase(const CVector& g);

}  // namespace arraycal
