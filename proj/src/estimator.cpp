#include "arraycal/estimator.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "arraycal/rng.hpp"

namespace arraycal {

namespace {

void check_shapes(const CMatrix& R, const CMatrix& A) {
  if (R.rows() != A.rows() || R.cols() != A.cols())
    throw ValidationError("R is " + std::to_string(R.rows()) + "x" + std::to_string(R.cols()) + " but A is " +
                          std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  if (R.rows() < 1 || R.cols() < 1) throw ValidationError("R and A must be non-empty");
}

void apply_gauge(GainPhaseEstimate& estimate) {
  const cplx rotation = global_phase_rotation(estimate.g_hat);
  estimate.g_hat = normalize_global_phase(estimate.g_hat);
  // s absorbs the inverse rotation so diag(g) A diag(s) is unchanged.
  estimate.s_hat *= std::conj(rotation);
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kCoordinateDescent:
      return "iterative";
    case Algorithm::kEigenvector:
      return "eigenvector";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "iterative" || name == "coordinate_descent" || name == "coordinate-descent")
    return Algorithm::kCoordinateDescent;
  if (name == "eigenvector") return Algorithm::kEigenvector;
  throw ValidationError("unknown algorithm '" + name + "' (expected iterative or eigenvector)");
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  if (!(relative_residual_tolerance >= 0.0)) throw ValidationError("tolerance must be non-negative");
}

double residual_norm(const CMatrix& R, const CMatrix& A, const CVector& g, const CVector& s) {
  check_shapes(R, A);
  if (g.size() != R.rows() || s.size() != R.cols())
    throw ValidationError("g and s must match the rows and columns of R");
  return (g.asDiagonal() * A * s.asDiagonal() - R).norm();
}

PhaseBlock update_s_block(const CMatrix& R, const CMatrix& A, const CVector& g) {
  check_shapes(R, A);
  if (g.size() != R.rows()) throw ValidationError("g must have one entry per row of R");
  PhaseBlock block{CVector(R.cols()), {}};
  for (Eigen::Index i = 0; i < R.cols(); ++i) {
    const cplx projection = R.col(i).dot(g.cwiseProduct(A.col(i)));  // R_{:i}^H (g ⊙ A_{:i})
    if (projection == cplx(0.0, 0.0)) {
      block.s(i) = 1.0;
      block.uninformative.push_back(static_cast<std::size_t>(i));
    } else {
      block.s(i) = std::polar(1.0, -std::arg(projection));
    }
  }
  return block;
}

CVector update_g_block(const CMatrix& R, const CMatrix& A, const CVector& s) {
  check_shapes(R, A);
  if (s.size() != R.cols()) throw ValidationError("s must have one entry per column of R");
  CVector g(R.rows());
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    const CVector weighted = A.row(i).transpose().cwiseProduct(s);  // A_{i:} ⊙ s
    const double energy = weighted.squaredNorm();
    if (!(energy > 0.0)) throw DegenerateError("row " + std::to_string(i) + " of A ⊙ s has zero norm");
    g(i) = weighted.dot(R.row(i).transpose()) / energy;
  }
  return g;
}

GainPhaseEstimate coordinate_descent(const CMatrix& R, const CMatrix& A, const SolverConfig& config) {
  check_shapes(R, A);
  config.validate();

  Engine engine(config.seed);
  CVector g(R.rows());
  for (Eigen::Index l = 0; l < g.size(); ++l) g(l) = complex_normal(engine);

  GainPhaseEstimate result;
  result.algorithm = Algorithm::kCoordinateDescent;
  result.residual_trace.reserve(static_cast<std::size_t>(config.max_iterations));

  CVector s;
  double previous = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= config.max_iterations; ++m) {
    PhaseBlock block = update_s_block(R, A, g);
    s = std::move(block.s);
    result.uninformative_columns = block.uninformative.size();
    g = update_g_block(R, A, s);

    const double residual = residual_norm(R, A, g, s);
    result.residual_trace.push_back(residual);
    result.iterations_used = m;
    if (residual == 0.0) break;
    if (config.relative_residual_tolerance > 0.0 && std::isfinite(previous) &&
        std::abs(previous - residual) < config.relative_residual_tolerance * previous)
      break;
    previous = residual;
  }

  result.g_hat = std::move(g);
  result.s_hat = std::move(s);
  apply_gauge(result);
  result.residual_frobenius = residual_norm(R, A, result.g_hat, result.s_hat);
  return result;
}

CMatrix sample_autocorrelation(const CMatrix& R, const CMatrix& A) {
  check_shapes(R, A);
  for (Eigen::Index d = 0; d < A.cols(); ++d)
    for (Eigen::Index l = 0; l < A.rows(); ++l)
      if (A(l, d) == cplx(0.0, 0.0))
        throw DegenerateError("A has a zero entry at (" + std::to_string(l) + ", " + std::to_string(d) + ")");

  const CMatrix ratio = R.cwiseQuotient(A);
  CMatrix C = ratio * ratio.adjoint() / static_cast<double>(R.cols());
  const CMatrix symmetric = 0.5 * (C + C.adjoint());
  return symmetric;
}

namespace {

EigenPair power_iteration(const CMatrix& C, const EigenSolverOptions& options) {
  Engine engine = make_engine(0, StreamPurpose::kPowerIteration);
  CVector v(C.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = complex_normal(engine);
  v.normalize();

  double rayleigh = std::real(v.dot(C * v));
  for (int it = 0; it < options.power_max_iterations; ++it) {
    CVector next = C * v;
    const double norm = next.norm();
    if (norm == 0.0) return {0.0, v};
    v = next / norm;
    const double updated = std::real(v.dot(C * v));
    const bool converged = std::abs(updated - rayleigh) <= options.power_tolerance * std::abs(updated);
    rayleigh = updated;
    if (converged) break;
  }
  return {rayleigh, v};
}

}  // namespace

EigenPair principal_eigpair(const CMatrix& C, const EigenSolverOptions& options) {
  if (C.rows() != C.cols() || C.rows() < 1) throw ValidationError("matrix must be square and non-empty");
  const double scale = C.norm();
  if ((C - C.adjoint()).norm() > 1e-10 * scale)
    throw ValidationError("matrix is not Hermitian within tolerance");
  const CMatrix hermitian = 0.5 * (C + C.adjoint());

  if (static_cast<std::size_t>(C.rows()) > options.dense_limit) return power_iteration(hermitian, options);

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian);
  if (solver.info() != Eigen::Success) throw DegenerateError("Hermitian eigendecomposition failed");
  const auto& values = solver.eigenvalues();  // ascending
  Eigen::Index best = values.size() - 1;
  while (best > 0 && values(best - 1) == values(best)) --best;
  return {values(best), solver.eigenvectors().col(best).normalized()};
}

GainPhaseEstimate eigenvector_estimate(const CMatrix& R, const CMatrix& A, const EigenSolverOptions& options) {
  const CMatrix C = sample_autocorrelation(R, A);
  const EigenPair principal = principal_eigpair(C, options);

  GainPhaseEstimate result;
  result.algorithm = Algorithm::kEigenvector;
  result.iterations_used = 0;
  result.g_hat = std::sqrt(std::max(principal.value, 0.0)) * principal.vector;
  if (result.g_hat.squaredNorm() == 0.0) throw DegenerateError("autocorrelation matrix is zero");
  PhaseBlock block = update_s_block(R, A, result.g_hat);
  result.s_hat = std::move(block.s);
  result.uninformative_columns = block.uninformative.size();
  apply_gauge(result);
  result.residual_frobenius = residual_norm(R, A, result.g_hat, result.s_hat);
  return result;
}

GainPhaseEstimate estimate(Algorithm algorithm, const CMatrix& R, const CMatrix& A, const SolverConfig& config) {
  switch (algorithm) {
    case Algorithm::kCoordinateDescent:
      return coordinate_descent(R, A, config);
    case Algorithm::kEigenvector:
      return eigenvector_estimate(R, A);
  }
  throw ValidationError("unknown algorithm");
}

cplx global_phase_rotation(const CVector& g) {
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (g(k) != cplx(0.0, 0.0)) return std::polar(1.0, -std::arg(g(k)));
  throw DegenerateError("cannot fix the global phase of an all-zero vector");
}

CVector normalize_global_phase(const CVector& g) {
  CVector out = g * global_phase_rotation(g);
  // The reference entry is made exactly real so arg(out_k) == 0 holds bitwise.
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (g(k) != cplx(0.0, 0.0)) {
      out(k) = std::abs(g(k));
      break;
    }
  }
  return out;
}

}  // namespace arraycal
