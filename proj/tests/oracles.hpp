#pragma once

// Test-only reference computations. These are deliberately written as plain
// loops over the defining formulas and share no code with the library's
// Eigen-based implementations.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "arraycal/types.hpp"

namespace oracle {

using arraycal::cplx;
using arraycal::CMatrix;
using arraycal::CVector;

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline CVector random_vector(std::mt19937_64& rng, Eigen::Index size) {
  return random_matrix(rng, size, 1).col(0);
}

inline CVector random_phases(std::mt19937_64& rng, Eigen::Index size) {
  std::uniform_real_distribution<double> u(-arraycal::kPi, arraycal::kPi);
  CVector s(size);
  for (Eigen::Index i = 0; i < size; ++i) s(i) = std::polar(1.0, u(rng));
  return s;
}

/// sqrt(Σ_l Σ_d |g_l a_ld s_d - r_ld|^2)
inline double residual(const CMatrix& R, const CMatrix& A, const CVector& g, const CVector& s) {
  double sum = 0.0;
  for (Eigen::Index l = 0; l < R.rows(); ++l)
    for (Eigen::Index d = 0; d < R.cols(); ++d) sum += std::norm(g(l) * A(l, d) * s(d) - R(l, d));
  return std::sqrt(sum);
}

/// (1/D) Σ_d v_d v_d^H with v_d = R_{:d} ./ A_{:d}, as an explicit double loop.
inline CMatrix autocorrelation(const CMatrix& R, const CMatrix& A) {
  const auto L = R.rows();
  const auto D = R.cols();
  CMatrix C = CMatrix::Zero(L, L);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index i = 0; i < L; ++i)
      for (Eigen::Index j = 0; j < L; ++j) C(i, j) += (R(i, d) / A(i, d)) * std::conj(R(j, d) / A(j, d));
  return C / static_cast<double>(D);
}

/// Best unit-modulus s for one column by scanning `points` angles.
inline cplx grid_search_phase(const CMatrix& R, const CMatrix& A, const CVector& g, Eigen::Index column,
                              int points) {
  double best = std::numeric_limits<double>::infinity();
  cplx best_s(1.0, 0.0);
  for (int k = 0; k < points; ++k) {
    const cplx s = std::polar(1.0, arraycal::kTwoPi * k / points);
    double cost = 0.0;
    for (Eigen::Index l = 0; l < R.rows(); ++l) cost += std::norm(g(l) * A(l, column) * s - R(l, column));
    if (cost < best) {
      best = cost;
      best_s = s;
    }
  }
  return best_s;
}

/// One-unknown least squares via the normal equation x = (a^H a)^{-1} a^H b,
/// accumulated term by term.
inline cplx normal_equation(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx num(0.0, 0.0);
  double den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::conj(a[k]) * b[k];
    den += std::norm(a[k]);
  }
  return num / den;
}

/// Squared cosine similarity in dB computed with explicit sums.
inline double similarity_db(const CVector& a, const CVector& b) {
  cplx inner(0.0, 0.0);
  double na = 0.0;
  double nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    inner += std::conj(a(i)) * b(i);
    na += std::norm(a(i));
    nb += std::norm(b(i));
  }
  return 10.0 * std::log10(std::norm(inner) / (na * nb));
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace oracle
