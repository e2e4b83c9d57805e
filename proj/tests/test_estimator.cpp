#include "doctest.h"

#include <random>

#include "arraycal/estimator.hpp"
#include "arraycal/geometry.hpp"
#include "arraycal/metrics.hpp"
#include "arraycal/scenario.hpp"
#include "oracles.hpp"
#include "small_instance_oracle.hpp"

using namespace arraycal;

namespace {

struct Instance {
  CMatrix R;
  CMatrix A;
  CVector g;
  CVector s;
};

// Line-of-sight instance on one subcarrier of a random geometry.
Instance los_instance(std::uint64_t seed, Eigen::Index L, Eigen::Index D, std::optional<double> snr_db = std::nullopt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RadioConfig config;
  config.num_subcarriers = 1;
  ArrayGeometry geometry;
  for (Eigen::Index l = 0; l < L; ++l) geometry.antenna_positions.emplace_back(0.0, u(rng), 1.5 + 0.3 * u(rng));
  TransmitterTrack track;
  for (Eigen::Index d = 0; d < D; ++d) track.positions.emplace_back(3.0 + 2.0 * u(rng), 3.0 * u(rng), 1.0);
  const IdealTensor ideal = build_ideal_tensor(geometry, track, config);
  const ImpairmentProfile profile = random_profile(static_cast<std::size_t>(L), config, seed);
  const TransmitPhases phases = random_transmit_phases(static_cast<std::size_t>(D), seed);
  const MeasurementTensor measured = synthesize_measurements(ideal, profile, phases, config, snr_db, seed);
  return {measured[0], ideal[0], impairment_gains(profile, 0, config), phases.values};
}

bool is_non_increasing(const std::vector<double>& values, double slack) {
  for (std::size_t m = 1; m < values.size(); ++m)
    if (values[m] > values[m - 1] + slack) return false;
  return true;
}

}  // namespace

TEST_CASE("residual norm") {
  std::mt19937_64 rng(1);
  const CMatrix A = oracle::random_matrix(rng, 2, 3);
  const CVector g = oracle::random_vector(rng, 2);
  const CVector s = oracle::random_phases(rng, 3);
  const CMatrix exact = g.asDiagonal() * A * s.asDiagonal();
  CHECK(residual_norm(exact, A, g, s) == 0.0);
  CHECK(residual_norm(exact, A, CVector::Zero(2), s) == doctest::Approx(exact.norm()).epsilon(1e-15));

  const CMatrix R = oracle::random_matrix(rng, 2, 3);
  CHECK(residual_norm(R, A, g, s) == doctest::Approx(oracle::residual(R, A, g, s)).epsilon(1e-14));

  CHECK_THROWS_AS(residual_norm(R, A, CVector::Ones(3), s), ValidationError);
  CHECK_THROWS_AS(residual_norm(R, oracle::random_matrix(rng, 3, 3), g, s), ValidationError);
}

TEST_CASE("s-block update") {
  std::mt19937_64 rng(2);
  const CMatrix A = oracle::random_matrix(rng, 4, 6);
  const CVector g = oracle::random_vector(rng, 4);

  const PhaseBlock trivial = update_s_block(g.asDiagonal() * A, A, g);
  CHECK((trivial.s - CVector::Ones(6)).norm() < 1e-12);
  CHECK(trivial.uninformative.empty());

  const CVector truth = oracle::random_phases(rng, 6);
  const PhaseBlock recovered = update_s_block(g.asDiagonal() * A * truth.asDiagonal(), A, g);
  CHECK((recovered.s - truth).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index d = 0; d < 6; ++d) CHECK(std::abs(std::abs(recovered.s(d)) - 1.0) < 1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix R1 = oracle::random_matrix(rng, 3, 1);
    const CMatrix A1 = oracle::random_matrix(rng, 3, 1);
    const CVector g1 = oracle::random_vector(rng, 3);
    const cplx grid = oracle::grid_search_phase(R1, A1, g1, 0, 4096);
    const cplx closed = update_s_block(R1, A1, g1).s(0);
    CHECK(std::abs(std::arg(closed * std::conj(grid))) <= kTwoPi / 4096);
  }

  // A zero projection carries no phase information.
  CMatrix R = g.asDiagonal() * A;
  R.col(2).setZero();
  const PhaseBlock flagged = update_s_block(R, A, g);
  CHECK(flagged.s(2) == cplx(1.0, 0.0));
  CHECK(flagged.uninformative == std::vector<std::size_t>{2});
}

TEST_CASE("g-block update") {
  std::mt19937_64 rng(3);
  const CMatrix A = oracle::random_matrix(rng, 5, 7);
  const CVector ones = CVector::Ones(7);
  CHECK((update_g_block(A, A, ones) - CVector::Ones(5)).norm() < 1e-12);
  CHECK((update_g_block(cplx(0.0, 2.0) * A, A, ones) - CVector::Constant(5, cplx(0.0, 2.0))).norm() < 1e-12);

  const CMatrix R1 = oracle::random_matrix(rng, 1, 4);
  const CMatrix A1 = oracle::random_matrix(rng, 1, 4);
  const CVector s = oracle::random_phases(rng, 4);
  std::vector<cplx> a;
  std::vector<cplx> b;
  for (Eigen::Index d = 0; d < 4; ++d) {
    a.push_back(A1(0, d) * s(d));
    b.push_back(R1(0, d));
  }
  CHECK(std::abs(update_g_block(R1, A1, s)(0) - oracle::normal_equation(a, b)) < 1e-13);

  CMatrix degenerate = A;
  degenerate.row(1).setZero();
  CHECK_THROWS_AS(update_g_block(A, degenerate, ones), DegenerateError);
}

TEST_CASE("coordinate descent") {
  SUBCASE("noiseless recovery") {
    const Instance inst = los_instance(4, 8, 32);
    const GainPhaseEstimate est = coordinate_descent(inst.R, inst.A, SolverConfig{});
    CHECK(cosine_similarity_db(est.g_hat, inst.g) >= -0.01);
    CHECK(est.residual_frobenius <= 1e-6 * inst.R.norm());
    CHECK(est.algorithm == Algorithm::kCoordinateDescent);
    CHECK(std::arg(est.g_hat(0)) == 0.0);
    for (Eigen::Index d = 0; d < est.s_hat.size(); ++d) CHECK(std::abs(std::abs(est.s_hat(d)) - 1.0) <= 1e-12);
  }
  SUBCASE("identity instance") {
    const Instance inst = los_instance(5, 6, 20);
    const GainPhaseEstimate est = coordinate_descent(inst.A, inst.A, SolverConfig{});
    CHECK((est.g_hat - CVector::Ones(6)).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("residual sequence is non-increasing") {
    const Instance inst = los_instance(6, 8, 32, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const GainPhaseEstimate est = coordinate_descent(inst.R, inst.A, SolverConfig{40, 0.0, seed});
      CHECK(est.iterations_used == 40);
      CHECK(est.residual_trace.size() == 40);
      CHECK(is_non_increasing(est.residual_trace, 1e-12 * inst.R.norm()));
      CHECK(est.residual_frobenius == doctest::Approx(est.residual_trace.back()).epsilon(1e-12));
    }
  }
  SUBCASE("early stop and determinism") {
    const Instance inst = los_instance(7, 8, 32, 10.0);
    const GainPhaseEstimate a = coordinate_descent(inst.R, inst.A, SolverConfig{200, 1e-8, 3});
    const GainPhaseEstimate b = coordinate_descent(inst.R, inst.A, SolverConfig{200, 1e-8, 3});
    CHECK(a.iterations_used < 200);
    CHECK(a.g_hat == b.g_hat);
  }
  SUBCASE("invalid configuration") {
    const Instance inst = los_instance(8, 3, 4);
    CHECK_THROWS_AS(coordinate_descent(inst.R, inst.A, SolverConfig{0, 0.0, 0}), ValidationError);
    CHECK_THROWS_AS(coordinate_descent(inst.R, inst.A, SolverConfig{5, -1.0, 0}), ValidationError);
  }
}

TEST_CASE("sample autocorrelation") {
  std::mt19937_64 rng(9);
  const CMatrix A = oracle::random_matrix(rng, 4, 6);
  const CMatrix ones = sample_autocorrelation(A, A);
  CHECK((ones - CMatrix::Ones(4, 4)).cwiseAbs().maxCoeff() < 1e-14);

  const CMatrix R1 = oracle::random_matrix(rng, 1, 5);
  const CMatrix A1 = oracle::random_matrix(rng, 1, 5);
  double expected = 0.0;
  for (Eigen::Index d = 0; d < 5; ++d) expected += std::norm(R1(0, d) / A1(0, d));
  const CMatrix scalar = sample_autocorrelation(R1, A1);
  CHECK(scalar(0, 0).imag() == 0.0);
  CHECK(scalar(0, 0).real() == doctest::Approx(expected / 5.0).epsilon(1e-14));

  const CMatrix R = oracle::random_matrix(rng, 3, 5);
  const CMatrix A3 = oracle::random_matrix(rng, 3, 5);
  const CMatrix C = sample_autocorrelation(R, A3);
  const CMatrix brute = oracle::autocorrelation(R, A3);
  CHECK((C - brute).norm() <= 1e-12 * brute.norm());
  CHECK((C - C.adjoint()).norm() == 0.0);

  CMatrix zero = A3;
  zero(1, 1) = 0.0;
  CHECK_THROWS_AS(sample_autocorrelation(R, zero), DegenerateError);
}

TEST_CASE("principal eigenpair") {
  const EigenPair identity = principal_eigpair(CMatrix::Identity(2, 2));
  CHECK(identity.value == doctest::Approx(1.0));
  CHECK((CMatrix::Identity(2, 2) * identity.vector - identity.vector).norm() <= 1e-10);

  const EigenPair rank_one = principal_eigpair(CMatrix::Ones(4, 4));
  CHECK(rank_one.value == doctest::Approx(4.0).epsilon(1e-14));
  const CVector aligned = normalize_global_phase(rank_one.vector);
  CHECK((aligned - CVector::Constant(4, 0.5)).norm() < 1e-12);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix B = oracle::random_matrix(rng, 8, 8);
    const CMatrix C = B.adjoint() * B;
    for (std::size_t limit : {std::size_t{512}, std::size_t{0}}) {
      const EigenPair pair = principal_eigpair(C, EigenSolverOptions{limit, 1e-15, 1000000});
      CHECK(std::abs(pair.vector.norm() - 1.0) < 1e-12);
      const double tolerance = limit == 0 ? 1e-6 : 1e-9;  // power iteration converges to the Rayleigh tolerance
      CHECK((C * pair.vector - pair.value * pair.vector).norm() <= tolerance * C.norm());
      const double largest = Eigen::SelfAdjointEigenSolver<CMatrix>(C).eigenvalues().maxCoeff();
      CHECK(pair.value == doctest::Approx(largest).epsilon(1e-12));
    }
  }

  CMatrix skew = CMatrix::Identity(3, 3);
  skew(0, 1) = cplx(0.5, 0.0);
  CHECK_THROWS_AS(principal_eigpair(skew), ValidationError);
  CHECK_THROWS_AS(principal_eigpair(CMatrix::Ones(2, 3)), ValidationError);
}

TEST_CASE("eigenvector estimate") {
  SUBCASE("identity instance") {
    const Instance inst = los_instance(11, 6, 20);
    const GainPhaseEstimate est = eigenvector_estimate(inst.A, inst.A);
    CHECK((est.g_hat - CVector::Ones(6)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(est.iterations_used == 0);
    CHECK(est.algorithm == Algorithm::kEigenvector);
  }
  SUBCASE("noiseless recovery") {
    const Instance inst = los_instance(12, 8, 32);
    const GainPhaseEstimate est = eigenvector_estimate(inst.R, inst.A);
    CHECK(cosine_similarity_db(est.g_hat, inst.g) >= -0.01);
    CHECK(est.residual_frobenius <= 1e-9 * inst.R.norm());
  }
  SUBCASE("stationarity of the scaled principal eigenvector") {
    const Instance inst = los_instance(13, 8, 64, 3.0);
    const CMatrix C = sample_autocorrelation(inst.R, inst.A);
    const CVector g = eigenvector_estimate(inst.R, inst.A).g_hat;
    CHECK((C * g - g.squaredNorm() * g).norm() <= 1e-8 * C.norm());
    const Eigen::VectorXd spectrum = Eigen::SelfAdjointEigenSolver<CMatrix>(C).eigenvalues();
    CHECK(spectrum.minCoeff() >= -1e-10 * C.trace().real());
  }
  SUBCASE("moderate noise: coordinate descent reaches a lower residual") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
      const Instance inst = los_instance(seed, 8, 64, 5.0);
      const double cd = coordinate_descent(inst.R, inst.A, SolverConfig{200, 0.0, seed}).residual_frobenius;
      const double ev = eigenvector_estimate(inst.R, inst.A).residual_frobenius;
      CHECK(ev >= cd);
    }
  }
}

TEST_CASE("global phase gauge") {
  CVector g(2);
  g << cplx(0.0, 1.0), cplx(1.0, 0.0);
  const CVector n = normalize_global_phase(g);
  CHECK(std::abs(n(0) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(n(1) - cplx(0.0, -1.0)) < 1e-15);

  CVector real(3);
  real << 1.0, 2.0, 0.5;
  CHECK(normalize_global_phase(real) == real);

  CVector leading_zero(3);
  leading_zero << 0.0, cplx(0.0, 2.0), 1.0;
  const CVector fallback = normalize_global_phase(leading_zero);
  CHECK(fallback(1) == cplx(2.0, 0.0));
  CHECK(std::abs(fallback(2) - cplx(0.0, -1.0)) < 1e-15);
  CHECK_THROWS_AS(normalize_global_phase(CVector::Zero(3)), DegenerateError);

  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector v = oracle::random_vector(rng, 5);
    const CVector rotated = v * std::polar(1.0, angle(rng));
    CHECK((normalize_global_phase(rotated) - normalize_global_phase(v)).norm() < 1e-12 * v.norm());
    CHECK((normalize_global_phase(v).cwiseAbs() - v.cwiseAbs()).norm() < 1e-14 * v.norm());
  }

  // Rotating R is absorbed by s in both estimators.
  const Instance inst = los_instance(15, 8, 32, 5.0);
  for (double theta : {0.3, -2.0, 3.1}) {
    const CMatrix rotated = inst.R * std::polar(1.0, theta);
    const SolverConfig config{40, 0.0, 2};
    CHECK((coordinate_descent(rotated, inst.A, config).g_hat - coordinate_descent(inst.R, inst.A, config).g_hat)
              .norm() < 1e-9);
    CHECK((eigenvector_estimate(rotated, inst.A).g_hat - eigenvector_estimate(inst.R, inst.A).g_hat).norm() < 1e-9);
  }
}

TEST_CASE("small instances match the dense grid-search optimum") {
  std::mt19937_64 rng(16);
  for (Eigen::Index L = 1; L <= 3; ++L) {
    for (Eigen::Index D = 1; D <= 3; ++D) {
      const CMatrix A = oracle::random_matrix(rng, L, D);
      const CMatrix clean = oracle::random_vector(rng, L).asDiagonal() * A * oracle::random_phases(rng, D).asDiagonal();
      const CMatrix R = clean + 0.3 * oracle::random_matrix(rng, L, D);
      const double optimum = oracle::grid_search_minimum(R, A);
      const double cd = coordinate_descent(R, A, SolverConfig{5000, 0.0, 1}).residual_frobenius;
      INFO("L=" << L << " D=" << D);
      CHECK(std::abs(cd - optimum) <= 1e-6);
    }
  }
}

TEST_CASE("algorithm names") {
  CHECK(parse_algorithm("iterative") == Algorithm::kCoordinateDescent);
  CHECK(parse_algorithm("eigenvector") == Algorithm::kEigenvector);
  CHECK(to_string(Algorithm::kEigenvector) == "eigenvector");
  CHECK_THROWS_AS(parse_algorithm("svd"), ValidationError);
}
