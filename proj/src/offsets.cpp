#include "arraycal/offsets.hpp"

#include <cmath>
#include <sstream>

#include "arraycal/parallel.hpp"
#include "arraycal/rng.hpp"

namespace arraycal {

std::vector<double> kay_weights(std::size_t length) {
  if (length < 2) throw ValidationError("Kay's estimator needs at least two samples");
  const auto N = static_cast<double>(length);
  const double half = N / 2.0;
  const double scale = 1.5 * N / (N * N - 1.0);
  std::vector<double> weights(length - 1);
  for (std::size_t k = 0; k + 1 < length; ++k) {
    const double u = (static_cast<double>(k) - (half - 1.0)) / half;
    weights[k] = scale * (1.0 - u * u);
  }
  return weights;
}

double kay_frequency(const CVector& sequence) {
  const auto length = static_cast<std::size_t>(sequence.size());
  const std::vector<double> weights = kay_weights(length);
  for (Eigen::Index k = 0; k < sequence.size(); ++k)
    if (sequence(k) == cplx(0.0, 0.0))
      throw DegenerateError("sequence entry " + std::to_string(k) + " is zero; its phase is undefined");
  double omega = 0.0;
  for (std::size_t k = 0; k + 1 < length; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    omega += weights[k] * std::arg(sequence(i + 1) * std::conj(sequence(i)));
  }
  return omega;
}

double estimate_time_offset(const CVector& gains_over_subcarriers, const RadioConfig& config) {
  return kay_frequency(gains_over_subcarriers) / (kTwoPi * config.subcarrier_spacing_hz);
}

double estimate_phase_offset(const CVector& gains_over_subcarriers, double time_offset_s,
                             const RadioConfig& config) {
  if (gains_over_subcarriers.size() == 0) throw ValidationError("empty gain sequence");
  const double step = kTwoPi * time_offset_s * config.subcarrier_spacing_hz;
  cplx sum(0.0, 0.0);
  for (Eigen::Index n = 0; n < gains_over_subcarriers.size(); ++n)
    sum += gains_over_subcarriers(n) * std::polar(1.0, -step * static_cast<double>(n));
  const cplx mean = sum / static_cast<double>(gains_over_subcarriers.size());
  if (mean == cplx(0.0, 0.0)) throw DegenerateError("mean de-rotated gain is zero; phase undefined");
  return wrap_to_2pi(std::arg(mean));
}

AntennaOffsetEstimate extract_offsets(const GainSeries& gains, const RadioConfig& config) {
  config.validate();
  if (gains.size() != config.num_subcarriers) {
    std::ostringstream os;
    os << "gain estimates cover " << gains.size() << " of " << config.num_subcarriers << " subcarriers";
    if (gains.size() < config.num_subcarriers)
      os << "; missing " << gains.size() << ".." << config.num_subcarriers - 1;
    throw ValidationError(os.str());
  }
  if (gains.size() < 2) throw ValidationError("offset extraction needs at least two subcarriers");
  const auto L = gains.front().size();
  for (std::size_t n = 0; n < gains.size(); ++n)
    if (gains[n].size() != L)
      throw ValidationError("subcarrier " + std::to_string(n) + " estimate has " +
                            std::to_string(gains[n].size()) + " antennas, expected " + std::to_string(L));

  const auto N = static_cast<Eigen::Index>(gains.size());
  AntennaOffsetEstimate offsets(static_cast<std::size_t>(L));
  parallel_for(static_cast<std::size_t>(L), [&](std::size_t l) {
    CVector series(N);
    for (Eigen::Index n = 0; n < N; ++n) series(n) = gains[static_cast<std::size_t>(n)](static_cast<Eigen::Index>(l));

    AntennaOffset& out = offsets[l];
    out.time_offset_s = estimate_time_offset(series, config);
    out.phase_offset_rad = estimate_phase_offset(series, out.time_offset_s, config);

    const double step = kTwoPi * out.time_offset_s * config.subcarrier_spacing_hz;
    double sum_sq = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
      const double deviation =
          wrap_to_pi(std::arg(series(n)) - out.phase_offset_rad - step * static_cast<double>(n));
      sum_sq += deviation * deviation;
    }
    out.fit_residual_rad = std::sqrt(sum_sq / static_cast<double>(N));
  });
  return offsets;
}

AntennaOffsetEstimate extract_offsets(const std::vector<GainPhaseEstimate>& estimates,
                                      const RadioConfig& config) {
  GainSeries gains;
  gains.reserve(estimates.size());
  for (const auto& e : estimates) gains.push_back(e.g_hat);
  return extract_offsets(gains, config);
}

std::vector<GainPhaseEstimate> estimate_subcarriers(const MeasurementTensor& measured, const IdealTensor& ideal,
                                                    Algorithm algorithm, const SolverConfig& config) {
  if (measured.num_subcarriers() != ideal.num_subcarriers())
    throw ValidationError("measured and ideal tensors differ in subcarrier count");
  std::vector<GainPhaseEstimate> estimates(measured.num_subcarriers());
  parallel_for(measured.num_subcarriers(), [&](std::size_t n) {
    SolverConfig subcarrier_config = config;
    subcarrier_config.seed = stream_seed(config.seed, StreamPurpose::kInitialGain, {n});
    estimates[n] = estimate(algorithm, measured[n], ideal[n], subcarrier_config);
  });
  return estimates;
}

namespace {

MeasurementTensor apply_one(const MeasurementTensor& measured, const PerSubcarrierCalibration& cal) {
  const std::size_t L = measured.rows();
  if (cal.gains.size() != measured.num_subcarriers())
    throw ValidationError("calibration covers " + std::to_string(cal.gains.size()) + " subcarriers, data has " +
                          std::to_string(measured.num_subcarriers()));
  MeasurementTensor out;
  out.slices.resize(measured.num_subcarriers());
  parallel_for(measured.num_subcarriers(), [&](std::size_t n) {
    const CVector& g = cal.gains[n];
    if (static_cast<std::size_t>(g.size()) != L)
      throw ValidationError("calibration gain vector for subcarrier " + std::to_string(n) + " has wrong length");
    for (Eigen::Index l = 0; l < g.size(); ++l)
      if (g(l) == cplx(0.0, 0.0))
        throw DegenerateError("calibration gain is zero for antenna " + std::to_string(l) + " on subcarrier " +
                              std::to_string(n));
    CMatrix slice = measured[n];
    for (Eigen::Index l = 0; l < slice.rows(); ++l)
      if (g(l) != cplx(1.0, 0.0)) slice.row(l) /= g(l);
    out.slices[n] = std::move(slice);
  });
  return out;
}

MeasurementTensor apply_one(const MeasurementTensor& measured, const ParametricCalibration& cal) {
  const std::size_t L = measured.rows();
  if (cal.offsets.size() != L)
    throw ValidationError("calibration covers " + std::to_string(cal.offsets.size()) + " antennas, data has " +
                          std::to_string(L));
  if (cal.config.num_subcarriers != measured.num_subcarriers())
    throw ValidationError("calibration config subcarrier count does not match the data");
  MeasurementTensor out;
  out.slices.resize(measured.num_subcarriers());
  parallel_for(measured.num_subcarriers(), [&](std::size_t n) {
    CMatrix slice = measured[n];
    for (std::size_t l = 0; l < L; ++l) {
      const AntennaOffset& o = cal.offsets[l];
      const double phase = o.phase_offset_rad + kTwoPi * static_cast<double>(n) * o.time_offset_s *
                                                    cal.config.subcarrier_spacing_hz;
      if (phase != 0.0) slice.row(static_cast<Eigen::Index>(l)) *= std::polar(1.0, -phase);
    }
    out.slices[n] = std::move(slice);
  });
  return out;
}

}  // namespace

MeasurementTensor apply_calibration(const MeasurementTensor& measured, const CalibrationMode& mode) {
  return std::visit([&](const auto& cal) { return apply_one(measured, cal); }, mode);
}

}  // namespace arraycal
