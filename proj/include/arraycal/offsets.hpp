#pragma once

#include <variant>
#include <vector>

#include "arraycal/estimator.hpp"
#include "arraycal/geometry.hpp"

namespace arraycal {

/// Recovered timing impairment of one antenna. Offsets are relative to the
/// gauge reference (antenna 1), because each per-subcarrier estimate fixes
/// arg(g_1[n]) = 0.
struct AntennaOffset {
  double phase_offset_rad = 0.0;  // [0, 2π)
  double time_offset_s = 0.0;
  double fit_residual_rad = 0.0;  // RMS wrapped deviation from the affine phase fit
};

using AntennaOffsetEstimate = std::vector<AntennaOffset>;

/// Smoothing weights of Kay's phase-difference frequency estimator for a
/// length-N sequence (N - 1 weights, summing to one).
std::vector<double> kay_weights(std::size_t length);

/// Weighted mean of arg(x[k+1] conj(x[k])) in radians per sample.
double kay_frequency(const CVector& sequence);

double estimate_time_offset(const CVector& gains_over_subcarriers, const RadioConfig& config);

/// arg of the mean de-rotated gain, wrapped to [0, 2π).
double estimate_phase_offset(const CVector& gains_over_subcarriers, double time_offset_s,
                             const RadioConfig& config);

/// Gain vectors ĝ[n] for n = 0..N_sub-1 (one per subcarrier).
using GainSeries = std::vector<CVector>;

AntennaOffsetEstimate extract_offsets(const GainSeries& gains, const RadioConfig& config);
AntennaOffsetEstimate extract_offsets(const std::vector<GainPhaseEstimate>& estimates,
                                      const RadioConfig& config);

/// Runs the selected estimator independently on every subcarrier. Subcarrier
/// n draws its random initialization from a stream keyed by (config.seed, n).
std::vector<GainPhaseEstimate> estimate_subcarriers(const MeasurementTensor& measured, const IdealTensor& ideal,
                                                    Algorithm algorithm, const SolverConfig& config);

/// Per-subcarrier calibration divides by ĝ_l[n]; parametric calibration
/// removes only the fitted phase φ_l + 2π n t_l Δf.
struct PerSubcarrierCalibration {
  GainSeries gains;
};
struct ParametricCalibration {
  AntennaOffsetEstimate offsets;
  RadioConfig config;
};
using CalibrationMode = std::variant<PerSubcarrierCalibration, ParametricCalibration>;

MeasurementTensor apply_calibration(const MeasurementTensor& measured, const CalibrationMode& mode);

}  // namespace arraycal
