#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arraycal/rng.hpp"
#include "arraycal/types.hpp"

namespace arraycal {

/// OFDM radio parameters. `carrier_freq_hz` is the frequency of the lowermost
/// subcarrier (n = 0), so subcarrier n sits at carrier_freq_hz + n * spacing.
struct RadioConfig {
  double carrier_freq_hz = 1.272e9;
  double subcarrier_spacing_hz = 781250.0;
  std::size_t num_subcarriers = 64;
  double speed_of_light = kSpeedOfLight;

  /// Builds a config from the band-center frequency instead of the
  /// lowermost-subcarrier frequency.
  static RadioConfig from_center_frequency(double center_freq_hz, double subcarrier_spacing_hz,
                                           std::size_t num_subcarriers);

  void validate() const;

  /// Largest |t_off| that keeps the per-subcarrier phase step inside (-π, π).
  double unambiguous_time_limit() const { return 1.0 / (2.0 * subcarrier_spacing_hz); }
};

struct Subarray {
  std::string label;
  std::vector<std::size_t> antennas;  // zero-based antenna indices
};

struct ArrayGeometry {
  std::vector<Vec3> antenna_positions;
  std::vector<Subarray> subarrays;

  std::size_t num_antennas() const { return antenna_positions.size(); }
  const Subarray& subarray(const std::string& label) const;
  void validate() const;
};

struct TransmitterTrack {
  std::vector<Vec3> positions;

  std::size_t num_positions() const { return positions.size(); }
  void validate() const;
};

inline constexpr double kDefaultMinimumDistance = 1e-3;

/// Per-subcarrier stack of L x D complex matrices. The tag keeps measured and
/// ideal tensors from being mixed up at call sites.
template <class Tag>
struct SubcarrierTensor {
  std::vector<CMatrix> slices;

  std::size_t num_subcarriers() const { return slices.size(); }
  std::size_t rows() const { return slices.empty() ? 0 : static_cast<std::size_t>(slices.front().rows()); }
  std::size_t cols() const { return slices.empty() ? 0 : static_cast<std::size_t>(slices.front().cols()); }
  const CMatrix& operator[](std::size_t n) const { return slices.at(n); }
  CMatrix& operator[](std::size_t n) { return slices.at(n); }

  /// Throws ValidationError unless all slices are L x D with finite entries.
  void validate(std::size_t expected_rows, std::size_t expected_cols,
                std::size_t expected_subcarriers) const;
};

struct IdealTag {};
struct MeasurementTag {};
using IdealTensor = SubcarrierTensor<IdealTag>;
using MeasurementTensor = SubcarrierTensor<MeasurementTag>;

/// Per-antenna timing impairments: arg g_l[n] = phi_l + 2π n t_l Δf.
struct ImpairmentProfile {
  std::vector<double> phase_offsets;  // radians, [0, 2π)
  std::vector<double> time_offsets;   // seconds
  std::vector<double> amplitudes;     // > 0

  static ImpairmentProfile identity(std::size_t num_antennas);

  std::size_t num_antennas() const { return phase_offsets.size(); }
  void validate(const RadioConfig& config) const;
};

/// Unit-modulus transmitter starting phases s_d.
struct TransmitPhases {
  CVector values;

  static TransmitPhases ones(std::size_t num_positions);
  static TransmitPhases from_angles(const std::vector<double>& angles);

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  void validate() const;
};

double subcarrier_wavelength(const RadioConfig& config, std::size_t n);

/// Free-space line-of-sight coefficient (1/r) exp(-j 2π r / λ).
cplx ideal_coefficient(const Vec3& antenna, const Vec3& transmitter, double wavelength,
                       double minimum_distance = kDefaultMinimumDistance);

IdealTensor build_ideal_tensor(const ArrayGeometry& geometry, const TransmitterTrack& track,
                               const RadioConfig& config,
                               double minimum_distance = kDefaultMinimumDistance);

cplx impairment_gain(const ImpairmentProfile& profile, std::size_t antenna, std::size_t n,
                     const RadioConfig& config);

/// Gain vector g[n] over all antennas.
CVector impairment_gains(const ImpairmentProfile& profile, std::size_t n, const RadioConfig& config);

/// R[n] = diag(g[n]) A[n] diag(s) + Z[n]. With `snr_db` unset Z is zero;
/// otherwise Z is circular Gaussian with per-element SNR
/// ||diag(g)A diag(s)||_F^2 / (L D σ²) equal to the target.
MeasurementTensor synthesize_measurements(const IdealTensor& ideal, const ImpairmentProfile& profile,
                                          const TransmitPhases& phases, const RadioConfig& config,
                                          std::optional<double> snr_db, std::uint64_t seed);

namespace detail {
/// Adds circular Gaussian noise to `m` in place, scaled so the per-element
/// SNR relative to the current contents of `m` equals `snr_db`.
void add_gaussian_noise(CMatrix& m, double snr_db, Engine& engine);
}  // namespace detail

}  // namespace arraycal
