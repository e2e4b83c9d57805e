#include "arraycal/geometry.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "arraycal/parallel.hpp"

namespace arraycal {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

std::string describe(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return os.str();
}

}  // namespace

RadioConfig RadioConfig::from_center_frequency(double center_freq_hz, double subcarrier_spacing_hz,
                                               std::size_t num_subcarriers) {
  RadioConfig config;
  config.subcarrier_spacing_hz = subcarrier_spacing_hz;
  config.num_subcarriers = num_subcarriers;
  const double half_span = 0.5 * static_cast<double>(num_subcarriers > 0 ? num_subcarriers - 1 : 0) *
                           subcarrier_spacing_hz;
  config.carrier_freq_hz = center_freq_hz - half_span;
  return config;
}

void RadioConfig::validate() const {
  if (!(carrier_freq_hz > 0.0) || !std::isfinite(carrier_freq_hz))
    throw ValidationError("carrier frequency must be positive and finite");
  if (!(subcarrier_spacing_hz > 0.0) || !std::isfinite(subcarrier_spacing_hz))
    throw ValidationError("subcarrier spacing must be positive and finite");
  if (num_subcarriers < 1) throw ValidationError("at least one subcarrier is required");
  if (!(speed_of_light > 0.0)) throw ValidationError("speed of light must be positive");
  if (!(carrier_freq_hz > static_cast<double>(num_subcarriers) * subcarrier_spacing_hz))
    throw ValidationError("carrier frequency must exceed the occupied bandwidth");
}

const Subarray& ArrayGeometry::subarray(const std::string& label) const {
  for (const auto& group : subarrays)
    if (group.label == label) return group;
  throw ValidationError("unknown subarray label '" + label + "'");
}

void ArrayGeometry::validate() const {
  if (antenna_positions.empty()) throw ValidationError("array geometry has no antennas");
  for (std::size_t l = 0; l < antenna_positions.size(); ++l)
    if (!finite(antenna_positions[l]))
      throw ValidationError("antenna " + std::to_string(l) + " has a non-finite position");
  std::set<std::size_t> seen;
  std::set<std::string> labels;
  for (const auto& group : subarrays) {
    if (!labels.insert(group.label).second)
      throw ValidationError("duplicate subarray label '" + group.label + "'");
    for (std::size_t l : group.antennas) {
      if (l >= antenna_positions.size())
        throw ValidationError("subarray '" + group.label + "' references antenna " + std::to_string(l) +
                              " outside the array");
      if (!seen.insert(l).second)
        throw ValidationError("antenna " + std::to_string(l) + " belongs to more than one subarray");
    }
  }
}

void TransmitterTrack::validate() const {
  if (positions.empty()) throw ValidationError("transmitter track has no positions");
  for (std::size_t d = 0; d < positions.size(); ++d)
    if (!finite(positions[d]))
      throw ValidationError("transmitter position " + std::to_string(d) + " is not finite");
}

template <class Tag>
void SubcarrierTensor<Tag>::validate(std::size_t expected_rows, std::size_t expected_cols,
                                     std::size_t expected_subcarriers) const {
  if (slices.size() != expected_subcarriers)
    throw ValidationError("tensor has " + std::to_string(slices.size()) + " subcarriers, expected " +
                          std::to_string(expected_subcarriers));
  for (std::size_t n = 0; n < slices.size(); ++n) {
    const auto& m = slices[n];
    if (static_cast<std::size_t>(m.rows()) != expected_rows ||
        static_cast<std::size_t>(m.cols()) != expected_cols)
      throw ValidationError("subcarrier " + std::to_string(n) + " slice is " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()) + ", expected " + std::to_string(expected_rows) +
                            "x" + std::to_string(expected_cols));
    if (!m.allFinite()) throw ValidationError("subcarrier " + std::to_string(n) + " has non-finite entries");
  }
}

template struct SubcarrierTensor<IdealTag>;
template struct SubcarrierTensor<MeasurementTag>;

ImpairmentProfile ImpairmentProfile::identity(std::size_t num_antennas) {
  return {std::vector<double>(num_antennas, 0.0), std::vector<double>(num_antennas, 0.0),
          std::vector<double>(num_antennas, 1.0)};
}

void ImpairmentProfile::validate(const RadioConfig& config) const {
  const std::size_t L = phase_offsets.size();
  if (time_offsets.size() != L || amplitudes.size() != L)
    throw ValidationError("impairment profile vectors differ in length");
  const double limit = config.unambiguous_time_limit();
  for (std::size_t l = 0; l < L; ++l) {
    if (!std::isfinite(phase_offsets[l]) || phase_offsets[l] < 0.0 || phase_offsets[l] >= kTwoPi)
      throw ValidationError("phase offset of antenna " + std::to_string(l) + " is outside [0, 2pi)");
    if (!std::isfinite(time_offsets[l]) || std::abs(time_offsets[l]) >= limit)
      throw ValidationError("time offset of antenna " + std::to_string(l) +
                            " is outside the unambiguous range");
    if (!(amplitudes[l] > 0.0) || !std::isfinite(amplitudes[l]))
      throw ValidationError("amplitude of antenna " + std::to_string(l) + " must be positive");
  }
}

TransmitPhases TransmitPhases::ones(std::size_t num_positions) {
  return {CVector::Ones(static_cast<Eigen::Index>(num_positions))};
}

TransmitPhases TransmitPhases::from_angles(const std::vector<double>& angles) {
  TransmitPhases phases{CVector(static_cast<Eigen::Index>(angles.size()))};
  for (std::size_t d = 0; d < angles.size(); ++d) phases.values(static_cast<Eigen::Index>(d)) = std::polar(1.0, angles[d]);
  return phases;
}

void TransmitPhases::validate() const {
  for (Eigen::Index d = 0; d < values.size(); ++d)
    if (!(std::abs(std::abs(values(d)) - 1.0) <= 1e-12))
      throw ValidationError("transmit phase " + std::to_string(d) + " is not unit modulus");
}

double subcarrier_wavelength(const RadioConfig& config, std::size_t n) {
  if (n >= config.num_subcarriers)
    throw std::out_of_range("subcarrier index " + std::to_string(n) + " out of range");
  return config.speed_of_light /
         (config.carrier_freq_hz + static_cast<double>(n) * config.subcarrier_spacing_hz);
}

cplx ideal_coefficient(const Vec3& antenna, const Vec3& transmitter, double wavelength,
                       double minimum_distance) {
  if (!(wavelength > 0.0)) throw ValidationError("wavelength must be positive");
  const double distance = (antenna - transmitter).norm();
  if (!(distance >= minimum_distance))
    throw DegenerateError("antenna " + describe(antenna) + " and transmitter " + describe(transmitter) +
                          " are closer than the minimum distance");
  // Reduce the phase modulo 2π before calling polar() so long paths keep full precision.
  const double cycles = distance / wavelength;
  const double fractional = cycles - std::floor(cycles);
  return std::polar(1.0 / distance, -kTwoPi * fractional);
}

IdealTensor build_ideal_tensor(const ArrayGeometry& geometry, const TransmitterTrack& track,
                               const RadioConfig& config, double minimum_distance) {
  geometry.validate();
  track.validate();
  config.validate();
  const std::size_t L = geometry.num_antennas();
  const std::size_t D = track.num_positions();

  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t d = 0; d < D; ++d)
      if (!((geometry.antenna_positions[l] - track.positions[d]).norm() >= minimum_distance))
        throw DegenerateError("antenna " + std::to_string(l) + " and transmitter position " +
                              std::to_string(d) + " are closer than the minimum distance");

  IdealTensor ideal;
  ideal.slices.resize(config.num_subcarriers);
  parallel_for(config.num_subcarriers, [&](std::size_t n) {
    const double wavelength = subcarrier_wavelength(config, n);
    CMatrix slice(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(D));
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t l = 0; l < L; ++l)
        slice(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(d)) =
            ideal_coefficient(geometry.antenna_positions[l], track.positions[d], wavelength, minimum_distance);
    ideal.slices[n] = std::move(slice);
  });
  return ideal;
}

cplx impairment_gain(const ImpairmentProfile& profile, std::size_t antenna, std::size_t n,
                     const RadioConfig& config) {
  if (antenna >= profile.num_antennas())
    throw std::out_of_range("antenna index " + std::to_string(antenna) + " out of range");
  if (n >= config.num_subcarriers)
    throw std::out_of_range("subcarrier index " + std::to_string(n) + " out of range");
  const double phase = profile.phase_offsets[antenna] +
                       kTwoPi * static_cast<double>(n) * profile.time_offsets[antenna] *
                           config.subcarrier_spacing_hz;
  return std::polar(profile.amplitudes[antenna], phase);
}

CVector impairment_gains(const ImpairmentProfile& profile, std::size_t n, const RadioConfig& config) {
  CVector g(static_cast<Eigen::Index>(profile.num_antennas()));
  for (std::size_t l = 0; l < profile.num_antennas(); ++l)
    g(static_cast<Eigen::Index>(l)) = impairment_gain(profile, l, n, config);
  return g;
}

namespace detail {

void add_gaussian_noise(CMatrix& m, double snr_db, Engine& engine) {
  if (std::isinf(snr_db) && snr_db > 0.0) return;
  if (!std::isfinite(snr_db)) throw ValidationError("SNR must be finite or +inf");
  const auto count = static_cast<double>(m.size());
  if (count == 0.0) return;
  const double signal_power = m.squaredNorm() / count;
  const double noise_variance = signal_power / std::pow(10.0, snr_db / 10.0);
  // Column-major fill keeps the draw order fixed for a given shape.
  for (Eigen::Index d = 0; d < m.cols(); ++d)
    for (Eigen::Index l = 0; l < m.rows(); ++l) m(l, d) += complex_normal(engine, noise_variance);
}

}  // namespace detail

MeasurementTensor synthesize_measurements(const IdealTensor& ideal, const ImpairmentProfile& profile,
                                          const TransmitPhases& phases, const RadioConfig& config,
                                          std::optional<double> snr_db, std::uint64_t seed) {
  const std::size_t L = ideal.rows();
  const std::size_t D = ideal.cols();
  if (ideal.num_subcarriers() != config.num_subcarriers)
    throw ValidationError("ideal tensor subcarrier count does not match the radio config");
  if (profile.num_antennas() != L)
    throw ValidationError("impairment profile covers " + std::to_string(profile.num_antennas()) +
                          " antennas, ideal tensor has " + std::to_string(L));
  if (phases.size() != D)
    throw ValidationError("transmit phases cover " + std::to_string(phases.size()) +
                          " positions, ideal tensor has " + std::to_string(D));
  ideal.validate(L, D, config.num_subcarriers);
  profile.validate(config);
  phases.validate();

  MeasurementTensor measured;
  measured.slices.resize(config.num_subcarriers);
  parallel_for(config.num_subcarriers, [&](std::size_t n) {
    const CVector g = impairment_gains(profile, n, config);
    CMatrix slice = g.asDiagonal() * ideal[n] * phases.values.asDiagonal();
    if (snr_db) {
      Engine engine = make_engine(seed, StreamPurpose::kMeasurementNoise, {n});
      detail::add_gaussian_noise(slice, *snr_db, engine);
    }
    measured.slices[n] = std::move(slice);
  });
  return measured;
}

}  // namespace arraycal
