#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "arraycal/dataset_io.hpp"

namespace arraycal {

// Built-in synthetic scenarios modelled on the two measurement setups the
// toolkit targets: one planar 4 x 8 array, and four distributed 2 x 4 arrays
// around a factory floor.

enum class ScenarioKind { kGrid4x8, kDistributed4x2x4 };

ScenarioKind parse_scenario(const std::string& name);
std::string to_string(ScenarioKind kind);

/// Antenna layout with half-wavelength spacing at the carrier frequency.
ArrayGeometry scenario_geometry(ScenarioKind kind, const RadioConfig& config);

/// Uniformly random transmitter positions inside the scenario's floor area.
TransmitterTrack scenario_track(ScenarioKind kind, std::size_t num_positions, std::uint64_t seed);

/// Random phases in [0, 2π), time offsets uniform in ±time_fraction times the
/// unambiguous limit, amplitudes uniform in [0.5, 1.5].
ImpairmentProfile random_profile(std::size_t num_antennas, const RadioConfig& config, std::uint64_t seed,
                                 double time_fraction = 0.45);

TransmitPhases random_transmit_phases(std::size_t num_positions, std::uint64_t seed);

struct SyntheticOptions {
  RadioConfig config;
  std::uint64_t seed = 1;
  std::optional<double> snr_db;
  bool include_ideal = true;
  double time_fraction = 0.45;
};

/// Synthesizes measurements with embedded ground truth for a given geometry
/// and track.
DatasetBundle synthesize_bundle(ArrayGeometry geometry, TransmitterTrack track, const SyntheticOptions& options);

DatasetBundle generate_scenario(ScenarioKind kind, std::size_t num_positions, const SyntheticOptions& options);

}  // namespace arraycal
