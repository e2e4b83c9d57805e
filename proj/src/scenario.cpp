#include "arraycal/scenario.hpp"

#include <cmath>
#include <random>

#include "arraycal/rng.hpp"

namespace arraycal {

namespace {

struct Box {
  Vec3 lower;
  Vec3 upper;
};

Box floor_area(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kGrid4x8:
      return {Vec3(1.5, -3.0, 0.3), Vec3(6.0, 3.0, 1.2)};
    case ScenarioKind::kDistributed4x2x4:
      return {Vec3(-12.0, -14.0, 0.8), Vec3(2.0, -1.0, 1.2)};
  }
  throw ValidationError("unknown scenario");
}

// Array centers (x, y) and boresight rotation in degrees on the factory floor.
struct Placement {
  const char* label;
  double x;
  double y;
  double rotation_deg;
};

constexpr Placement kDistributedArrays[] = {
    {"A", 2.6747, -13.8973, 116.8},
    {"B", -11.250275, -9.689025, 37.2},
    {"C", -1.531375, -15.0595, 77.8},
    {"D", -12.684425, -4.483325, -4.87},
};

}  // namespace

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "grid-4x8") return ScenarioKind::kGrid4x8;
  if (name == "distributed-4x-2x4") return ScenarioKind::kDistributed4x2x4;
  throw ValidationError("unknown scenario '" + name + "' (expected grid-4x8 or distributed-4x-2x4)");
}

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::kGrid4x8 ? "grid-4x8" : "distributed-4x-2x4";
}

ArrayGeometry scenario_geometry(ScenarioKind kind, const RadioConfig& config) {
  const double spacing = 0.5 * config.speed_of_light / config.carrier_freq_hz;
  ArrayGeometry geometry;
  if (kind == ScenarioKind::kGrid4x8) {
    // Vertical plane x = 0, 4 rows by 8 columns, centered at 1.5 m height.
    Subarray left{"left", {}};
    Subarray right{"right", {}};
    for (int row = 0; row < 4; ++row) {
      for (int col = 0; col < 8; ++col) {
        (col < 4 ? left : right).antennas.push_back(geometry.antenna_positions.size());
        geometry.antenna_positions.emplace_back(0.0, (col - 3.5) * spacing, 1.5 + (row - 1.5) * spacing);
      }
    }
    geometry.subarrays = {left, right};
    return geometry;
  }
  for (const auto& placement : kDistributedArrays) {
    const double theta = placement.rotation_deg * kPi / 180.0;
    const Vec3 along(std::cos(theta), std::sin(theta), 0.0);
    Subarray group{placement.label, {}};
    for (int row = 0; row < 2; ++row) {
      for (int col = 0; col < 4; ++col) {
        group.antennas.push_back(geometry.antenna_positions.size());
        geometry.antenna_positions.push_back(Vec3(placement.x, placement.y, 2.5) + (col - 1.5) * spacing * along +
                                             Vec3(0.0, 0.0, (row - 0.5) * spacing));
      }
    }
    geometry.subarrays.push_back(std::move(group));
  }
  return geometry;
}

TransmitterTrack scenario_track(ScenarioKind kind, std::size_t num_positions, std::uint64_t seed) {
  const Box box = floor_area(kind);
  Engine engine = make_engine(seed, StreamPurpose::kScenarioTrack);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TransmitterTrack track;
  track.positions.reserve(num_positions);
  for (std::size_t d = 0; d < num_positions; ++d) {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p(k) = box.lower(k) + unit(engine) * (box.upper(k) - box.lower(k));
    track.positions.push_back(p);
  }
  return track;
}

ImpairmentProfile random_profile(std::size_t num_antennas, const RadioConfig& config, std::uint64_t seed,
                                 double time_fraction) {
  if (!(time_fraction >= 0.0 && time_fraction < 1.0)) throw ValidationError("time fraction must be in [0, 1)");
  Engine engine = make_engine(seed, StreamPurpose::kScenarioProfile);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> time(-1.0, 1.0);
  std::uniform_real_distribution<double> amplitude(0.5, 1.5);
  const double limit = config.unambiguous_time_limit();
  ImpairmentProfile profile;
  for (std::size_t l = 0; l < num_antennas; ++l) {
    profile.phase_offsets.push_back(wrap_to_2pi(phase(engine)));
    profile.time_offsets.push_back(time_fraction * limit * time(engine));
    profile.amplitudes.push_back(amplitude(engine));
  }
  return profile;
}

TransmitPhases random_transmit_phases(std::size_t num_positions, std::uint64_t seed) {
  Engine engine = make_engine(seed, StreamPurpose::kScenarioPhases);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> angles(num_positions);
  for (auto& a : angles) a = phase(engine);
  return TransmitPhases::from_angles(angles);
}

DatasetBundle synthesize_bundle(ArrayGeometry geometry, TransmitterTrack track, const SyntheticOptions& options) {
  options.config.validate();
  DatasetBundle bundle;
  bundle.config = options.config;
  bundle.geometry = std::move(geometry);
  bundle.track = std::move(track);
  IdealTensor ideal = build_ideal_tensor(bundle.geometry, bundle.track, bundle.config);
  bundle.truth_profile = random_profile(bundle.num_antennas(), bundle.config, options.seed, options.time_fraction);
  bundle.truth_phases = random_transmit_phases(bundle.num_positions(), options.seed);
  bundle.measurements = synthesize_measurements(ideal, *bundle.truth_profile, *bundle.truth_phases, bundle.config,
                                                options.snr_db, options.seed);
  if (options.include_ideal) bundle.ideal = std::move(ideal);
  bundle.attributes["seed"] = std::to_string(options.seed);
  bundle.attributes["snr_db"] = options.snr_db ? std::to_string(*options.snr_db) : "none";
  return bundle;
}

DatasetBundle generate_scenario(ScenarioKind kind, std::size_t num_positions, const SyntheticOptions& options) {
  if (num_positions < 1) throw ValidationError("at least one transmitter position is required");
  DatasetBundle bundle = synthesize_bundle(scenario_geometry(kind, options.config),
                                           scenario_track(kind, num_positions, options.seed), options);
  bundle.attributes["scenario"] = to_string(kind);
  return bundle;
}

}  // namespace arraycal
