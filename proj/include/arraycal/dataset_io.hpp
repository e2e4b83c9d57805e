#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arraycal/geometry.hpp"
#include "arraycal/offsets.hpp"

namespace arraycal {

// Bundle file (all integers and floats little-endian):
//
//   0   char[4]  magic "GPTC"
//   4   u32      format version (1)
//   8   u32      L  (antennas)
//   12  u32      D  (transmit positions)
//   16  u32      N_sub
//   20  u32      flags (bit 0: ideal tensor follows the measurements)
//   24  u64      metadata length M
//   32  M bytes  UTF-8 JSON metadata
//   ..  N_sub*L*D complex binary64 measurements, (re, im) interleaved,
//       row-major L x D per subcarrier, subcarriers ascending
//   ..  same layout for the ideal tensor when flag bit 0 is set
//
// Calibration record file:
//
//   0   char[4]  magic "GPCR"
//   4   u32      format version (1)
//   8   u32      L
//   12  u32      number of subcarriers in the gain payload (0 = none)
//   16  u64      metadata length M
//   24  M bytes  UTF-8 JSON metadata (offsets table, radio config, provenance)
//   ..  N*L complex binary64 gains ĝ_l[n], antenna-major within each n

inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::uint32_t kCalibrationVersion = 1;
inline constexpr char kToolVersion[] = "arraycal 1.0.0";

/// Malformed file. `offset` is the byte position where the problem was
/// detected, when it applies.
class FormatError : public IoError {
 public:
  enum class Kind { kBadMagic, kVersionMismatch, kTruncated, kDimensionMismatch, kCorrupt };

  FormatError(Kind kind, const std::string& message, std::optional<std::uint64_t> offset = std::nullopt);

  Kind kind() const { return kind_; }
  std::optional<std::uint64_t> offset() const { return offset_; }

 private:
  Kind kind_;
  std::optional<std::uint64_t> offset_;
};

struct DatasetBundle {
  RadioConfig config;
  ArrayGeometry geometry;
  TransmitterTrack track;
  std::optional<ImpairmentProfile> truth_profile;
  std::optional<TransmitPhases> truth_phases;
  MeasurementTensor measurements;
  std::optional<IdealTensor> ideal;
  std::map<std::string, std::string> attributes;

  std::size_t num_antennas() const { return geometry.num_antennas(); }
  std::size_t num_positions() const { return track.num_positions(); }

  /// Every embedded invariant plus dimensional consistency.
  void validate() const;
};

struct Provenance {
  std::string algorithm;
  int max_iterations = 0;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string input_digest;  // SHA-256 of the measurement payload, hex
};

struct CalibrationRecord {
  RadioConfig config;
  AntennaOffsetEstimate offsets;
  std::optional<GainSeries> gains;
  std::vector<double> residuals;  // per-subcarrier ||Z||_F, may be empty
  Provenance provenance;

  std::size_t num_antennas() const { return offsets.size(); }
  void validate() const;
};

/// Lowercase hex SHA-256 of the serialized measurement payload.
std::string payload_digest(const MeasurementTensor& measurements);

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& path);
DatasetBundle read_bundle(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_bundle(const DatasetBundle& bundle);
DatasetBundle decode_bundle(const std::vector<std::uint8_t>& bytes);

void write_calibration(const CalibrationRecord& record, const std::filesystem::path& path);
CalibrationRecord read_calibration(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_calibration(const CalibrationRecord& record);
CalibrationRecord decode_calibration(const std::vector<std::uint8_t>& bytes);

/// Throws ProvenanceError when the record was computed from different data,
/// unless `force` is set.
void check_provenance(const CalibrationRecord& record, const DatasetBundle& bundle, bool force);

/// One position per line: "index, x, y, z" (comma, semicolon, tab or space
/// separated). Blank lines and lines starting with '#' are skipped. Result is
/// ordered by index; indices must be exactly 0..K-1 in any order.
std::vector<Vec3> parse_positions(std::istream& in);
std::vector<Vec3> import_positions(const std::filesystem::path& path);
TransmitterTrack import_track(const std::filesystem::path& path);
ArrayGeometry import_geometry(const std::filesystem::path& path);

}  // namespace arraycal
