#include "arraycal/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

namespace arraycal {

using json = nlohmann::json;

FormatError::FormatError(Kind kind, const std::string& message, std::optional<std::uint64_t> offset)
    : IoError(offset ? message + " (at byte " + std::to_string(*offset) + ")" : message),
      kind_(kind),
      offset_(offset) {}

namespace {

constexpr char kBundleMagic[4] = {'G', 'P', 'T', 'C'};
constexpr char kCalibrationMagic[4] = {'G', 'P', 'C', 'R'};
constexpr std::size_t kBundleHeaderBytes = 32;
constexpr std::size_t kCalibrationHeaderBytes = 24;
constexpr std::uint64_t kComplexBytes = 16;

class ByteWriter {
 public:
  void raw(const char* data, std::size_t size) { bytes_.insert(bytes_.end(), data, data + size); }
  void u32(std::uint32_t v) { integer(v, 4); }
  void u64(std::uint64_t v) { integer(v, 8); }
  void f64(double v) { integer(std::bit_cast<std::uint64_t>(v), 8); }
  void complex(cplx v) {
    f64(v.real());
    f64(v.imag());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void integer(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t position() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void require(std::uint64_t count, const char* what) const {
    if (remaining() < count)
      throw FormatError(FormatError::Kind::kTruncated,
                        std::string("truncated ") + what + ": expected " + std::to_string(pos_ + count) +
                            " bytes, file has " + std::to_string(bytes_.size()),
                        pos_);
  }
  std::string raw(std::size_t size) {
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), size);
    pos_ += size;
    return out;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(integer(4)); }
  std::uint64_t u64() { return integer(8); }
  double f64() { return std::bit_cast<double>(integer(8)); }
  cplx complex() {
    const double re = f64();
    const double im = f64();
    return {re, im};
  }

 private:
  std::uint64_t integer(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::uint64_t>(width);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw ValidationError(std::string(what) + " does not fit the file header");
  return static_cast<std::uint32_t>(v);
}

template <class Tag>
void write_tensor(ByteWriter& w, const SubcarrierTensor<Tag>& tensor) {
  for (const auto& slice : tensor.slices)
    for (Eigen::Index l = 0; l < slice.rows(); ++l)
      for (Eigen::Index d = 0; d < slice.cols(); ++d) w.complex(slice(l, d));
}

template <class Tag>
SubcarrierTensor<Tag> read_tensor(ByteReader& r, std::size_t L, std::size_t D, std::size_t N) {
  SubcarrierTensor<Tag> tensor;
  tensor.slices.reserve(N);
  for (std::size_t n = 0; n < N; ++n) {
    CMatrix slice(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(D));
    for (Eigen::Index l = 0; l < slice.rows(); ++l)
      for (Eigen::Index d = 0; d < slice.cols(); ++d) slice(l, d) = r.complex();
    tensor.slices.push_back(std::move(slice));
  }
  return tensor;
}

json vec3_list(const std::vector<Vec3>& positions) {
  json out = json::array();
  for (const auto& p : positions) out.push_back({p.x(), p.y(), p.z()});
  return out;
}

std::vector<Vec3> parse_vec3_list(const json& j) {
  std::vector<Vec3> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 3) throw std::invalid_argument("position must be a 3-element array");
    out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
  }
  return out;
}

json radio_to_json(const RadioConfig& c) {
  return {{"carrier_freq_hz", c.carrier_freq_hz},
          {"subcarrier_spacing_hz", c.subcarrier_spacing_hz},
          {"num_subcarriers", c.num_subcarriers},
          {"speed_of_light", c.speed_of_light}};
}

RadioConfig radio_from_json(const json& j) {
  RadioConfig c;
  c.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
  c.subcarrier_spacing_hz = j.at("subcarrier_spacing_hz").get<double>();
  c.num_subcarriers = j.at("num_subcarriers").get<std::size_t>();
  c.speed_of_light = j.at("speed_of_light").get<double>();
  return c;
}

json bundle_metadata(const DatasetBundle& b) {
  json meta;
  meta["format"] = "arraycal-bundle";
  meta["version"] = kBundleVersion;
  meta["radio"] = radio_to_json(b.config);
  json subarrays = json::array();
  for (const auto& group : b.geometry.subarrays)
    subarrays.push_back({{"label", group.label}, {"antennas", group.antennas}});
  meta["array"] = {{"positions", vec3_list(b.geometry.antenna_positions)}, {"subarrays", subarrays}};
  meta["track"] = {{"positions", vec3_list(b.track.positions)}};
  if (b.truth_profile || b.truth_phases) {
    json truth = json::object();
    if (b.truth_profile) {
      truth["phase_offsets"] = b.truth_profile->phase_offsets;
      truth["time_offsets"] = b.truth_profile->time_offsets;
      truth["amplitudes"] = b.truth_profile->amplitudes;
    }
    if (b.truth_phases) {
      json phases = json::array();
      for (Eigen::Index d = 0; d < b.truth_phases->values.size(); ++d)
        phases.push_back({b.truth_phases->values(d).real(), b.truth_phases->values(d).imag()});
      truth["transmit_phases"] = phases;
    }
    meta["truth"] = truth;
  }
  meta["attributes"] = b.attributes;
  return meta;
}

void fill_from_metadata(DatasetBundle& b, const json& meta) {
  b.config = radio_from_json(meta.at("radio"));
  const json& array = meta.at("array");
  b.geometry.antenna_positions = parse_vec3_list(array.at("positions"));
  for (const auto& group : array.value("subarrays", json::array()))
    b.geometry.subarrays.push_back({group.at("label").get<std::string>(),
                                    group.at("antennas").get<std::vector<std::size_t>>()});
  b.track.positions = parse_vec3_list(meta.at("track").at("positions"));
  if (meta.contains("truth")) {
    const json& truth = meta.at("truth");
    if (truth.contains("phase_offsets")) {
      b.truth_profile = ImpairmentProfile{truth.at("phase_offsets").get<std::vector<double>>(),
                                          truth.at("time_offsets").get<std::vector<double>>(),
                                          truth.at("amplitudes").get<std::vector<double>>()};
    }
    if (truth.contains("transmit_phases")) {
      const json& phases = truth.at("transmit_phases");
      TransmitPhases s{CVector(static_cast<Eigen::Index>(phases.size()))};
      for (std::size_t d = 0; d < phases.size(); ++d)
        s.values(static_cast<Eigen::Index>(d)) = cplx(phases.at(d).at(0).get<double>(), phases.at(d).at(1).get<double>());
      b.truth_phases = s;
    }
  }
  if (meta.contains("attributes"))
    b.attributes = meta.at("attributes").get<std::map<std::string, std::string>>();
}

json parse_metadata(ByteReader& r, std::uint64_t length) {
  const std::uint64_t start = r.position();
  r.require(length, "metadata");
  const std::string text = r.raw(static_cast<std::size_t>(length));
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, std::string("metadata is not valid JSON: ") + e.what(), start);
  }
}

void check_magic(ByteReader& r, const char (&magic)[4], const char* what) {
  r.require(4, "header");
  const std::string found = r.raw(4);
  if (std::memcmp(found.data(), magic, 4) != 0)
    throw FormatError(FormatError::Kind::kBadMagic, std::string("not a ") + what + " file (bad magic)", 0);
}

void check_version(ByteReader& r, std::uint32_t expected) {
  const std::uint32_t version = r.u32();
  if (version != expected)
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "unsupported format version " + std::to_string(version) + " (reader supports " +
                          std::to_string(expected) + ")",
                      4);
}

void expect_exact_size(const ByteReader& r, std::uint64_t payload_bytes) {
  if (r.remaining() < payload_bytes)
    throw FormatError(FormatError::Kind::kTruncated,
                      "truncated payload: expected " + std::to_string(r.position() + payload_bytes) +
                          " bytes, file has " + std::to_string(r.position() + r.remaining()),
                      r.position() + r.remaining());
  if (r.remaining() > payload_bytes)
    throw FormatError(FormatError::Kind::kCorrupt,
                      std::to_string(r.remaining() - payload_bytes) + " unexpected trailing bytes",
                      r.position() + payload_bytes);
}

std::string hex_sha256(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < length; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

}  // namespace

void DatasetBundle::validate() const {
  config.validate();
  geometry.validate();
  track.validate();
  const std::size_t L = num_antennas();
  const std::size_t D = num_positions();
  measurements.validate(L, D, config.num_subcarriers);
  if (ideal) ideal->validate(L, D, config.num_subcarriers);
  if (truth_profile) {
    if (truth_profile->num_antennas() != L) throw ValidationError("ground-truth profile length differs from L");
    truth_profile->validate(config);
  }
  if (truth_phases) {
    if (truth_phases->size() != D) throw ValidationError("ground-truth transmit phases length differs from D");
    truth_phases->validate();
  }
}

void CalibrationRecord::validate() const {
  config.validate();
  if (offsets.empty()) throw ValidationError("calibration record has no antennas");
  const double limit = config.unambiguous_time_limit();
  for (std::size_t l = 0; l < offsets.size(); ++l) {
    const auto& o = offsets[l];
    if (!std::isfinite(o.phase_offset_rad) || o.phase_offset_rad < 0.0 || o.phase_offset_rad >= kTwoPi)
      throw ValidationError("calibrated phase of antenna " + std::to_string(l) + " outside [0, 2pi)");
    if (!std::isfinite(o.time_offset_s) || std::abs(o.time_offset_s) >= limit)
      throw ValidationError("calibrated time offset of antenna " + std::to_string(l) + " outside range");
    if (!(o.fit_residual_rad >= 0.0)) throw ValidationError("fit residual must be non-negative");
  }
  if (gains) {
    if (gains->size() != config.num_subcarriers)
      throw ValidationError("gain payload covers " + std::to_string(gains->size()) + " subcarriers, expected " +
                            std::to_string(config.num_subcarriers));
    for (const auto& g : *gains) {
      if (static_cast<std::size_t>(g.size()) != offsets.size())
        throw ValidationError("gain payload vector length differs from L");
      if (!g.allFinite()) throw ValidationError("gain payload has non-finite entries");
    }
  }
}

std::string payload_digest(const MeasurementTensor& measurements) {
  ByteWriter w;
  write_tensor(w, measurements);
  return hex_sha256(w.take());
}

std::vector<std::uint8_t> encode_bundle(const DatasetBundle& bundle) {
  bundle.validate();
  const std::string meta = bundle_metadata(bundle).dump();
  ByteWriter w;
  w.raw(kBundleMagic, 4);
  w.u32(kBundleVersion);
  w.u32(narrow_u32(bundle.num_antennas(), "L"));
  w.u32(narrow_u32(bundle.num_positions(), "D"));
  w.u32(narrow_u32(bundle.config.num_subcarriers, "N_sub"));
  w.u32(bundle.ideal ? 1u : 0u);
  w.u64(meta.size());
  w.raw(meta.data(), meta.size());
  write_tensor(w, bundle.measurements);
  if (bundle.ideal) write_tensor(w, *bundle.ideal);
  return w.take();
}

DatasetBundle decode_bundle(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  check_magic(r, kBundleMagic, "bundle");
  r.require(kBundleHeaderBytes - 4, "header");
  check_version(r, kBundleVersion);
  const std::uint32_t L = r.u32();
  const std::uint32_t D = r.u32();
  const std::uint32_t N = r.u32();
  const std::uint32_t flags = r.u32();
  const std::uint64_t meta_length = r.u64();
  if ((flags & ~1u) != 0)
    throw FormatError(FormatError::Kind::kCorrupt, "unknown header flags " + std::to_string(flags), 20);

  const std::uint64_t meta_start = r.position();
  const json meta = parse_metadata(r, meta_length);
  DatasetBundle bundle;
  try {
    fill_from_metadata(bundle, meta);
  } catch (const std::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, std::string("malformed metadata: ") + e.what(), meta_start);
  }
  if (bundle.num_antennas() != L || bundle.num_positions() != D || bundle.config.num_subcarriers != N)
    throw FormatError(FormatError::Kind::kDimensionMismatch,
                      "header declares L=" + std::to_string(L) + " D=" + std::to_string(D) + " N_sub=" +
                          std::to_string(N) + " but metadata describes L=" + std::to_string(bundle.num_antennas()) +
                          " D=" + std::to_string(bundle.num_positions()) +
                          " N_sub=" + std::to_string(bundle.config.num_subcarriers),
                      8);

  const std::uint64_t tensor_bytes = std::uint64_t{L} * D * N * kComplexBytes;
  expect_exact_size(r, tensor_bytes * ((flags & 1u) ? 2 : 1));
  bundle.measurements = read_tensor<MeasurementTag>(r, L, D, N);
  if (flags & 1u) bundle.ideal = read_tensor<IdealTag>(r, L, D, N);
  bundle.validate();
  return bundle;
}

void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& path) {
  write_file(path, encode_bundle(bundle));
}

DatasetBundle read_bundle(const std::filesystem::path& path) { return decode_bundle(read_file(path)); }

std::vector<std::uint8_t> encode_calibration(const CalibrationRecord& record) {
  record.validate();
  json meta;
  meta["format"] = "arraycal-calibration";
  meta["version"] = kCalibrationVersion;
  meta["radio"] = radio_to_json(record.config);
  json antennas = json::array();
  for (std::size_t l = 0; l < record.offsets.size(); ++l) {
    const auto& o = record.offsets[l];
    antennas.push_back({{"antenna", l},
                        {"phase_offset_rad", o.phase_offset_rad},
                        {"time_offset_s", o.time_offset_s},
                        {"fit_residual_rad", o.fit_residual_rad}});
  }
  meta["antennas"] = antennas;
  meta["residuals"] = record.residuals;
  meta["provenance"] = {{"algorithm", record.provenance.algorithm},
                        {"max_iterations", record.provenance.max_iterations},
                        {"seed", record.provenance.seed},
                        {"tool_version", record.provenance.tool_version},
                        {"input_digest", record.provenance.input_digest}};
  const std::string text = meta.dump(2);

  ByteWriter w;
  w.raw(kCalibrationMagic, 4);
  w.u32(kCalibrationVersion);
  w.u32(narrow_u32(record.offsets.size(), "L"));
  w.u32(record.gains ? narrow_u32(record.gains->size(), "N_sub") : 0u);
  w.u64(text.size());
  w.raw(text.data(), text.size());
  if (record.gains)
    for (const auto& g : *record.gains)
      for (Eigen::Index l = 0; l < g.size(); ++l) w.complex(g(l));
  return w.take();
}

CalibrationRecord decode_calibration(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  check_magic(r, kCalibrationMagic, "calibration");
  r.require(kCalibrationHeaderBytes - 4, "header");
  check_version(r, kCalibrationVersion);
  const std::uint32_t L = r.u32();
  const std::uint32_t N = r.u32();
  const std::uint64_t meta_length = r.u64();
  const std::uint64_t meta_start = r.position();
  const json meta = parse_metadata(r, meta_length);

  CalibrationRecord record;
  try {
    record.config = radio_from_json(meta.at("radio"));
    for (const auto& a : meta.at("antennas"))
      record.offsets.push_back({a.at("phase_offset_rad").get<double>(), a.at("time_offset_s").get<double>(),
                                a.at("fit_residual_rad").get<double>()});
    record.residuals = meta.value("residuals", std::vector<double>{});
    const json& p = meta.at("provenance");
    record.provenance.algorithm = p.at("algorithm").get<std::string>();
    record.provenance.max_iterations = p.at("max_iterations").get<int>();
    record.provenance.seed = p.at("seed").get<std::uint64_t>();
    record.provenance.tool_version = p.at("tool_version").get<std::string>();
    record.provenance.input_digest = p.at("input_digest").get<std::string>();
  } catch (const std::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, std::string("malformed metadata: ") + e.what(), meta_start);
  }
  if (record.offsets.size() != L)
    throw FormatError(FormatError::Kind::kDimensionMismatch,
                      "header declares L=" + std::to_string(L) + " but metadata lists " +
                          std::to_string(record.offsets.size()) + " antennas",
                      8);
  if (N != 0 && N != record.config.num_subcarriers)
    throw FormatError(FormatError::Kind::kDimensionMismatch,
                      "gain payload declares " + std::to_string(N) + " subcarriers, radio config has " +
                          std::to_string(record.config.num_subcarriers),
                      12);

  expect_exact_size(r, std::uint64_t{N} * L * kComplexBytes);
  if (N > 0) {
    GainSeries gains(N, CVector(static_cast<Eigen::Index>(L)));
    for (auto& g : gains)
      for (Eigen::Index l = 0; l < g.size(); ++l) g(l) = r.complex();
    record.gains = std::move(gains);
  }
  record.validate();
  return record;
}

void write_calibration(const CalibrationRecord& record, const std::filesystem::path& path) {
  write_file(path, encode_calibration(record));
}

CalibrationRecord read_calibration(const std::filesystem::path& path) {
  return decode_calibration(read_file(path));
}

void check_provenance(const CalibrationRecord& record, const DatasetBundle& bundle, bool force) {
  if (record.num_antennas() != bundle.num_antennas())
    throw ValidationError("calibration covers " + std::to_string(record.num_antennas()) + " antennas, bundle has " +
                          std::to_string(bundle.num_antennas()));
  if (record.config.num_subcarriers != bundle.config.num_subcarriers)
    throw ValidationError("calibration covers " + std::to_string(record.config.num_subcarriers) +
                          " subcarriers, bundle has " + std::to_string(bundle.config.num_subcarriers));
  if (force) return;
  const std::string digest = payload_digest(bundle.measurements);
  if (record.provenance.input_digest != digest)
    throw ProvenanceError("calibration was computed from input " + record.provenance.input_digest +
                          " but the bundle payload digest is " + digest + " (use --force to override)");
}

std::vector<Vec3> parse_positions(std::istream& in) {
  std::map<long long, Vec3> by_index;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == ';' || c == '\t' || c == '\r'; }, ' ');
    std::istringstream fields(line);
    long long index = 0;
    double x = 0, y = 0, z = 0;
    std::string extra;
    if (!(fields >> index >> x >> y >> z) || (fields >> extra))
      throw ValidationError("line " + std::to_string(line_number) + ": expected 'index, x, y, z'");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw ValidationError("line " + std::to_string(line_number) + ": non-finite coordinate");
    if (!by_index.emplace(index, Vec3(x, y, z)).second)
      throw ValidationError("line " + std::to_string(line_number) + ": duplicate index " + std::to_string(index));
  }
  std::vector<Vec3> positions;
  positions.reserve(by_index.size());
  for (const auto& [index, p] : by_index) {
    if (index != static_cast<long long>(positions.size()))
      throw ValidationError("indices must run 0.." + std::to_string(by_index.size() - 1) + " without gaps; found " +
                            std::to_string(index));
    positions.push_back(p);
  }
  return positions;
}

std::vector<Vec3> import_positions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_positions(in);
}

TransmitterTrack import_track(const std::filesystem::path& path) {
  TransmitterTrack track{import_positions(path)};
  track.validate();
  return track;
}

ArrayGeometry import_geometry(const std::filesystem::path& path) {
  ArrayGeometry geometry{import_positions(path), {}};
  geometry.validate();
  return geometry;
}

}  // namespace arraycal
