#include "somsam/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "somsam/error.hpp"
#include "somsam/rng.hpp"

namespace somsam {

namespace {

class ByteWriter {
 public:
  void raw(const char* text, std::size_t n) {
    bytes_.insert(bytes_.end(), text, text + n);
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::size_t size() const { return bytes_.size(); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n) throw FormatError(FormatFault::Truncated, pos_, "truncated " + what);
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes_[pos_ + b]} << (8 * b);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= std::uint64_t{bytes_[pos_ + b]} << (8 * b);
    pos_ += 8;
    return v;
  }
  float f32(const std::string& what) { return std::bit_cast<float>(u32(what)); }
  double f64(const std::string& what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool has_magic(std::span<const std::uint8_t> bytes, const char (&magic)[5]) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), magic, 4) == 0;
}

float checked_float(ByteReader& in, const std::string& what) {
  const std::size_t at = in.offset();
  const float v = in.f32(what);
  if (!std::isfinite(v)) throw FormatError(FormatFault::NonFinite, at, "non-finite " + what);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureSet

void FeatureSet::push_back(ClassId label, std::span<const float> vector) {
  if (vector.size() != dim) throw ShapeError("feature vector dimension", dim, vector.size());
  labels.push_back(label);
  values.insert(values.end(), vector.begin(), vector.end());
}

std::uint32_t FeatureSet::distinct_labels() const {
  return static_cast<std::uint32_t>(std::set<ClassId>(labels.begin(), labels.end()).size());
}

std::uint32_t FeatureSet::label_bound() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

FeatureSet FeatureSet::filter(std::span<const ClassId> keep) const {
  const std::set<ClassId> wanted(keep.begin(), keep.end());
  FeatureSet out{dim, {}, {}};
  for (std::size_t i = 0; i < size(); ++i) {
    if (wanted.contains(labels[i])) out.push_back(labels[i], row(i));
  }
  return out;
}

void FeatureSet::validate() const {
  if (values.size() != labels.size() * std::size_t{dim}) {
    throw ContractError("feature set holds " + std::to_string(values.size()) +
                        " components for " + std::to_string(labels.size()) +
                        " records of dimension " + std::to_string(dim));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ContractError("non-finite component in record " + std::to_string(i / dim));
    }
  }
}

// ---------------------------------------------------------------------------
// FVB

std::vector<std::uint8_t> encode_features(const FeatureSet& set) {
  set.validate();
  ByteWriter out;
  out.raw("FVB1", 4);
  out.u32(kFvbVersion);
  out.u32(set.dim);
  out.u32(static_cast<std::uint32_t>(set.size()));
  out.u32(set.distinct_labels());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.u32(set.labels[i]);
    for (float v : set.row(i)) out.f32(v);
  }
  return std::move(out.bytes());
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  if (!has_magic(bytes, "FVB1")) throw FormatError(FormatFault::BadMagic, 0, "missing FVB1 magic");
  ByteReader in(bytes);
  in.u32("FVB magic");
  const std::uint32_t version = in.u32("FVB version");
  if (version != kFvbVersion) {
    throw FormatError(FormatFault::BadVersion, 4,
                      "unsupported FVB version " + std::to_string(version));
  }
  FeatureSet set;
  set.dim = in.u32("FVB dim");
  const std::uint32_t count = in.u32("FVB record count");
  const std::uint32_t distinct = in.u32("FVB label count");
  if (set.dim == 0 && count != 0) {
    throw FormatError(FormatFault::Inconsistent, 8, "records of dimension zero");
  }

  const std::size_t record_bytes = 4 + std::size_t{set.dim} * 4;
  set.labels.reserve(std::min<std::size_t>(count, in.remaining() / record_bytes + 1));
  set.values.reserve(std::min<std::size_t>(std::size_t{count} * set.dim, in.remaining() / 4));
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::string what = "record " + std::to_string(r);
    if (in.remaining() < record_bytes) {
      throw FormatError(FormatFault::Truncated, in.offset(), what + " truncated");
    }
    set.labels.push_back(in.u32(what));
    for (std::uint32_t c = 0; c < set.dim; ++c) set.values.push_back(checked_float(in, what));
  }
  if (in.remaining() != 0) {
    throw FormatError(FormatFault::Inconsistent, in.offset(),
                      std::to_string(in.remaining()) + " trailing bytes after last record");
  }
  if (distinct != 0 && distinct != set.distinct_labels()) {
    throw FormatError(FormatFault::Inconsistent, 16,
                      "header declares " + std::to_string(distinct) + " labels, records hold " +
                          std::to_string(set.distinct_labels()));
  }
  return set;
}

void write_features(const FeatureSet& set, std::ostream& out) {
  const auto bytes = encode_features(set);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write feature stream");
}

void write_features(const FeatureSet& set, const std::filesystem::path& path) {
  write_file(path, encode_features(set));
}

FeatureSet read_features(std::istream& in) {
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("failed to read feature stream");
  return decode_features(bytes);
}

FeatureSet read_features(const std::filesystem::path& path) { return decode_features(read_file(path)); }

// ---------------------------------------------------------------------------
// Normalization and synthetic data

NormalizeResult l2_normalize(FeatureSet set) {
  NormalizeResult result;
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::span<float> v{set.values.data() + i * set.dim, set.dim};
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0) {
      ++result.skipped_zero;
      continue;
    }
    const double norm = std::sqrt(sq);
    for (float& x : v) x = static_cast<float>(x / norm);
  }
  result.set = std::move(set);
  return result;
}

FeatureSet generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.dim == 0 || spec.samples_per_class == 0) {
    throw ContractError("synthetic spec counts must be at least 1");
  }
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread)) {
    throw ContractError("cluster spread must be finite and nonnegative");
  }
  Rng rng(spec.seed);
  FeatureSet set{spec.dim, {}, {}};
  set.labels.reserve(std::size_t{spec.num_classes} * spec.samples_per_class);
  set.values.reserve(set.labels.capacity() * spec.dim);
  std::vector<double> center(spec.dim);
  std::vector<float> sample(spec.dim);
  for (ClassId c = 0; c < spec.num_classes; ++c) {
    for (double& x : center) x = rng.uniform01();
    for (std::uint32_t s = 0; s < spec.samples_per_class; ++s) {
      for (std::size_t i = 0; i < spec.dim; ++i) {
        sample[i] = static_cast<float>(center[i] + spec.cluster_spread * rng.normal());
      }
      set.push_back(c, sample);
    }
  }
  return set;
}

std::pair<FeatureSet, FeatureSet> split_per_class(const FeatureSet& set,
                                                  std::size_t train_per_class) {
  std::pair<FeatureSet, FeatureSet> out{FeatureSet{set.dim, {}, {}}, FeatureSet{set.dim, {}, {}}};
  std::vector<std::size_t> seen(set.label_bound(), 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& dest = seen[set.labels[i]]++ < train_per_class ? out.first : out.second;
    dest.push_back(set.labels[i], set.row(i));
  }
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in pieces.
  constexpr std::size_t kChunk = 1U << 30;
  for (std::size_t pos = 0; pos < bytes.size(); pos += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - pos);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// Model file
//
//   "SAMM" | u32 version | u32 header length | header | SOM weights | omega | u32 crc
//
// header: u32 mode, k, N, subdim, grid rows, grid cols, epochs; f64 alpha,
//         theta; u32 decay; u64 seed; u32 M; M x u64 samples per class.
// SOM weights: k x N x subdim binary32, SOM-major then neuron-major.
// omega: Binary, M x ceil(kN/64) u64 words (column c is bit c%64 of word
//        c/64); Integer, M x kN u32 counters.
// crc: CRC-32 of every preceding byte.

namespace {

constexpr std::size_t kModelFixedHeader = 7 * 4 + 2 * 8 + 4 + 8 + 4;

}  // namespace

std::vector<std::uint8_t> encode_model(const Model& model) {
  const ProductQuantizer& pq = model.quantizer;
  const AssociativeClassifier& clf = model.classifier;
  if (clf.k() != pq.k()) throw ShapeError("classifier k vs quantizer k", pq.k(), clf.k());
  if (clf.n_per_som() != pq.n_per_som()) {
    throw ShapeError("classifier N vs quantizer N", pq.n_per_som(), clf.n_per_som());
  }
  const SomTrainConfig& cfg = pq.config();
  if (!cfg.theta) throw ContractError("model config must carry a resolved theta");

  ByteWriter out;
  out.raw("SAMM", 4);
  out.u32(kModelVersion);
  const std::size_t m = clf.num_classes();
  out.u32(static_cast<std::uint32_t>(kModelFixedHeader + 8 * m));
  out.u32(static_cast<std::uint32_t>(clf.mode()));
  out.u32(static_cast<std::uint32_t>(pq.k()));
  out.u32(pq.n_per_som());
  out.u32(static_cast<std::uint32_t>(pq.subdim()));
  out.u32(pq.grid().rows);
  out.u32(pq.grid().cols);
  out.u32(cfg.epochs);
  out.f64(cfg.alpha);
  out.f64(*cfg.theta);
  out.u32(static_cast<std::uint32_t>(cfg.decay));
  out.u64(cfg.seed);
  out.u32(static_cast<std::uint32_t>(m));
  for (std::uint64_t s : clf.samples_per_class()) out.u64(s);

  for (const Som& som : pq.soms()) {
    for (float w : som.weights()) out.f32(w);
  }
  if (clf.mode() == ClassifierMode::Binary) {
    for (std::uint64_t word : clf.bit_rows()) out.u64(word);
  } else {
    for (std::uint32_t c : clf.counter_rows()) out.u32(c);
  }
  out.u32(crc32(out.bytes()));
  return std::move(out.bytes());
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  if (!has_magic(bytes, "SAMM")) throw FormatError(FormatFault::BadMagic, 0, "missing SAMM magic");
  ByteReader in(bytes);
  in.u32("magic");
  const std::uint32_t version = in.u32("model version");
  if (version != kModelVersion) {
    throw FormatError(FormatFault::BadVersion, 4,
                      "unsupported model version " + std::to_string(version));
  }
  if (bytes.size() < 16) throw FormatError(FormatFault::Truncated, bytes.size(), "truncated model");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (tail.u32("checksum") != crc32(body)) {
    throw FormatError(FormatFault::Checksum, bytes.size() - 4, "model checksum mismatch");
  }
  in = ByteReader(body);
  in.u32("magic");
  in.u32("model version");

  const std::size_t header_at = in.offset();
  const std::uint32_t header_len = in.u32("header length");
  const auto mode_raw = in.u32("mode");
  const std::uint32_t k = in.u32("k");
  const std::uint32_t n = in.u32("N");
  const std::uint32_t subdim = in.u32("subdim");
  GridTopology grid;
  grid.rows = in.u32("grid rows");
  grid.cols = in.u32("grid cols");
  SomTrainConfig cfg;
  cfg.epochs = in.u32("epochs");
  cfg.alpha = in.f64("alpha");
  cfg.theta = in.f64("theta");
  const auto decay_raw = in.u32("decay");
  cfg.seed = in.u64("seed");
  const std::uint32_t m = in.u32("class count");

  auto inconsistent = [&](const std::string& what) {
    return FormatError(FormatFault::Inconsistent, header_at, what);
  };
  if (header_len != kModelFixedHeader + std::size_t{8} * m) throw inconsistent("bad header length");
  if (mode_raw > 1) throw inconsistent("unknown classifier mode");
  if (decay_raw > 1) throw inconsistent("unknown decay");
  if (k == 0 || n == 0 || subdim == 0) throw inconsistent("zero model dimension");
  if (grid.size() != n) throw inconsistent("grid shape does not match N");
  cfg.decay = static_cast<Decay>(decay_raw);
  const auto mode = static_cast<ClassifierMode>(mode_raw);

  std::vector<std::uint64_t> samples(m);
  for (auto& s : samples) s = in.u64("sample counters");

  const std::size_t weights_per_som = std::size_t{n} * subdim;
  in.need(std::size_t{k} * weights_per_som * 4, "SOM weights");
  std::vector<Som> soms;
  soms.reserve(k);
  for (std::uint32_t j = 0; j < k; ++j) {
    std::vector<float> w(weights_per_som);
    for (float& x : w) x = checked_float(in, "SOM weight");
    soms.emplace_back(subdim, grid, std::move(w));
  }

  std::vector<std::uint64_t> bits;
  std::vector<std::uint32_t> counts;
  const std::size_t columns = std::size_t{k} * n;
  if (mode == ClassifierMode::Binary) {
    const std::size_t words = (columns + 63) / 64;
    in.need(std::size_t{m} * words * 8, "omega rows");
    bits.resize(std::size_t{m} * words);
    for (auto& w : bits) w = in.u64("omega rows");
  } else {
    in.need(std::size_t{m} * columns * 4, "omega rows");
    counts.resize(std::size_t{m} * columns);
    for (auto& c : counts) c = in.u32("omega rows");
  }
  if (in.remaining() != 0) {
    throw FormatError(FormatFault::Inconsistent, in.offset(), "trailing bytes before checksum");
  }

  try {
    cfg.validate();
    return Model{ProductQuantizer(cfg, std::move(soms)),
                 AssociativeClassifier::from_storage(mode, k, n, std::move(samples),
                                                     std::move(bits), std::move(counts))};
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw inconsistent(e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace somsam
