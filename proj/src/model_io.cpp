#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "vauth/decision.hpp"
#include "vauth/errors.hpp"

// Model file layout, all integers and floats little-endian:
//   "VAMD" | u32 version | u32 dim | f64 weights[dim] | f64 bias
//   | f64 slope | f64 intercept | u32 flags (bit 0: sign-canonical scoring) | u64 positives | u64 negatives
//   | f64 training_accuracy | u32 config_digest | u32 len | created[len]
//   | u32 crc32 of every preceding byte
namespace vauth {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b, std::size_t end) : bytes_(b), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > end_) throw ModelFormatError("truncated model data");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ClassifierModel& model) {
  Writer w;
  w.raw("VAMD", 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.weights.size()));
  for (double v : model.weights) w.f64(v);
  w.f64(model.bias);
  w.f64(model.calibration.slope);
  w.f64(model.calibration.intercept);
  w.u32(model.sign_canonical ? 1u : 0u);
  w.u64(model.meta.positives);
  w.u64(model.meta.negatives);
  w.f64(model.meta.training_accuracy);
  w.u32(model.meta.config_digest);
  w.u32(static_cast<std::uint32_t>(model.meta.created.size()));
  w.raw(model.meta.created.data(), model.meta.created.size());
  w.u32(crc_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

ClassifierModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "VAMD", 4) != 0) throw ModelFormatError("bad magic");
  const std::size_t body = bytes.size() - 4;
  Reader r(bytes, body);
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw ModelFormatError("unsupported version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelVersion) + ")");
  }
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  if (stored != crc_of(bytes.data(), body)) throw ModelFormatError("checksum mismatch");

  ClassifierModel m;
  const std::uint32_t dim = r.u32();
  if (dim != kFeatureLength) throw ModelFormatError("weight count " + std::to_string(dim) + " is not 1001");
  for (auto& v : m.weights) v = r.f64();
  m.bias = r.f64();
  m.calibration.slope = r.f64();
  m.calibration.intercept = r.f64();
  const std::uint32_t flags = r.u32();
  if (flags > 1u) throw ModelFormatError("unknown flags " + std::to_string(flags));
  m.sign_canonical = flags == 1u;
  m.meta.positives = r.u64();
  m.meta.negatives = r.u64();
  m.meta.training_accuracy = r.f64();
  m.meta.config_digest = r.u32();
  m.meta.created = r.str(r.u32());
  if (r.pos() != body) throw ModelFormatError("trailing bytes before checksum");
  return m;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError("short write to " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace vauth
