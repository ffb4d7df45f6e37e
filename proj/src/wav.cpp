#include "vauth/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vauth/errors.hpp"

namespace vauth {
namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host assumed");

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int16_t to_pcm16(double v) {
  const double scaled = std::round(v * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace

std::string_view to_string(SampleEncoding e) {
  return e == SampleEncoding::Pcm16Le ? "pcm16le" : "f32le";
}

SampleEncoding parse_sample_encoding(std::string_view s) {
  if (s == "pcm16le") return SampleEncoding::Pcm16Le;
  if (s == "f32le") return SampleEncoding::F32Le;
  throw ProtocolError("unknown sample encoding '" + std::string(s) + "'");
}

std::vector<std::uint8_t> encode_samples(std::span<const double> x, SampleEncoding enc) {
  std::vector<std::uint8_t> out;
  if (enc == SampleEncoding::Pcm16Le) {
    out.reserve(x.size() * 2);
    for (double v : x) put_u16(out, static_cast<std::uint16_t>(to_pcm16(v)));
  } else {
    out.reserve(x.size() * 4);
    for (double v : x) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

std::vector<double> decode_samples(std::span<const std::uint8_t> bytes, SampleEncoding enc) {
  const std::size_t width = enc == SampleEncoding::Pcm16Le ? 2 : 4;
  if (bytes.size() % width != 0) {
    throw ProtocolError("payload of " + std::to_string(bytes.size()) + " bytes is not a whole number of samples");
  }
  std::vector<double> out(bytes.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* p = bytes.data() + i * width;
    if (enc == SampleEncoding::Pcm16Le) {
      out[i] = static_cast<double>(static_cast<std::int16_t>(get_u16(p))) / 32768.0;
    } else {
      out[i] = static_cast<double>(std::bit_cast<float>(get_u32(p)));
    }
  }
  return out;
}

SampledSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavFormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 || std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError(path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const std::uint8_t* samples = nullptr;
  std::size_t sample_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const std::uint8_t* chunk = data.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > data.size()) {
      // Tolerate a data chunk truncated by a writer that never patched its size.
      if (std::memcmp(chunk, "data", 4) != 0) throw WavFormatError(path.string() + ": truncated chunk");
    }
    const std::size_t avail = std::min<std::size_t>(size, data.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw WavFormatError(path.string() + ": short fmt chunk");
      format = get_u16(chunk + 8);
      channels = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = get_u16(chunk + 8 + 24);  // WAVE_FORMAT_EXTENSIBLE subformat
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      samples = data.data() + body;
      sample_bytes = avail;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || samples == nullptr) throw WavFormatError(path.string() + ": missing fmt or data chunk");
  if (channels != 1) throw WavFormatError(path.string() + ": expected mono, got " + std::to_string(channels) + " channels");
  if (rate == 0) throw WavFormatError(path.string() + ": zero sample rate");
  SampleEncoding enc;
  if (format == 1 && bits == 16) {
    enc = SampleEncoding::Pcm16Le;
  } else if (format == 3 && bits == 32) {
    enc = SampleEncoding::F32Le;
  } else {
    throw WavFormatError(path.string() + ": unsupported format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");
  }
  const std::size_t width = enc == SampleEncoding::Pcm16Le ? 2 : 4;
  sample_bytes -= sample_bytes % width;
  auto values = decode_samples(std::span<const std::uint8_t>(samples, sample_bytes), enc);
  for (double v : values) {
    if (!std::isfinite(v)) throw WavFormatError(path.string() + ": non-finite sample");
  }
  return SampledSignal(std::move(values), static_cast<double>(rate));
}

void write_wav(const std::filesystem::path& path, const SampledSignal& signal, SampleEncoding enc) {
  const auto payload = encode_samples(signal.samples(), enc);
  const std::uint16_t bits = enc == SampleEncoding::Pcm16Le ? 16 : 32;
  const std::uint16_t format = enc == SampleEncoding::Pcm16Le ? 1 : 3;
  const auto rate = static_cast<std::uint32_t>(std::llround(signal.rate_hz()));
  std::vector<std::uint8_t> out;
  out.reserve(payload.size() + 44);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, static_cast<std::uint32_t>(36 + payload.size()));
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, rate);
  put_u32(out, rate * bits / 8);
  put_u16(out, static_cast<std::uint16_t>(bits / 8));
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw WavFormatError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw WavFormatError("short write to " + path.string());
}

SampledSignal quantize(const SampledSignal& signal, SampleEncoding enc) {
  const auto bytes = encode_samples(signal.samples(), enc);
  return SampledSignal(decode_samples(bytes, enc), signal.rate_hz());
}

}  // namespace vauth
