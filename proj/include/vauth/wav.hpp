#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "vauth/signal.hpp"

namespace vauth {

enum class SampleEncoding { Pcm16Le, F32Le };

std::string_view to_string(SampleEncoding e);
/// Parses "pcm16le" / "f32le"; throws ProtocolError otherwise.
SampleEncoding parse_sample_encoding(std::string_view s);

/// Raw little-endian sample bytes. pcm16 maps [-1, 1] onto [-32768, 32767]
/// (x * 32768, rounded and saturated).
std::vector<std::uint8_t> encode_samples(std::span<const double> x, SampleEncoding enc);
/// Inverse of encode_samples; pcm16 decodes as v / 32768.
std::vector<double> decode_samples(std::span<const std::uint8_t> bytes, SampleEncoding enc);

/// Reads a mono RIFF/WAVE file (16-bit PCM or 32-bit IEEE float).
SampledSignal read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const SampledSignal& signal,
               SampleEncoding enc = SampleEncoding::F32Le);

/// Rounds samples through the given encoding, as a write/read cycle would.
SampledSignal quantize(const SampledSignal& signal, SampleEncoding enc);

}  // namespace vauth
