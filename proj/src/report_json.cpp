#include "vauth/report_json.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include "vauth/errors.hpp"
#include "vauth/wav.hpp"

namespace vauth {
namespace {

using nlohmann::json;

json segment_json(const SegmentDiagnostic& d) {
  return {{"index", d.index},
          {"start_sec", d.start_sec},
          {"end_sec", d.end_sec},
          {"verdict", std::string(to_string(d.verdict))},
          {"max_xcorr", d.max_xcorr},
          {"pitch_distance", d.pitch_distance},
          {"acc_f0_hz", d.acc_f0_hz},
          {"mic_f0_hz", d.mic_f0_hz},
          {"acc_longest_run_sec", d.acc_longest_run_sec},
          {"acc_pulses", d.acc_pulses},
          {"mic_pulses", d.mic_pulses}};
}

SegmentDiagnostic segment_from(const json& j) {
  SegmentDiagnostic d;
  d.index = j.at("index").get<std::size_t>();
  d.start_sec = j.at("start_sec").get<double>();
  d.end_sec = j.at("end_sec").get<double>();
  d.verdict = parse_verdict(j.at("verdict").get<std::string>());
  d.max_xcorr = j.at("max_xcorr").get<double>();
  d.pitch_distance = j.at("pitch_distance").get<double>();
  d.acc_f0_hz = j.at("acc_f0_hz").get<double>();
  d.mic_f0_hz = j.at("mic_f0_hz").get<double>();
  d.acc_longest_run_sec = j.at("acc_longest_run_sec").get<double>();
  d.acc_pulses = j.at("acc_pulses").get<std::size_t>();
  d.mic_pulses = j.at("mic_pulses").get<std::size_t>();
  return d;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ProtocolError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw ProtocolError("invalid base64 data");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the bytes produced by '=' padding; drop them.
  for (auto it = text.rbegin(); it != text.rend() && *it == '='; ++it) --len;
  out.resize(len);
  return out;
}

std::string segments_to_json(const std::vector<SegmentDiagnostic>& segments, int indent) {
  json arr = json::array();
  for (const auto& d : segments) arr.push_back(segment_json(d));
  return arr.dump(indent);
}

std::string report_to_json(const MatchReport& report, bool include_audio, int indent) {
  json j;
  j["is_match"] = report.is_match;
  j["reason"] = report.reason ? json(std::string(to_string(*report.reason))) : json(nullptr);
  if (report.decision) {
    const auto& d = *report.decision;
    j["decision"] = {{"is_match", d.is_match}, {"score", d.score}, {"probability", d.probability}, {"max_xcorr", d.max_xcorr}};
  } else {
    j["decision"] = nullptr;
  }
  j["alignment_shift"] = report.alignment_shift;
  j["config_digest"] = report.config_digest;
  json segs = json::array();
  for (const auto& d : report.segments) segs.push_back(segment_json(d));
  j["segments"] = std::move(segs);
  json timings = json::object();
  for (const auto& [stage, ms] : report.stage_timings_ms) timings[stage] = ms;
  j["stage_timings_ms"] = std::move(timings);
  json audio = {{"rate_hz", report.cleaned_mic.rate_hz()}, {"samples", report.cleaned_mic.size()}};
  if (include_audio) {
    audio["encoding"] = "f32le";
    audio["base64"] = base64_encode(encode_samples(report.cleaned_mic.samples(), SampleEncoding::F32Le));
  }
  j["cleaned_mic"] = std::move(audio);
  return j.dump(indent);
}

MatchReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MatchReport r;
    r.is_match = j.at("is_match").get<bool>();
    if (!j.at("reason").is_null()) r.reason = parse_no_match_reason(j.at("reason").get<std::string>());
    if (!j.at("decision").is_null()) {
      const auto& d = j.at("decision");
      r.decision = MatchDecision{d.at("is_match").get<bool>(), d.at("score").get<double>(),
                                 d.at("probability").get<double>(), d.at("max_xcorr").get<double>()};
    }
    r.alignment_shift = j.at("alignment_shift").get<std::ptrdiff_t>();
    r.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& s : j.at("segments")) r.segments.push_back(segment_from(s));
    for (const auto& [stage, ms] : j.at("stage_timings_ms").items()) r.stage_timings_ms.emplace_back(stage, ms.get<double>());
    const auto& audio = j.at("cleaned_mic");
    const double rate = audio.at("rate_hz").get<double>();
    if (audio.contains("base64")) {
      const auto bytes = base64_decode(audio.at("base64").get<std::string>());
      r.cleaned_mic = SampledSignal(decode_samples(bytes, parse_sample_encoding(audio.at("encoding").get<std::string>())), rate);
    } else {
      r.cleaned_mic = SampledSignal::empty(rate);
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed report: ") + e.what());
  } catch (const InvalidConfig& e) {
    throw ProtocolError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace vauth
