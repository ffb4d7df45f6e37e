#pragma once

#include <string>

#include "vauth/pipeline.hpp"

namespace vauth {

/// MatchReport as JSON. Field names are stable:
///   is_match, reason (string or null), decision ({is_match, score,
///   probability, max_xcorr} or null), alignment_shift, config_digest,
///   segments ([{index, start_sec, end_sec, verdict, max_xcorr,
///   pitch_distance, acc_f0_hz, mic_f0_hz, acc_longest_run_sec, acc_pulses,
///   mic_pulses}]), stage_timings_ms ({stage: ms}), cleaned_mic ({rate_hz,
///   samples, and when requested encoding "f32le" plus base64 data}).
std::string report_to_json(const MatchReport& report, bool include_audio = false, int indent = -1);

/// Inverse of report_to_json. Cleaned audio is restored only when embedded;
/// otherwise cleaned_mic is empty. Throws ProtocolError on malformed input.
MatchReport report_from_json(const std::string& text);

/// Segment diagnostics alone, as a JSON array.
std::string segments_to_json(const std::vector<SegmentDiagnostic>& segments, int indent = 2);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace vauth
