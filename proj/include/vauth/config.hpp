#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vauth/segment_analysis.hpp"

namespace vauth {

enum class DecisionMode { Classifier, Threshold };

/// Every threshold of the matching pipeline.
struct PipelineConfig {
  double target_rate_hz = 8000.0;
  double highpass_hz = 100.0;
  double spike_window_sec = 0.5;
  double spike_k_sigma = 6.0;
  double envelope_frame_sec = 0.010;
  double envelope_threshold = 0.05;
  double envelope_close_gap_sec = 0.020;
  // Frames of the accelerometer channel (before normalization) whose RMS stays
  // below this level are never active, whatever the relative threshold says.
  double acc_noise_floor_rms = 0.02;
  double min_input_sec = 0.1;
  RuleConfig rules;
  DecisionMode mode = DecisionMode::Classifier;
  double decision_threshold = 0.4;

  bool operator==(const PipelineConfig&) const = default;
};

std::string to_string(DecisionMode m);
DecisionMode parse_decision_mode(const std::string& s);

/// Canonical JSON text (sorted keys) of the configuration.
std::string config_to_json(const PipelineConfig& config);
/// Starts from the defaults and applies every key present. Unknown keys and
/// out-of-range values throw ConfigError.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Throws ConfigError when a value is out of its valid range.
void validate(const PipelineConfig& config);

/// CRC-32 of the canonical JSON text.
std::uint32_t config_digest(const PipelineConfig& config);
std::string digest_hex(std::uint32_t digest);

}  // namespace vauth
