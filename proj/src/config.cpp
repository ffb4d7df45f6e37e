#include "vauth/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "vauth/errors.hpp"

namespace vauth {
namespace {

using nlohmann::json;

// Binds one JSON object to a set of named double fields.
class Fields {
 public:
  void add(const std::string& name, double* field) { fields_[name] = field; }

  json to_json() const {
    json j = json::object();
    for (const auto& [name, field] : fields_) j[name] = *field;
    return j;
  }

  void apply(const json& j, const std::string& where) const {
    for (const auto& [key, value] : j.items()) {
      auto it = fields_.find(key);
      if (it == fields_.end()) throw ConfigError("unknown key '" + where + key + "'");
      if (!value.is_number()) throw ConfigError("'" + where + key + "' must be a number");
      *it->second = value.get<double>();
    }
  }

 private:
  std::map<std::string, double*> fields_;
};

Fields pitch_fields(PitchParams& p) {
  Fields f;
  f.add("window_sec", &p.window_sec);
  f.add("hop_sec", &p.hop_sec);
  f.add("voicing_threshold", &p.voicing_threshold);
  f.add("silence_threshold", &p.silence_threshold);
  f.add("tie_tolerance", &p.tie_tolerance);
  f.add("octave_cost", &p.octave_cost);
  f.add("search_fraction", &p.search_fraction);
  return f;
}

Fields rule_fields(RuleConfig& r) {
  Fields f;
  f.add("min_segment_sec", &r.min_segment_sec);
  f.add("min_pulse_run_sec", &r.min_pulse_run_sec);
  f.add("f0_min_hz", &r.f0_min_hz);
  f.add("f0_max_hz", &r.f0_max_hz);
  f.add("pitch_distance_max", &r.pitch_distance_max);
  f.add("corr_gate", &r.corr_gate);
  f.add("extract_f0_min_hz", &r.extract_f0_min_hz);
  f.add("extract_f0_max_hz", &r.extract_f0_max_hz);
  return f;
}

Fields top_fields(PipelineConfig& c) {
  Fields f;
  f.add("target_rate_hz", &c.target_rate_hz);
  f.add("highpass_hz", &c.highpass_hz);
  f.add("spike_window_sec", &c.spike_window_sec);
  f.add("spike_k_sigma", &c.spike_k_sigma);
  f.add("envelope_frame_sec", &c.envelope_frame_sec);
  f.add("envelope_threshold", &c.envelope_threshold);
  f.add("envelope_close_gap_sec", &c.envelope_close_gap_sec);
  f.add("acc_noise_floor_rms", &c.acc_noise_floor_rms);
  f.add("min_input_sec", &c.min_input_sec);
  f.add("decision_threshold", &c.decision_threshold);
  return f;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::string to_string(DecisionMode m) { return m == DecisionMode::Classifier ? "classifier" : "threshold"; }

DecisionMode parse_decision_mode(const std::string& s) {
  if (s == "classifier") return DecisionMode::Classifier;
  if (s == "threshold") return DecisionMode::Threshold;
  throw ConfigError("unknown decision mode '" + s + "'");
}

std::string config_to_json(const PipelineConfig& config) {
  PipelineConfig c = config;
  json j = top_fields(c).to_json();
  j["decision_mode"] = to_string(c.mode);
  j["rules"] = rule_fields(c.rules).to_json();
  j["rules"]["pitch"] = pitch_fields(c.rules.pitch).to_json();
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  PipelineConfig c;
  json top = j;
  json rules = json::object();
  json pitch = json::object();
  if (top.contains("rules")) {
    rules = top["rules"];
    top.erase("rules");
    if (!rules.is_object()) throw ConfigError("'rules' must be an object");
    if (rules.contains("pitch")) {
      pitch = rules["pitch"];
      rules.erase("pitch");
      if (!pitch.is_object()) throw ConfigError("'rules.pitch' must be an object");
    }
  }
  if (top.contains("decision_mode")) {
    if (!top["decision_mode"].is_string()) throw ConfigError("'decision_mode' must be a string");
    c.mode = parse_decision_mode(top["decision_mode"].get<std::string>());
    top.erase("decision_mode");
  }
  top_fields(c).apply(top, "");
  rule_fields(c.rules).apply(rules, "rules.");
  pitch_fields(c.rules.pitch).apply(pitch, "rules.pitch.");
  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void validate(const PipelineConfig& c) {
  require(c.target_rate_hz > 0.0, "target_rate_hz must be positive");
  require(c.highpass_hz > 0.0 && c.highpass_hz < c.target_rate_hz / 2.0, "highpass_hz must lie in (0, target/2)");
  require(c.spike_window_sec * c.target_rate_hz >= 8.0, "spike window must span at least 8 samples");
  require(c.spike_k_sigma > 0.0, "spike_k_sigma must be positive");
  require(c.envelope_frame_sec * c.target_rate_hz >= 1.0, "envelope frame must span at least one sample");
  require(c.envelope_threshold > 0.0 && c.envelope_threshold < 1.0, "envelope_threshold must lie in (0, 1)");
  require(c.envelope_close_gap_sec >= 0.0, "envelope_close_gap_sec must be non-negative");
  require(c.acc_noise_floor_rms >= 0.0, "acc_noise_floor_rms must be non-negative");
  require(c.min_input_sec >= 0.0, "min_input_sec must be non-negative");
  require(c.decision_threshold >= 0.0 && c.decision_threshold <= 1.0, "decision_threshold must lie in [0, 1]");
  const auto& r = c.rules;
  require(r.f0_min_hz > 0.0 && r.f0_min_hz < r.f0_max_hz, "need 0 < f0_min_hz < f0_max_hz");
  require(r.extract_f0_min_hz > 0.0 && r.extract_f0_min_hz < r.extract_f0_max_hz,
          "need 0 < extract_f0_min_hz < extract_f0_max_hz");
  require(r.pitch_distance_max >= 0.0, "pitch_distance_max must be non-negative");
  require(r.corr_gate >= 0.0 && r.corr_gate < 1.0, "corr_gate must lie in [0, 1)");
  const auto& p = r.pitch;
  require(p.window_sec > 0.0 && p.hop_sec > 0.0, "pitch window and hop must be positive");
  require(p.voicing_threshold > 0.0 && p.voicing_threshold < 1.0, "voicing_threshold must lie in (0, 1)");
  require(p.search_fraction > 0.0 && p.search_fraction < 0.5, "search_fraction must lie in (0, 0.5)");
  require(p.tie_tolerance >= 0.0 && p.octave_cost >= 0.0, "tie_tolerance and octave_cost must be non-negative");
}

std::uint32_t config_digest(const PipelineConfig& config) {
  const std::string text = config_to_json(config);
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size())));
}

std::string digest_hex(std::uint32_t digest) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", digest);
  return buf;
}

}  // namespace vauth
