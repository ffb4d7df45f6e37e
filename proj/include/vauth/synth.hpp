#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vauth/signal.hpp"

// Source-filter synthesizer producing paired air (microphone) and
// body-conduction (accelerometer) recordings from one shared excitation.
namespace vauth {

enum class PartKind { Voiced, Unvoiced, Pause };

struct Formant {
  double center_hz = 500.0;
  double bandwidth_hz = 80.0;
};

struct BodyChannel {
  double lowpass_hz = 3000.0;
  double attenuation_db = 6.0;   // acc RMS below mic RMS
  double noise_floor = 1e-4;     // sensor noise standard deviation
  double unvoiced_gain = 0.1;    // unvoiced excitation barely reaches the skin
};

struct SynthConfig {
  double f0_hz = 125.0;
  std::vector<Formant> formants{{270.0, 180.0}, {2290.0, 270.0}, {3010.0, 450.0}};
  double duration_sec = 0.3;
  double jitter_pct = 1.0;
  double shimmer_pct = 3.0;
  double drift_pct = 8.0;        // slow random f0 wander (RMS), shared by both channels
  double air_snr_db = 30.0;
  BodyChannel body;
  std::uint64_t seed = 1;
  double rate_hz = 16000.0;
  double level_rms = 0.15;       // microphone RMS over non-pause parts
  double unvoiced_level = 0.35;  // unvoiced part RMS relative to voiced
  double mic_delay_sec = 0.0015; // acoustic path delay of the air channel
  double edge_silence_sec = 0.1; // silence added before and after the plan
};

struct PlanItem {
  PartKind kind = PartKind::Voiced;
  double f0_hz = 125.0;
  double f0_end_hz = 0.0;  // linear glide target; 0 keeps f0_hz
  std::vector<Formant> formants;
  double duration_sec = 0.2;
};

/// Maximal run of non-pause plan items.
struct TruthSegment {
  double start_sec = 0.0;
  double end_sec = 0.0;
  double f0_hz = 0.0;  // mean over voiced items, 0 if none
  bool voiced = false;
};

struct UtterancePair {
  SampledSignal acc;
  SampledSignal mic;
  std::vector<TruthSegment> truth;
  std::string label;
  std::string group;
};

/// Renders a plan. Throws InvalidConfig for an empty plan, a formant at or
/// above Nyquist, or a voiced f0 outside [80, 1/0.003] Hz.
UtterancePair synth_utterance(const SynthConfig& cfg, const std::vector<PlanItem>& plan);
/// Single voiced item from cfg.f0_hz, cfg.formants and cfg.duration_sec.
UtterancePair synth_utterance(const SynthConfig& cfg);

struct PhonemeEntry {
  std::string symbol;
  std::string group;  // "vowel" or "consonant"
  std::vector<PlanItem> parts;  // f0 left unset
  std::vector<Formant> carrier;  // empty for vowels
};

struct PhonemeTable {
  std::vector<PhonemeEntry> entries;
  double word_pause_sec = 0.15;
};

std::filesystem::path default_data_dir();
/// Reads data/phoneme_bank.json (or the given file).
PhonemeTable load_phoneme_table(const std::filesystem::path& path = {});

struct BankOptions {
  double f0_low_hz = 90.0;
  double f0_high_hz = 300.0;
  double contour_pct = 8.0;  // per-word f0 glide bound
  double air_snr_db = 30.0;
  double jitter_pct = 1.0;
  double drift_pct = 8.0;
  std::filesystem::path table_path;
};

/// 44 pairs, one per phoneme: two words separated by a pause, consonants
/// followed by a carrier vowel. Each pair gets its own f0 from a geometric
/// grid over [f0_low, f0_high], permuted by the seed.
std::vector<UtterancePair> synth_phoneme_bank(std::uint64_t seed, const BankOptions& options = {});

struct CommandUtterance {
  std::size_t speaker = 0;
  std::size_t command = 0;
  UtterancePair pair;
};

/// Speakers differ in base f0 and vocal-tract scale; command k has the same
/// phoneme content for every speaker. Ordered speaker-major.
std::vector<CommandUtterance> synth_command_corpus(std::uint64_t seed, std::size_t speakers = 8,
                                                   std::size_t commands = 10);

enum class NoiseKind { White, Periodic, Spike };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view s);

/// White: Gaussian with standard deviation `level`. Periodic: a frozen noise
/// snippet of 15 to 100 ms looped, RMS `level`. Spike: a 1e-4 floor plus one
/// to four short transients of peak `level`.
SampledSignal make_noise(NoiseKind kind, double level, double duration_sec, std::uint64_t seed,
                         double rate_hz = 16000.0);

/// Period in seconds of the loop make_noise uses for the periodic kind.
double periodic_noise_period(std::uint64_t seed);

/// Writes acc/mic WAV pairs plus a manifest.json with the truth segments.
void write_corpus(const std::vector<UtterancePair>& pairs, const std::filesystem::path& dir);
/// Reads a corpus written by write_corpus, in manifest order.
std::vector<UtterancePair> read_corpus(const std::filesystem::path& dir);

}  // namespace vauth
