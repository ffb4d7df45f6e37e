#include "vauth/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vauth/errors.hpp"
#include "vauth/signal_core.hpp"
#include "vauth/wav.hpp"

namespace vauth {
namespace {

using nlohmann::json;

constexpr double kF0Min = 80.0;
constexpr double kF0Max = 1.0 / 0.003;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Second-order resonator with unit DC gain.
class Resonator {
 public:
  void set(const Formant& f, double rate) {
    const double r = std::exp(-std::numbers::pi * f.bandwidth_hz / rate);
    b_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * f.center_hz / rate);
    c_ = -r * r;
    a_ = 1.0 - b_ - c_;
  }
  double step(double x) {
    const double y = a_ * x + b_ * y1_ + c_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_ = 1.0, b_ = 0.0, c_ = 0.0;
  double y1_ = 0.0, y2_ = 0.0;
};

// Rosenberg glottal flow derivative over one period; opening takes 40% of
// the period and closing 16%.
double rosenberg_derivative(double t, double period) {
  const double tp = 0.40 * period;
  const double tn = 0.16 * period;
  if (t < 0.0 || t >= tp + tn) return 0.0;
  if (t < tp) return std::numbers::pi / (2.0 * tp) * std::sin(std::numbers::pi * t / tp);
  return -std::numbers::pi / (2.0 * tn) * std::sin(std::numbers::pi * (t - tp) / (2.0 * tn));
}

double rms_of(const std::vector<double>& x, std::size_t b, std::size_t e) {
  if (e <= b) return 0.0;
  double acc = 0.0;
  for (std::size_t i = b; i < e; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(e - b));
}

void validate_plan(const SynthConfig& cfg, const std::vector<PlanItem>& plan) {
  if (plan.empty()) throw InvalidConfig("empty phoneme plan");
  if (!(cfg.rate_hz > 0.0)) throw InvalidConfig("rate must be positive");
  for (const auto& item : plan) {
    if (item.duration_sec < 0.0) throw InvalidConfig("negative plan item duration");
    if (item.kind == PartKind::Pause) continue;
    if (item.formants.empty()) throw InvalidConfig("non-pause plan item without formants");
    for (const auto& f : item.formants) {
      if (!(f.center_hz > 0.0) || f.center_hz >= cfg.rate_hz / 2.0) {
        throw InvalidConfig("formant at " + std::to_string(f.center_hz) + " Hz is outside (0, Nyquist)");
      }
      if (!(f.bandwidth_hz > 0.0)) throw InvalidConfig("formant bandwidth must be positive");
    }
    if (item.kind == PartKind::Voiced) {
      const double end = item.f0_end_hz > 0.0 ? item.f0_end_hz : item.f0_hz;
      for (double f0 : {item.f0_hz, end}) {
        if (f0 < kF0Min - 1e-9 || f0 > kF0Max + 1e-9) {
          throw InvalidConfig("f0 " + std::to_string(f0) + " Hz is outside the human range [80, 333]");
        }
      }
    }
  }
}

}  // namespace

UtterancePair synth_utterance(const SynthConfig& cfg, const std::vector<PlanItem>& plan) {
  validate_plan(cfg, plan);
  const double rate = cfg.rate_hz;
  auto rng = make_rng(cfg.seed, 0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Sample ranges of every plan item, after the leading silence.
  const auto edge = static_cast<std::size_t>(std::llround(cfg.edge_silence_sec * rate));
  std::vector<std::size_t> starts, ends;
  std::size_t pos = edge;
  for (const auto& item : plan) {
    starts.push_back(pos);
    pos += static_cast<std::size_t>(std::llround(item.duration_sec * rate));
    ends.push_back(pos);
  }
  const std::size_t total = pos + edge;

  // Slow f0 wander: a few low-frequency sinusoids with random phases.
  constexpr int kDriftTones = 6;
  std::array<double, kDriftTones> drift_hz{}, drift_phase{};
  {
    std::uniform_real_distribution<double> freq(2.0, 12.0), phase(0.0, 2.0 * std::numbers::pi);
    for (int d = 0; d < kDriftTones; ++d) {
      drift_hz[d] = freq(rng);
      drift_phase[d] = phase(rng);
    }
  }
  const double drift_amp = cfg.drift_pct / 100.0 * std::sqrt(2.0 / kDriftTones);
  auto drift = [&](double t) {
    double v = 0.0;
    for (int d = 0; d < kDriftTones; ++d) v += std::sin(2.0 * std::numbers::pi * drift_hz[d] * t + drift_phase[d]);
    return 1.0 + drift_amp * v;
  };

  // Source: glottal pulses for voiced items, white noise for unvoiced ones.
  std::vector<double> source(total, 0.0);
  double next_pulse = -1.0;  // continues across adjacent voiced items
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto& item = plan[k];
    const double t_begin = static_cast<double>(starts[k]) / rate;
    const double t_end = static_cast<double>(ends[k]) / rate;
    if (item.kind == PartKind::Unvoiced) {
      for (std::size_t i = starts[k]; i < ends[k]; ++i) source[i] = gauss(rng);
      next_pulse = -1.0;
      continue;
    }
    if (item.kind == PartKind::Pause || ends[k] == starts[k]) {
      if (item.kind == PartKind::Pause) next_pulse = -1.0;
      continue;
    }
    const double f0_end = item.f0_end_hz > 0.0 ? item.f0_end_hz : item.f0_hz;
    double t = next_pulse >= t_begin ? next_pulse : t_begin;
    while (t < t_end) {
      const double a = (t - t_begin) / std::max(t_end - t_begin, 1e-12);
      const double f0 = (item.f0_hz + a * (f0_end - item.f0_hz)) * drift(t);
      const double period = std::clamp((1.0 + cfg.jitter_pct / 100.0 * gauss(rng)) / f0, 0.5 / f0, 1.5 / f0);
      const double amp = std::max(0.1, 1.0 + cfg.shimmer_pct / 100.0 * gauss(rng));
      const auto i0 = static_cast<std::size_t>(std::ceil(t * rate));
      const auto i1 = std::min(total, static_cast<std::size_t>(std::ceil((t + period) * rate)));
      for (std::size_t i = i0; i < i1; ++i) {
        source[i] += amp * period * rosenberg_derivative(static_cast<double>(i) / rate - t, period);
      }
      t += period;
    }
    next_pulse = t;
  }

  // Per-item gain so each item reaches its target level after the vocal tract.
  std::vector<double> item_gain(plan.size(), 0.0);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (plan[k].kind == PartKind::Pause || ends[k] == starts[k]) continue;
    std::vector<Resonator> tract(plan[k].formants.size());
    for (std::size_t f = 0; f < tract.size(); ++f) tract[f].set(plan[k].formants[f], rate);
    std::vector<double> probe(ends[k] - starts[k]);
    for (std::size_t i = starts[k]; i < ends[k]; ++i) {
      double v = source[i];
      for (auto& r : tract) v = r.step(v);
      probe[i - starts[k]] = v;
    }
    const double r = rms_of(probe, 0, probe.size());
    const double target = plan[k].kind == PartKind::Voiced ? 1.0 : cfg.unvoiced_level;
    item_gain[k] = r > 0.0 ? target / r : 0.0;
  }
  // Smooth the gain curve with a 10 ms box so item edges ramp instead of click.
  std::vector<double> gain(total, 0.0);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    for (std::size_t i = starts[k]; i < ends[k]; ++i) gain[i] = item_gain[k];
  }
  const auto box = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.010 * rate)));
  std::vector<double> smooth(total, 0.0);
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < total + box / 2; ++i) {
      if (i < total) acc += gain[i];
      if (i >= box) acc -= gain[i - box];
      if (i >= box / 2) smooth[i - box / 2] = acc / static_cast<double>(box);
    }
  }
  std::vector<double> body_source(total, 0.0);
  std::vector<double> air_source(total, 0.0);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const double body_weight = plan[k].kind == PartKind::Unvoiced ? cfg.body.unvoiced_gain : 1.0;
    for (std::size_t i = starts[k]; i < ends[k]; ++i) {
      air_source[i] = source[i] * smooth[i];
      body_source[i] = air_source[i] * body_weight;
    }
  }

  // Air channel: cascade of resonators whose coefficients follow the plan.
  std::vector<double> mic(total, 0.0);
  {
    std::size_t nres = 0;
    for (const auto& item : plan) nres = std::max(nres, item.formants.size());
    std::vector<Resonator> tract(nres);
    std::size_t k = 0;
    for (std::size_t i = 0; i < total; ++i) {
      while (k < plan.size() && i >= ends[k]) ++k;
      if (k < plan.size() && i == starts[k] && plan[k].kind != PartKind::Pause) {
        for (std::size_t f = 0; f < plan[k].formants.size(); ++f) tract[f].set(plan[k].formants[f], rate);
      }
      double v = air_source[i];
      for (std::size_t f = 0; f < nres; ++f) v = tract[f].step(v);
      mic[i] = v;
    }
  }

  auto body = lowpass_filter(SampledSignal(std::move(body_source), rate), cfg.body.lowpass_hz).take_samples();

  // Levels over the non-pause region.
  std::vector<unsigned char> active(total, 0);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (plan[k].kind == PartKind::Pause) continue;
    std::fill(active.begin() + static_cast<std::ptrdiff_t>(starts[k]), active.begin() + static_cast<std::ptrdiff_t>(ends[k]), 1);
  }
  auto active_rms = [&](const std::vector<double>& x) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (active[i]) {
        acc += x[i] * x[i];
        ++n;
      }
    }
    return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
  };
  const double mic_rms = active_rms(mic);
  const double body_rms = active_rms(body);
  const double mic_scale = mic_rms > 0.0 ? cfg.level_rms / mic_rms : 0.0;
  const double body_scale = body_rms > 0.0 ? cfg.level_rms * std::pow(10.0, -cfg.body.attenuation_db / 20.0) / body_rms : 0.0;
  const double air_noise = cfg.level_rms * std::pow(10.0, -cfg.air_snr_db / 20.0);

  const auto delay = static_cast<std::size_t>(std::llround(cfg.mic_delay_sec * rate));
  std::vector<double> mic_out(total, 0.0);
  std::vector<double> acc_out(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    const double clean = i >= delay ? mic[i - delay] * mic_scale : 0.0;
    mic_out[i] = clean + air_noise * gauss(rng);
    acc_out[i] = body[i] * body_scale + cfg.body.noise_floor * gauss(rng);
  }

  UtterancePair out;
  out.acc = SampledSignal(std::move(acc_out), rate);
  out.mic = SampledSignal(std::move(mic_out), rate);
  for (std::size_t k = 0; k < plan.size();) {
    if (plan[k].kind == PartKind::Pause || ends[k] == starts[k]) {
      ++k;
      continue;
    }
    TruthSegment seg;
    seg.start_sec = static_cast<double>(starts[k]) / rate;
    double f0_sum = 0.0;
    double f0_weight = 0.0;
    while (k < plan.size() && (plan[k].kind != PartKind::Pause || ends[k] == starts[k])) {
      if (plan[k].kind == PartKind::Voiced) {
        const double f0_end = plan[k].f0_end_hz > 0.0 ? plan[k].f0_end_hz : plan[k].f0_hz;
        f0_sum += 0.5 * (plan[k].f0_hz + f0_end) * plan[k].duration_sec;
        f0_weight += plan[k].duration_sec;
      }
      seg.end_sec = static_cast<double>(ends[k]) / rate;
      ++k;
    }
    seg.voiced = f0_weight > 0.0;
    seg.f0_hz = seg.voiced ? f0_sum / f0_weight : 0.0;
    out.truth.push_back(seg);
  }
  return out;
}

UtterancePair synth_utterance(const SynthConfig& cfg) {
  PlanItem item;
  item.kind = PartKind::Voiced;
  item.f0_hz = cfg.f0_hz;
  item.formants = cfg.formants;
  item.duration_sec = cfg.duration_sec;
  return synth_utterance(cfg, {item});
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("VAUTH_DATA_DIR")) return env;
  return VAUTH_DEFAULT_DATA_DIR;
}

PhonemeTable load_phoneme_table(const std::filesystem::path& path) {
  const auto file = path.empty() ? default_data_dir() / "phoneme_bank.json" : path;
  std::ifstream in(file);
  if (!in) throw InvalidConfig("cannot open phoneme table " + file.string());
  PhonemeTable table;
  try {
    const json j = json::parse(in);
    table.word_pause_sec = j.value("word_pause_sec", 0.15);
    const auto& carriers = j.at("carriers");
    auto formants_of = [](const json& arr) {
      std::vector<Formant> out;
      for (const auto& f : arr) out.push_back({f.at(0).get<double>(), f.at(1).get<double>()});
      return out;
    };
    for (const auto& p : j.at("phonemes")) {
      PhonemeEntry e;
      e.symbol = p.at("symbol").get<std::string>();
      e.group = p.at("class").get<std::string>();
      for (const auto& part : p.at("parts")) {
        PlanItem item;
        const auto kind = part.at("kind").get<std::string>();
        item.kind = kind == "voiced" ? PartKind::Voiced : kind == "unvoiced" ? PartKind::Unvoiced : PartKind::Pause;
        item.duration_sec = part.at("dur").get<double>();
        item.formants = formants_of(part.at("formants"));
        e.parts.push_back(std::move(item));
      }
      if (p.contains("carrier")) e.carrier = formants_of(carriers.at(p.at("carrier").get<std::string>()));
      table.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw InvalidConfig("malformed phoneme table " + file.string() + ": " + e.what());
  }
  return table;
}

namespace {

// One word: the phoneme parts (plus carrier vowel) with a linear f0 glide
// from f0_start to f0_end across the voiced parts. Scaled formants are
// capped below Nyquist of the default synthesis rate.
void append_word(std::vector<PlanItem>& plan, const PhonemeEntry& e, double f0_start, double f0_end,
                 double formant_scale, double carrier_sec) {
  std::vector<PlanItem> word = e.parts;
  if (!e.carrier.empty()) {
    PlanItem vowel;
    vowel.kind = PartKind::Voiced;
    vowel.formants = e.carrier;
    vowel.duration_sec = carrier_sec;
    word.push_back(vowel);
  }
  double total = 0.0;
  for (const auto& p : word) total += p.duration_sec;
  double t = 0.0;
  for (auto& p : word) {
    p.f0_hz = f0_start + (f0_end - f0_start) * t / total;
    t += p.duration_sec;
    p.f0_end_hz = f0_start + (f0_end - f0_start) * t / total;
    for (auto& f : p.formants) f.center_hz = std::min(f.center_hz * formant_scale, 0.46 * SynthConfig{}.rate_hz);
    plan.push_back(p);
  }
}

PlanItem pause(double sec) {
  PlanItem p;
  p.kind = PartKind::Pause;
  p.duration_sec = sec;
  return p;
}

}  // namespace

std::vector<UtterancePair> synth_phoneme_bank(std::uint64_t seed, const BankOptions& options) {
  const auto table = load_phoneme_table(options.table_path);
  const std::size_t n = table.entries.size();
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    grid[i] = options.f0_low_hz * std::pow(options.f0_high_hz / options.f0_low_hz, a);
  }
  auto rng = make_rng(seed, 0xba4c);
  std::shuffle(grid.begin(), grid.end(), rng);
  std::uniform_real_distribution<double> glide(-options.contour_pct / 100.0, options.contour_pct / 100.0);

  std::vector<UtterancePair> bank;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = table.entries[i];
    std::vector<PlanItem> plan;
    for (int word = 0; word < 2; ++word) {
      if (word == 1) plan.push_back(pause(table.word_pause_sec));
      const double f0a = std::clamp(grid[i] * (1.0 + glide(rng)), kF0Min, kF0Max);
      const double f0b = std::clamp(grid[i] * (1.0 + glide(rng)), kF0Min, kF0Max);
      append_word(plan, e, f0a, f0b, 1.0, 0.20);
    }
    SynthConfig cfg;
    cfg.seed = seed * 1000003ull + i;
    cfg.air_snr_db = options.air_snr_db;
    cfg.jitter_pct = options.jitter_pct;
    cfg.drift_pct = options.drift_pct;
    auto pair = synth_utterance(cfg, plan);
    pair.label = e.symbol;
    pair.group = e.group == "vowel" ? "vowels" : "consonants";
    bank.push_back(std::move(pair));
  }
  return bank;
}

std::vector<CommandUtterance> synth_command_corpus(std::uint64_t seed, std::size_t speakers, std::size_t commands) {
  const auto table = load_phoneme_table();
  std::vector<std::size_t> vowels, consonants;
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    (table.entries[i].group == "vowel" ? vowels : consonants).push_back(i);
  }

  // Command content: words of one or two syllables, shared by all speakers.
  struct Syllable {
    std::size_t onset;  // consonant index or SIZE_MAX
    std::size_t vowel;
  };
  std::vector<std::vector<std::vector<Syllable>>> content(commands);
  auto content_rng = make_rng(seed, 0xc0de);
  for (auto& words : content) {
    const auto n_words = std::uniform_int_distribution<std::size_t>(3, 5)(content_rng);
    words.resize(n_words);
    for (auto& word : words) {
      const auto n_syl = std::uniform_int_distribution<std::size_t>(1, 2)(content_rng);
      for (std::size_t s = 0; s < n_syl; ++s) {
        Syllable syl;
        syl.onset = std::bernoulli_distribution(0.7)(content_rng)
                        ? consonants[std::uniform_int_distribution<std::size_t>(0, consonants.size() - 1)(content_rng)]
                        : SIZE_MAX;
        syl.vowel = vowels[std::uniform_int_distribution<std::size_t>(0, vowels.size() - 1)(content_rng)];
        word.push_back(syl);
      }
    }
  }

  std::vector<CommandUtterance> out;
  for (std::size_t s = 0; s < speakers; ++s) {
    const double a = speakers > 1 ? static_cast<double>(s) / static_cast<double>(speakers - 1) : 0.0;
    const double base_f0 = 95.0 * std::pow(230.0 / 95.0, a);
    const double scale = 0.9 + 0.25 * a;
    for (std::size_t c = 0; c < commands; ++c) {
      auto rng = make_rng(seed, 0x10000 + s * 1000 + c);
      std::uniform_real_distribution<double> wobble(-0.12, 0.12);
      std::vector<PlanItem> plan;
      const auto& words = content[c];
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) plan.push_back(pause(std::uniform_real_distribution<double>(0.06, 0.14)(rng)));
        const double decl = 1.0 - 0.15 * static_cast<double>(w) / static_cast<double>(words.size());
        for (const auto& syl : words[w]) {
          const double f0a = std::clamp(base_f0 * decl * (1.0 + wobble(rng)), kF0Min, kF0Max);
          const double f0b = std::clamp(base_f0 * decl * (1.0 + wobble(rng)), kF0Min, kF0Max);
          PhonemeEntry e;
          if (syl.onset != SIZE_MAX) e.parts = table.entries[syl.onset].parts;
          for (auto p : table.entries[syl.vowel].parts) {
            p.duration_sec *= 0.7;
            e.parts.push_back(p);
          }
          append_word(plan, e, f0a, f0b, scale, 0.0);
        }
      }
      SynthConfig cfg;
      cfg.seed = seed * 7919ull + s * 1000 + c;
      auto pair = synth_utterance(cfg, plan);
      pair.label = "speaker" + std::to_string(s) + "_cmd" + std::to_string(c);
      pair.group = "speaker" + std::to_string(s);
      out.push_back({s, c, std::move(pair)});
    }
  }
  return out;
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::White:
      return "white";
    case NoiseKind::Periodic:
      return "periodic";
    case NoiseKind::Spike:
      return "spike";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "white") return NoiseKind::White;
  if (s == "periodic") return NoiseKind::Periodic;
  if (s == "spike") return NoiseKind::Spike;
  throw InvalidConfig("unknown noise kind '" + std::string(s) + "'");
}

double periodic_noise_period(std::uint64_t seed) {
  auto rng = make_rng(seed, 0xfe10);
  return std::uniform_real_distribution<double>(0.015, 0.100)(rng);
}

SampledSignal make_noise(NoiseKind kind, double level, double duration_sec, std::uint64_t seed, double rate_hz) {
  const auto n = static_cast<std::size_t>(std::llround(duration_sec * rate_hz));
  auto rng = make_rng(seed, 0x4015e + static_cast<std::uint64_t>(kind));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(n, 0.0);
  switch (kind) {
    case NoiseKind::White:
      for (auto& v : x) v = level * gauss(rng);
      break;
    case NoiseKind::Periodic: {
      const auto period = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(periodic_noise_period(seed) * rate_hz)));
      std::vector<double> loop(period);
      for (auto& v : loop) v = gauss(rng);
      const double r = rms_of(loop, 0, loop.size());
      for (std::size_t i = 0; i < n; ++i) x[i] = level * loop[i % period] / r;
      break;
    }
    case NoiseKind::Spike: {
      for (auto& v : x) v = 1e-4 * gauss(rng);
      const auto count = std::uniform_int_distribution<int>(1, 4)(rng);
      const auto len = std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(0.003 * rate_hz)));
      if (n <= len) break;
      std::uniform_int_distribution<std::size_t> where(0, n - len - 1);
      for (int s = 0; s < count; ++s) {
        const std::size_t at = where(rng);
        const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        for (std::size_t i = 0; i < len; ++i) {
          // Damped oscillation, the shape of a knock on the sensor.
          const double t = static_cast<double>(i) / static_cast<double>(len);
          x[at + i] += sign * level * std::exp(-4.0 * t) * std::cos(2.0 * std::numbers::pi * 3.0 * t);
        }
      }
      break;
    }
  }
  return SampledSignal(std::move(x), rate_hz);
}

void write_corpus(const std::vector<UtterancePair>& pairs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "%03zu", i);
    const std::string acc_name = std::string(stem) + "_acc.wav";
    const std::string mic_name = std::string(stem) + "_mic.wav";
    write_wav(dir / acc_name, p.acc);
    write_wav(dir / mic_name, p.mic);
    json truth = json::array();
    for (const auto& t : p.truth) {
      truth.push_back({{"start_sec", t.start_sec}, {"end_sec", t.end_sec}, {"f0_hz", t.f0_hz}, {"voiced", t.voiced}});
    }
    manifest.push_back({{"acc", acc_name}, {"mic", mic_name}, {"label", p.label}, {"group", p.group}, {"truth", truth}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InvalidConfig("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

std::vector<UtterancePair> read_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InvalidConfig("no manifest.json in " + dir.string());
  std::vector<UtterancePair> out;
  try {
    const json manifest = json::parse(in);
    for (const auto& entry : manifest) {
      UtterancePair p;
      p.acc = read_wav(dir / entry.at("acc").get<std::string>());
      p.mic = read_wav(dir / entry.at("mic").get<std::string>());
      p.label = entry.value("label", "");
      p.group = entry.value("group", "");
      for (const auto& t : entry.value("truth", json::array())) {
        p.truth.push_back({t.at("start_sec").get<double>(), t.at("end_sec").get<double>(), t.at("f0_hz").get<double>(),
                           t.at("voiced").get<bool>()});
      }
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw InvalidConfig("malformed manifest in " + dir.string() + ": " + e.what());
  }
  return out;
}

}  // namespace vauth
