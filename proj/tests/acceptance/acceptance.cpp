// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Data: the classifier is trained on phoneme bank seed 1 and every other
// check uses held-out material (bank seed 2, command corpora 1 and 2).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>
#include <unistd.h>

#include "vauth/attack_bench.hpp"
#include "vauth/decision.hpp"
#include "vauth/errors.hpp"
#include "vauth/gateway.hpp"
#include "vauth/pipeline.hpp"
#include "vauth/signal_core.hpp"
#include "vauth/synth.hpp"
#include "vauth/wav.hpp"

using namespace vauth;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& name, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool matched(const SampledSignal& acc, const SampledSignal& mic, const ClassifierModel& model,
             const PipelineConfig& cfg) {
  try {
    return match(acc, mic, model, cfg).is_match;
  } catch (const InputError&) {
    return false;
  }
}

struct Corpus {
  std::vector<SampledSignal> accs, mics;
  std::vector<std::string> groups;
};

Corpus split(const std::vector<UtterancePair>& pairs) {
  Corpus c;
  for (const auto& p : pairs) {
    c.accs.push_back(p.acc);
    c.mics.push_back(p.mic);
    c.groups.push_back(p.group);
  }
  return c;
}

std::vector<UtterancePair> pairs_of(const std::vector<CommandUtterance>& corpus) {
  std::vector<UtterancePair> out;
  for (const auto& u : corpus) out.push_back(u.pair);
  return out;
}

// 1
ClassifierModel phoneme_bank(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const auto train = split(synth_phoneme_bank(1));
  auto model = train_from_recordings(train.accs, train.mics, cfg, 5);
  const auto test = split(synth_phoneme_bank(2));
  const auto result = batch_match(test.accs, test.mics, model, cfg, test.groups);
  const double runtime = seconds_since(t0);
  const bool ok = result.tp_rate >= 0.94 && result.fp_rate <= 0.01 && runtime < 300.0;
  verdict(1, ok, "phoneme bank",
          fmt::format("TP={:.1f}% (>=94) FP={:.2f}% (<=1) runtime={:.0f}s (<300)", 100 * result.tp_rate,
                      100 * result.fp_rate, runtime));
  return model;
}

// 2
void idle(const ClassifierModel& model, const PipelineConfig& cfg, const std::vector<CommandUtterance>& commands) {
  std::mt19937_64 rng(20);
  std::uniform_int_distribution<std::size_t> pick(0, commands.size() - 1);
  std::uniform_real_distribution<double> log_level(std::log(1e-3), std::log(0.3));
  std::size_t matches = 0, per_kind[4] = {0, 0, 0, 0};
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& mic = commands[pick(rng)].pair.mic;
    const int kind = static_cast<int>(t % 4);
    SampledSignal acc;
    if (kind == 0) {
      acc = make_noise(NoiseKind::White, 1e-4, mic.duration_sec(), rng(), mic.rate_hz());  // sensor floor only
    } else {
      const auto nk = kind == 1 ? NoiseKind::White : kind == 2 ? NoiseKind::Periodic : NoiseKind::Spike;
      acc = make_noise(nk, std::exp(log_level(rng)), mic.duration_sec(), rng(), mic.rate_hz());
    }
    if (matched(acc, mic, model, cfg)) {
      ++matches;
      ++per_kind[kind];
    }
  }
  verdict(2, matches == 0, "idle zero-FP",
          fmt::format("{} matches in {} trials (silent {}, white {}, periodic {}, spike {})", matches, trials,
                      per_kind[0], per_kind[1], per_kind[2], per_kind[3]));
}

// 3
void monotonicity(const ClassifierModel& model, const PipelineConfig& cfg,
                  const std::vector<CommandUtterance>& commands) {
  AttackOptions opts;
  opts.pipeline = cfg;
  const auto r = injection_monotonicity(pairs_of(commands), model, 500, 30, opts);
  verdict(3, r.violations == 0 && r.trials == 500, "injection monotonicity",
          fmt::format("{} violations in {} trials ({} baseline rejects)", r.violations, r.trials,
                      r.baseline_rejects));
}

// 4
void hoeffding() {
  const auto rows = fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.4, {1, 2, 4, 8, 16}, 100000, 40);
  bool ok = rows.size() == 5;
  std::string detail;
  for (const auto& r : rows) {
    ok = ok && r.empirical_fp <= r.hoeffding_bound + 3.0 * r.std_error;
    detail += fmt::format("n={} fp={:.5f} bound={:.4f}; ", r.n, r.empirical_fp, r.hoeffding_bound);
  }
  ok = ok && rows.back().empirical_fp < rows.front().empirical_fp;
  verdict(4, ok, "Hoeffding decay", detail + "fp(16) < fp(1)");
}

// 5
void mangled(const ClassifierModel& model, const PipelineConfig& cfg, const std::vector<CommandUtterance>& commands,
             const std::vector<CommandUtterance>& reference) {
  AttackOptions opts;
  opts.pipeline = cfg;
  const auto corpus = pairs_of(commands);
  const auto reports = run_mangled_attack(corpus, model, {15, 30}, opts);
  const auto control = run_control_arm(corpus, model, opts);
  // Corpus TP rate from an independent realization of the command corpus.
  std::size_t tp = 0;
  for (const auto& u : reference) tp += matched(u.pair.acc, u.pair.mic, model, cfg);
  const double tp_rate = static_cast<double>(tp) / static_cast<double>(reference.size());
  const double control_rate = 1.0 - control.rejection_rate;
  bool ok = std::abs(control_rate - tp_rate) <= 0.03;
  std::string detail;
  for (const auto& r : reports) {
    ok = ok && r.rejection_rate >= 0.95;
    detail += fmt::format("{} rejected {:.1f}% (>=95); ", r.detail, 100 * r.rejection_rate);
  }
  verdict(5, ok, "mangled voice",
          detail + fmt::format("control accepted {:.1f}% vs corpus TP {:.1f}% (+-3)", 100 * control_rate,
                               100 * tp_rate));
}

// 6
void replay(const ClassifierModel& model, const PipelineConfig& cfg, const std::vector<CommandUtterance>& commands) {
  AttackOptions opts;
  opts.pipeline = cfg;
  const auto r = run_replay_attack(commands, model, opts);
  const auto i = run_impersonation_attack(commands, model, opts);
  const bool ok = r.trials >= 500 && i.trials >= 500 && r.rejection_rate >= 0.98 && i.rejection_rate >= 0.98;
  verdict(6, ok, "replay/impersonation",
          fmt::format("replay {:.2f}% of {} rejected, impersonation {:.2f}% of {} rejected (>=98, >=500 trials)",
                      100 * r.rejection_rate, r.trials, 100 * i.rejection_rate, i.trials));
}

// 7
void feature_vector() {
  std::mt19937_64 rng(70);
  std::uniform_int_distribution<std::size_t> len(2, 3000);
  std::normal_distribution<double> gauss;
  std::size_t fails = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> f(len(rng)), g(len(rng));
    for (auto& v : f) v = gauss(rng);
    for (auto& v : g) v = gauss(rng);
    const auto fv = build_feature_vector(xcorr_normalized(SampledSignal(f, 8000.0), SampledSignal(g, 8000.0)));
    std::size_t arg = 0;
    for (std::size_t k = 1; k < fv.values.size(); ++k) {
      if (std::abs(fv.values[k]) > std::abs(fv.values[arg])) arg = k;
    }
    if (fv.values.size() != 1001 || arg + 1 != 501) ++fails;
  }
  verdict(7, fails == 0, "feature vector", fmt::format("{} failures in 1000 (length 1001, argmax at 501)", fails));
}

// 8
void alignment() {
  std::mt19937_64 rng(80);
  std::uniform_int_distribution<std::size_t> len(1000, 8000);
  std::uniform_real_distribution<double> snr_db(20.0, 40.0);
  std::normal_distribution<double> gauss;
  std::size_t fails = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = len(rng);
    const auto max_shift = static_cast<std::ptrdiff_t>(n / 4);
    const auto shift = std::uniform_int_distribution<std::ptrdiff_t>(-max_shift, max_shift)(rng);
    std::vector<double> base(n + 2 * static_cast<std::size_t>(max_shift));
    for (auto& v : base) v = gauss(rng);
    const double noise = std::pow(10.0, -snr_db(rng) / 20.0);
    std::vector<double> f(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = base[i + static_cast<std::size_t>(max_shift)] + noise * gauss(rng);
      g[i] = base[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + max_shift - shift)] + noise * gauss(rng);
    }
    // g[i] = base[i + m - shift], so g lags f by `shift`.
    if (align(SampledSignal(f, 8000.0), SampledSignal(g, 8000.0)).shift != shift) ++fails;
  }
  verdict(8, fails == 0, "alignment", fmt::format("{} failures in 1000 (SNR 20-40 dB)", fails));
}

// 9
void latency(const ClassifierModel& model, const PipelineConfig& cfg, const std::vector<CommandUtterance>& commands) {
  std::vector<double> acc, mic;
  for (const auto& u : commands) {
    if (u.speaker != 0) continue;
    acc.insert(acc.end(), u.pair.acc.vector().begin(), u.pair.acc.vector().end());
    mic.insert(mic.end(), u.pair.mic.vector().begin(), u.pair.mic.vector().end());
  }
  const double rate = commands.front().pair.acc.rate_hz();
  const auto n = static_cast<std::size_t>(10.0 * rate);
  acc.resize(n, 0.0);
  mic.resize(n, 0.0);
  const auto acc8 = resample(SampledSignal(acc, rate), 8000.0);
  const auto mic8 = resample(SampledSignal(mic, rate), 8000.0);
  std::vector<double> times;
  bool is_match = false;
  for (int run = 0; run < 5; ++run) {
    const auto t0 = Clock::now();
    is_match = match(acc8, mic8, model, cfg).is_match;
    times.push_back(seconds_since(t0));
  }
  std::sort(times.begin(), times.end());
  verdict(9, times[2] <= 1.0, "latency",
          fmt::format("median {:.0f} ms over 5 runs of a {:.1f} s pair at 8 kHz (<=1000; match={})",
                      1000 * times[2], acc8.duration_sec(), is_match));
}

// 10
void gateway(const ClassifierModel& model, const PipelineConfig& cfg, const std::vector<CommandUtterance>& commands) {
  GatewayOptions opts;
  opts.config = cfg;
  GatewayServer server(model, opts);
  server.start();
  const std::string addr = fmt::format("127.0.0.1:{}", server.port());

  std::mt19937_64 rng(100);
  std::uniform_int_distribution<std::size_t> pick(0, commands.size() - 1);
  auto session = [&](std::size_t i, std::size_t j, const std::string& id) {
    const auto acc = quantize(commands[i].pair.acc, SampleEncoding::F32Le);
    const auto mic = quantize(commands[j].pair.mic, SampleEncoding::F32Le);
    const auto direct = match(acc, mic, model, cfg);
    ClientOptions co;
    co.session_id = id;
    return same_outcome(direct, client_match(addr, acc, mic, co));
  };

  std::size_t mismatches = 0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t i = pick(rng);
    const std::size_t j = s % 2 == 0 ? i : pick(rng);  // half genuine
    if (!session(i, j, fmt::format("seq{}", s))) ++mismatches;
  }

  std::atomic<std::size_t> concurrent_bad{0};
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < 8; ++k) {
    const std::size_t i = pick(rng), j = k % 2 == 0 ? i : pick(rng);
    threads.emplace_back([&, i, j, k] {
      try {
        if (!session(i, j, fmt::format("par{}", k))) ++concurrent_bad;
      } catch (const std::exception&) {
        ++concurrent_bad;
      }
    });
  }
  for (auto& t : threads) t.join();
  server.stop();
  verdict(10, mismatches == 0 && concurrent_bad == 0, "gateway equivalence",
          fmt::format("{} of 100 sequential sessions differ, {} of 8 concurrent sessions wrong", mismatches,
                      concurrent_bad.load()));
}

// 11
void round_trip(const ClassifierModel& model) {
  const auto path = std::filesystem::temp_directory_path() / fmt::format("vauth_accept_{}.model", ::getpid());
  save_model(model, path);
  const auto loaded = load_model(path);
  std::filesystem::remove(path);
  std::mt19937_64 rng(110);
  std::normal_distribution<double> gauss(0.0, 0.3);
  std::size_t diffs = 0;
  for (int t = 0; t < 1000; ++t) {
    FeatureVector fv;
    for (auto& v : fv.values) v = gauss(rng);
    if (!(classify(model, fv) == classify(loaded, fv))) ++diffs;
  }
  verdict(11, diffs == 0 && loaded == model, "model round-trip", fmt::format("{} of 1000 decisions differ", diffs));
}

}  // namespace

int main() {
  const PipelineConfig cfg;
  try {
    const auto model = phoneme_bank(cfg);
    const auto commands = synth_command_corpus(1);
    const auto reference = synth_command_corpus(2);
    idle(model, cfg, commands);
    monotonicity(model, cfg, commands);
    hoeffding();
    mangled(model, cfg, commands, reference);
    replay(model, cfg, commands);
    feature_vector();
    alignment();
    latency(model, cfg, commands);
    gateway(model, cfg, commands);
    round_trip(model);
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
