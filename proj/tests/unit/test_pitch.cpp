#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vauth/errors.hpp"
#include "vauth/pitch.hpp"
#include "vauth/signal_core.hpp"
#include "vauth/synth.hpp"

using namespace vauth;
using Catch::Approx;

namespace {

// Body-channel vowel at a steady f0, 8 kHz.
SampledSignal steady_vowel(double f0, double duration = 0.2) {
  SynthConfig cfg;
  cfg.f0_hz = f0;
  cfg.duration_sec = duration;
  cfg.jitter_pct = 0.0;
  cfg.drift_pct = 0.0;
  cfg.edge_silence_sec = 0.0;
  return resample(synth_utterance(cfg).acc, 8000.0);
}

GlottalPulseTrain train_at(double f0, double duration = 0.2) {
  std::vector<double> t;
  for (std::size_t k = 0; static_cast<double>(k) / f0 < duration; ++k) t.push_back(static_cast<double>(k) / f0);
  return make_pulse_train(std::move(t));
}

}  // namespace

TEST_CASE("pulse train at 125 Hz has an 8 ms cycle", "[pitch]") {
  const auto t = extract_glottal_pulses(steady_vowel(125.0), 60.0, 500.0);
  CHECK(t.mean_cycle_sec == Approx(0.008).epsilon(0.05));
  CHECK(t.longest_run_sec > 0.1);
}

TEST_CASE("white noise has no voiced run", "[pitch]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = extract_glottal_pulses(SampledSignal(testutil::gaussian(1600, seed), 8000.0), 60.0, 500.0);
    REQUIRE(t.longest_run_sec < 0.02);
  }
}

TEST_CASE("silence has no pulses", "[pitch]") {
  CHECK(extract_glottal_pulses(SampledSignal(std::vector<double>(1600, 0.0), 8000.0), 60.0, 500.0).empty());
}

TEST_CASE("segments shorter than the analysis window are rejected", "[pitch]") {
  CHECK_THROWS_AS(track_periodicity(SampledSignal(std::vector<double>(100, 0.1), 8000.0), 60.0, 500.0),
                  SegmentTooShort);
}

TEST_CASE("extracted f0 tracks the synthesized f0", "[pitch][property]") {
  for (double f0 = 80.0; f0 <= 333.0; f0 *= 1.07) {
    const auto t = extract_glottal_pulses(steady_vowel(f0), 60.0, 500.0);
    INFO("f0 = " << f0);
    REQUIRE(t.mean_f0_hz() >= 0.95 * f0);
    REQUIRE(t.mean_f0_hz() <= 1.05 * f0);
  }
}

TEST_CASE("extraction is shift-invariant", "[pitch][property]") {
  const auto x = steady_vowel(140.0, 0.3);
  const auto base = extract_glottal_pulses(x, 60.0, 500.0);
  for (std::size_t delay : {1u, 17u, 80u, 333u}) {
    std::vector<double> shifted(delay, 0.0);
    shifted.insert(shifted.end(), x.vector().begin(), x.vector().end());
    const auto t = extract_glottal_pulses(SampledSignal(shifted, 8000.0), 60.0, 500.0);
    const double d = static_cast<double>(delay) / 8000.0;
    const double tol = 1.5 / 8000.0;
    // Compare the pulses both trains share, away from the edges.
    std::size_t compared = 0;
    for (double p : base.pulse_times) {
      if (p < 0.05 || p > 0.25) continue;
      double nearest = 1e9;
      for (double q : t.pulse_times) nearest = std::min(nearest, std::abs(q - (p + d)));
      REQUIRE(nearest <= tol);
      ++compared;
    }
    CHECK(compared > 20);
    CHECK(t.mean_cycle_sec == Approx(base.mean_cycle_sec).margin(tol));
  }
}

TEST_CASE("pitch_distance examples", "[pitch]") {
  const auto a = train_at(100.0);
  CHECK(pitch_distance(a, a) == 0.0);
  CHECK(pitch_distance(a, train_at(200.0)) == Approx(0.5));
  CHECK(pitch_distance(train_at(120.0), train_at(126.0)) == Approx(0.047).margin(0.01));
  CHECK_THROWS_AS(pitch_distance(a, GlottalPulseTrain{}), NoPitch);
}

TEST_CASE("pitch_distance matches the reference association", "[pitch][oracle]") {
  const auto& o = testutil::oracles()["pitch_distance"];
  const auto a = make_pulse_train(testutil::as_vector(o["a"]));
  const auto b = make_pulse_train(testutil::as_vector(o["b"]));
  CHECK(pitch_distance(a, b) == Approx(o["distance"].get<double>()).margin(1e-12));
}

TEST_CASE("pitch_distance is symmetric and zero only for equal cycles", "[pitch][property]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> f0(80.0, 333.0);
  std::uniform_real_distribution<double> jitter(-0.0004, 0.0004);
  for (int t = 0; t < 200; ++t) {
    const double fa = f0(rng);
    std::vector<double> pa, pb;
    double ta = 0.0, tb = 0.0;
    const double fb = t % 4 == 0 ? fa : f0(rng);
    while (ta < 0.3) {
      pa.push_back(ta);
      ta += 1.0 / fa + jitter(rng);
    }
    while (tb < 0.3) {
      pb.push_back(tb);
      tb += 1.0 / fb + jitter(rng);
    }
    const auto a = make_pulse_train(pa);
    const auto b = make_pulse_train(pb);
    const double ab = pitch_distance(a, b);
    REQUIRE(ab == Approx(pitch_distance(b, a)).margin(1e-15));
    REQUIRE(ab >= 0.0);
    REQUIRE(pitch_distance(a, a) == 0.0);
    if (pa != pb) REQUIRE(ab > 0.0);
  }
}

TEST_CASE("cycles straddling a gap are outside every run", "[pitch]") {
  GlottalPulseTrain t;
  t.pulse_times = {0.0, 0.01, 0.02, 0.2, 0.21};
  t.cycles = {0.01, 0.01, 0.18, 0.01};
  t.run_ends = {3, 5};
  CHECK(t.cycle_in_run(0));
  CHECK(t.cycle_in_run(1));
  CHECK_FALSE(t.cycle_in_run(2));
  CHECK(t.cycle_in_run(3));
  CHECK_FALSE(t.cycle_in_run(4));
}
