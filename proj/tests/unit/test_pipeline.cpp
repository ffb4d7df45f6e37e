#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vauth/errors.hpp"
#include "vauth/pipeline.hpp"
#include "vauth/synth.hpp"

using namespace vauth;

namespace {

const std::vector<UtterancePair>& test_bank() {
  static const auto bank = synth_phoneme_bank(2);
  return bank;
}

}  // namespace

TEST_CASE("a genuine pair matches", "[pipeline]") {
  const auto& p = test_bank()[0];
  const auto r = match(p.acc, p.mic, testutil::bank_model(), PipelineConfig{});
  CHECK(r.is_match);
  CHECK_FALSE(r.reason.has_value());
  REQUIRE(r.decision.has_value());
  CHECK(r.decision->is_match);
  CHECK_FALSE(r.cleaned_mic.is_empty());
  CHECK(r.cleaned_mic.rate_hz() == 8000.0);
  CHECK(r.config_digest == digest_hex(config_digest(PipelineConfig{})));
  CHECK_FALSE(r.stage_timings_ms.empty());
}

TEST_CASE("sensor noise alone on the accelerometer has no envelope", "[pipeline]") {
  const auto& p = test_bank()[3];
  const auto acc = make_noise(NoiseKind::White, 1e-4, p.mic.duration_sec(), 7);
  const auto r = match(acc, p.mic, testutil::bank_model(), PipelineConfig{});
  CHECK_FALSE(r.is_match);
  REQUIRE(r.reason.has_value());
  CHECK(*r.reason == NoMatchReason::NoEnvelope);
  CHECK(r.cleaned_mic.is_empty());
  CHECK_FALSE(r.decision.has_value());
}

TEST_CASE("cross pairs do not match", "[pipeline]") {
  const auto& bank = test_bank();
  std::size_t matched = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto r = match(bank[i].acc, bank[(i + 7) % bank.size()].mic, testutil::bank_model(), PipelineConfig{});
    matched += r.is_match;
    if (!r.is_match) {
      CHECK(r.reason.has_value());
      CHECK(r.cleaned_mic.is_empty());
    }
  }
  CHECK(matched == 0);
}

TEST_CASE("matching is deterministic", "[pipeline][property]") {
  const auto& bank = test_bank();
  for (std::size_t i : {1u, 5u, 20u}) {
    const auto a = match(bank[i].acc, bank[i].mic, testutil::bank_model(), PipelineConfig{});
    const auto b = match(bank[i].acc, bank[i].mic, testutil::bank_model(), PipelineConfig{});
    CHECK(same_outcome(a, b));
    CHECK(a.cleaned_mic == b.cleaned_mic);
    CHECK(a.alignment_shift == b.alignment_shift);
  }
}

TEST_CASE("cleaned mic is zero outside kept segments", "[pipeline][property]") {
  const auto& bank = test_bank();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto r = match(bank[i].acc, bank[i].mic, testutil::bank_model(), PipelineConfig{});
    if (!r.is_match) continue;
    const auto rate = r.cleaned_mic.rate_hz();
    std::vector<unsigned char> kept(r.cleaned_mic.size(), 0);
    for (const auto& s : r.segments) {
      if (s.verdict != Verdict::Kept) continue;
      const auto b = static_cast<std::size_t>(std::llround(s.start_sec * rate));
      const auto e = std::min(kept.size(), static_cast<std::size_t>(std::llround(s.end_sec * rate)));
      for (std::size_t k = b; k < e; ++k) kept[k] = 1;
    }
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (!kept[k]) REQUIRE(r.cleaned_mic[k] == 0.0);
    }
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("short or silent input is rejected", "[pipeline]") {
  const auto& p = test_bank()[0];
  const SampledSignal short_acc(testutil::gaussian(400, 1), 16000.0);
  CHECK_THROWS_AS(match(short_acc, p.mic, testutil::bank_model(), PipelineConfig{}), InputError);
  const SampledSignal silent(std::vector<double>(p.mic.size(), 0.0), p.mic.rate_hz());
  CHECK_THROWS_AS(match(p.acc, silent, testutil::bank_model(), PipelineConfig{}), InputError);
  CHECK_THROWS_AS(match(silent, p.mic, testutil::bank_model(), PipelineConfig{}), InputError);
}

TEST_CASE("threshold mode needs no model", "[pipeline]") {
  PipelineConfig cfg;
  cfg.mode = DecisionMode::Threshold;
  const auto& p = test_bank()[2];
  const auto r = match(p.acc, p.mic, ClassifierModel{}, cfg);
  REQUIRE(r.decision.has_value());
  CHECK(r.is_match == (r.decision->max_xcorr > cfg.decision_threshold));
}

TEST_CASE("batch_match pairs acc i with mic j", "[pipeline]") {
  const auto& bank = test_bank();
  std::vector<SampledSignal> accs, mics;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < 4; ++i) {
    accs.push_back(bank[i].acc);
    mics.push_back(bank[i].mic);
    groups.push_back(bank[i].group);
  }
  const auto r = batch_match(accs, mics, testutil::bank_model(), PipelineConfig{}, groups, 2);
  REQUIRE(r.cells.size() == 16);
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    CHECK(r.cells[k].acc_id == k / 4);
    CHECK(r.cells[k].mic_id == k % 4);
    CHECK(r.cells[k].genuine == (k / 4 == k % 4));
  }
  const auto& all = r.table.back();
  CHECK(all.acc_group == "all");
  CHECK(all.genuine_trials == 4);
  CHECK(all.false_trials == 12);
  CHECK(r.tp_rate == all.tp_rate());
  CHECK(r.fp_rate == all.fp_rate());
  CHECK_FALSE(r.format_table().empty());

  const auto single = batch_match(accs, mics, testutil::bank_model(), PipelineConfig{}, groups, 1);
  for (std::size_t k = 0; k < r.cells.size(); ++k) CHECK(single.cells[k].matched == r.cells[k].matched);

  CHECK_THROWS_AS(batch_match(accs, mics, testutil::bank_model(), PipelineConfig{}, {"vowel"}), InputError);
}

TEST_CASE("batch_match on an empty corpus", "[pipeline]") {
  const auto r = batch_match({}, {}, testutil::bank_model(), PipelineConfig{});
  CHECK(r.cells.empty());
  CHECK(std::isnan(r.tp_rate));
  CHECK(std::isnan(r.fp_rate));
}

TEST_CASE("no-match reasons round-trip", "[pipeline]") {
  for (auto r : {NoMatchReason::NoEnvelope, NoMatchReason::NoSurvivingSegments, NoMatchReason::ClassifierReject}) {
    CHECK(parse_no_match_reason(to_string(r)) == r);
  }
}
