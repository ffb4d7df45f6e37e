#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "support.hpp"
#include "vauth/errors.hpp"
#include "vauth/mfcc.hpp"
#include "vauth/signal_core.hpp"
#include "vauth/synth.hpp"

using namespace vauth;
using Catch::Approx;

namespace {

SampledSignal speech(std::size_t index = 0) {
  static const auto bank = synth_phoneme_bank(2);
  return bank[index].mic;
}

}  // namespace

TEST_CASE("frame count", "[mfcc]") {
  const MfccParams p;
  for (std::size_t len : {512u, 513u, 767u, 768u, 16000u}) {
    const auto m = mfcc_extract(SampledSignal(testutil::gaussian(len, len), 16000.0), p);
    CHECK(m.frames == (len - 512) / 256 + 1);
    CHECK(m.coeffs == 30);
    CHECK(m.data.size() == m.frames * m.coeffs);
  }
  CHECK_THROWS_AS(mfcc_extract(SampledSignal(testutil::gaussian(511, 1), 16000.0), p), SignalTooShort);
}

TEST_CASE("silence maps to zero coefficients", "[mfcc]") {
  const auto m = mfcc_extract(SampledSignal(std::vector<double>(4096, 0.0), 16000.0), MfccParams{});
  for (double v : m.data) REQUIRE(v == 0.0);
}

TEST_CASE("1 kHz tone matches the reference", "[mfcc][oracle]") {
  const auto& o = testutil::oracles()["mfcc_tone"];
  const auto x = testutil::sine(1000.0, 16000.0, 2048, 0.5);
  const auto m = mfcc_extract(SampledSignal(x, 16000.0), MfccParams{});
  REQUIRE(m.frames == o["frames"].get<std::size_t>());
  for (std::size_t f = 0; f < m.frames; ++f) {
    const auto ref = testutil::as_vector(o["coeffs"][f]);
    REQUIRE(m.coeffs == ref.size());
    for (std::size_t c = 0; c < m.coeffs; ++c) REQUIRE(m.at(f, c) == Approx(ref[c]).margin(1e-6));
  }

  // The band with most weight at 1 kHz spans the reference edges.
  const auto fb = mel_filterbank(MfccParams{});
  const std::size_t bin = 32;  // 1000 Hz at 512 points, 16 kHz
  std::size_t best = 0;
  for (std::size_t b = 1; b < fb.size(); ++b) {
    if (fb[b][bin] > fb[best][bin]) best = b;
  }
  CHECK(best == o["peak_band"].get<std::size_t>());
  for (std::size_t k = 0; k < fb[best].size(); ++k) {
    if (fb[best][k] == 0.0) continue;
    const double f = static_cast<double>(k) * 16000.0 / 512.0;
    CHECK(f > o["peak_band_lo_hz"].get<double>());
    CHECK(f < o["peak_band_hi_hz"].get<double>());
  }
}

TEST_CASE("filterbank shape", "[mfcc]") {
  MfccParams p;
  p.n_mel_bands = 15;
  const auto fb = mel_filterbank(p);
  REQUIRE(fb.size() == 15);
  for (const auto& row : fb) {
    CHECK(row.size() == 257);
    CHECK(*std::max_element(row.begin(), row.end()) <= 1.0);
    CHECK(*std::min_element(row.begin(), row.end()) >= 0.0);
  }
}

TEST_CASE("reconstruction keeps more of the envelope with more bands", "[mfcc]") {
  const auto x = speech(0);
  MfccParams p30, p15;
  p15.n_mel_bands = 15;
  const auto r30 = mfcc_invert(mfcc_extract(x, p30), p30);
  const auto r15 = mfcc_invert(mfcc_extract(x, p15), p15);
  CHECK(r30.rate_hz() == x.rate_hz());
  const double c30 = envelope_correlation(x, r30, p30);
  const double c15 = envelope_correlation(x, r15, p15);
  CHECK(c30 >= 0.8);
  CHECK(c15 < c30);
  CHECK(envelope_correlation(x, x, p30) == Approx(1.0));
}

TEST_CASE("zero coefficients invert to near silence", "[mfcc]") {
  const MfccParams p;
  MfccMatrix m;
  m.frames = 20;
  m.coeffs = 30;
  m.data.assign(m.frames * m.coeffs, 0.0);
  const auto y = mfcc_invert(m, p);
  CHECK(y.size() >= 512);
  CHECK(rms(y.samples()) < 1e-4);
}

TEST_CASE("invalid parameters", "[mfcc]") {
  MfccParams p;
  p.hop_samples = 1024;
  CHECK_THROWS_AS(validate(p), InvalidConfig);
  p = MfccParams{};
  p.n_mel_bands = 0;
  CHECK_THROWS_AS(validate(p), InvalidConfig);
  p = MfccParams{};
  p.n_coeffs = 0;
  CHECK_THROWS_AS(validate(p), InvalidConfig);
  p = MfccParams{};
  p.rate_hz = 0.0;
  CHECK_THROWS_AS(validate(p), InvalidConfig);
  CHECK_NOTHROW(validate(MfccParams{}));
}

TEST_CASE("extraction and inversion are deterministic", "[mfcc][property]") {
  const auto x = speech(5);
  const MfccParams p;
  const auto a = mfcc_extract(x, p);
  CHECK(a.data == mfcc_extract(x, p).data);
  CHECK(mfcc_invert(a, p, 8) == mfcc_invert(a, p, 8));
}
