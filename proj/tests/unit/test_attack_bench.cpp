#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vauth/attack_bench.hpp"
#include "vauth/errors.hpp"

using namespace vauth;
using Catch::Approx;

namespace {

std::vector<UtterancePair> small_bank(std::size_t n) {
  auto bank = synth_phoneme_bank(2);
  bank.resize(n);
  return bank;
}

AttackOptions single_thread() {
  AttackOptions o;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_CASE("tally", "[attack_bench]") {
  const auto r = AttackReport::tally(AttackScenario::Replay, 200, 3, "x");
  CHECK(r.rejection_rate == Approx(0.985));
  CHECK(std::isnan(AttackReport::tally(AttackScenario::Mangled, 0, 0).rejection_rate));
}

TEST_CASE("mangled attack without trials", "[attack_bench]") {
  CHECK(run_mangled_attack(small_bank(2), testutil::bank_model(), {}).empty());
  const auto r = run_mangled_attack({}, testutil::bank_model(), {15});
  REQUIRE(r.size() == 1);
  CHECK(r[0].trials == 0);
  CHECK(std::isnan(r[0].rejection_rate));
}

TEST_CASE("mangled voice is rejected, unmodified voice accepted", "[attack_bench]") {
  const auto bank = small_bank(4);
  const auto mangled = run_mangled_attack(bank, testutil::bank_model(), {15, 30}, single_thread());
  REQUIRE(mangled.size() == 2);
  CHECK(mangled[0].detail == "bands=15");
  for (const auto& r : mangled) {
    CHECK(r.scenario == AttackScenario::Mangled);
    CHECK(r.trials == 4);
    CHECK(r.accepted == 0);
  }
  const auto control = run_control_arm(bank, testutil::bank_model(), single_thread());
  CHECK(control.scenario == AttackScenario::Control);
  CHECK(control.accepted == 4);
  CHECK(control.rejection_rate == 0.0);
}

TEST_CASE("replay and impersonation pairings", "[attack_bench]") {
  const auto corpus = synth_command_corpus(1, 3, 2);
  const auto replay = run_replay_attack(corpus, testutil::bank_model());
  CHECK(replay.scenario == AttackScenario::Replay);
  CHECK(replay.trials == 6);
  CHECK(replay.accepted == 0);
  const auto imp = run_impersonation_attack(corpus, testutil::bank_model());
  CHECK(imp.scenario == AttackScenario::Impersonation);
  CHECK(imp.trials == 12);
  CHECK(imp.accepted == 0);

  CHECK_THROWS_AS(run_replay_attack(synth_command_corpus(1, 2, 1), testutil::bank_model()), InputError);
}

TEST_CASE("induced accelerometer energy", "[attack_bench]") {
  std::vector<SampledSignal> mics;
  for (const auto& p : small_bank(3)) mics.push_back(p.mic);
  for (auto kind : {NoiseKind::White, NoiseKind::Periodic, NoiseKind::Spike}) {
    const auto r = run_injection_attack({0.0, 0.05, 0.3}, mics, testutil::bank_model(), kind, 3);
    REQUIRE(r.size() == 3);
    for (const auto& x : r) {
      CHECK(x.scenario == AttackScenario::AcousticInjection);
      CHECK(x.trials == 3);
      CHECK(x.accepted == 0);
    }
  }
}

TEST_CASE("monotonicity trials are reproducible", "[attack_bench]") {
  const auto bank = small_bank(8);
  const auto a = injection_monotonicity(bank, testutil::bank_model(), 10, 5, single_thread());
  const auto b = injection_monotonicity(bank, testutil::bank_model(), 10, 5, single_thread());
  CHECK(a.trials == 10);
  CHECK(a.violations == 0);
  CHECK(a.baseline_rejects == b.baseline_rejects);
  CHECK(a.violations == b.violations);
  CHECK_THROWS_AS(injection_monotonicity(small_bank(1), testutil::bank_model(), 1, 1), InputError);
}

TEST_CASE("FP decay against the exact tail and the bound", "[attack_bench][oracle]") {
  const auto& o = testutil::oracles()["hoeffding"];
  std::vector<std::size_t> ns;
  for (const auto& row : o) ns.push_back(row["n"].get<std::size_t>());
  const auto rows = fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.4, ns, 40000, 9);
  REQUIRE(rows.size() == o.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const double exact = o[k]["exact_fp"].get<double>();
    INFO("n = " << r.n);
    CHECK(r.n == ns[k]);
    CHECK(r.hoeffding_bound == Approx(o[k]["bound"].get<double>()).margin(1e-12));
    CHECK(r.empirical_fp <= r.hoeffding_bound + 3.0 * r.std_error);
    CHECK(std::abs(r.empirical_fp - exact) <= 4.0 * std::sqrt(exact * (1.0 - exact) / 40000.0) + 1e-4);
    if (k > 0) CHECK(r.empirical_fp <= rows[k - 1].empirical_fp);
  }
  CHECK(rows.front().empirical_fp == Approx(0.2).margin(0.01));

  const auto again = fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.4, ns, 40000, 9);
  CHECK(again.front().empirical_fp == rows.front().empirical_fp);
}

TEST_CASE("the bound needs a threshold above the mean", "[attack_bench]") {
  CHECK_THROWS_AS(fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.25, {1}, 10), BoundInapplicable);
  CHECK_THROWS_AS(fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.1, {1}, 10), BoundInapplicable);
  CHECK_THROWS_AS(fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.4, {0}, 10), InputError);
}

TEST_CASE("report formatting", "[attack_bench]") {
  const std::vector<AttackReport> reports = {AttackReport::tally(AttackScenario::Replay, 10, 1),
                                             AttackReport::tally(AttackScenario::Mangled, 0, 0, "bands=15")};
  const auto j = nlohmann::json::parse(attack_reports_to_json(reports));
  REQUIRE(j.size() == 2);
  CHECK(j[0]["scenario"] == std::string(to_string(AttackScenario::Replay)));
  CHECK(j[0]["trials"] == 10);
  CHECK(j[0]["accepted"] == 1);
  CHECK(j[0]["rejection_rate"].get<double>() == Approx(0.9));
  CHECK(j[1]["rejection_rate"].is_null());
  CHECK(j[1]["detail"] == "bands=15");

  const auto table = format_attack_table(reports);
  CHECK(table.find("90.0") != std::string::npos);
  CHECK(table.find("bands=15") != std::string::npos);

  const auto csv = fp_decay_csv({{1, 0.2, 0.95, 0.001}, {2, 0.08, 0.91, 0.0005}});
  CHECK(csv == "n,empirical_fp,hoeffding_bound,std_error\n1,0.2,0.95,0.001\n2,0.08,0.91,0.0005\n");
}
