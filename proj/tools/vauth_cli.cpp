// vauth command-line front end.
//
// Exit codes: 0 success (match for `match`), 1 no match, 2 usage or runtime error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vauth/attack_bench.hpp"
#include "vauth/config.hpp"
#include "vauth/decision.hpp"
#include "vauth/errors.hpp"
#include "vauth/gateway.hpp"
#include "vauth/pipeline.hpp"
#include "vauth/report_json.hpp"
#include "vauth/synth.hpp"
#include "vauth/wav.hpp"

namespace fs = std::filesystem;
using namespace vauth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoMatch = 1;
constexpr int kExitError = 2;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  bool verbose = false;
  std::optional<double> envelope_threshold;
  std::optional<double> pitch_distance_max;
  std::optional<double> segment_corr_gate;
  std::optional<double> decision_threshold;
  std::optional<double> f0_min;
  std::optional<double> f0_max;
  std::string decision_mode;
};

PipelineConfig effective_config(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  if (g.envelope_threshold) c.envelope_threshold = *g.envelope_threshold;
  if (g.pitch_distance_max) c.rules.pitch_distance_max = *g.pitch_distance_max;
  if (g.segment_corr_gate) c.rules.corr_gate = *g.segment_corr_gate;
  if (g.decision_threshold) c.decision_threshold = *g.decision_threshold;
  if (g.f0_min) c.rules.f0_min_hz = *g.f0_min;
  if (g.f0_max) c.rules.f0_max_hz = *g.f0_max;
  if (!g.decision_mode.empty()) c.mode = parse_decision_mode(g.decision_mode);
  validate(c);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string utc_now() { return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr))); }

std::vector<SampledSignal> accs_of(const std::vector<UtterancePair>& pairs) {
  std::vector<SampledSignal> out;
  for (const auto& p : pairs) out.push_back(p.acc);
  return out;
}

std::vector<SampledSignal> mics_of(const std::vector<UtterancePair>& pairs) {
  std::vector<SampledSignal> out;
  for (const auto& p : pairs) out.push_back(p.mic);
  return out;
}

std::vector<UtterancePair> pairs_of(const std::vector<CommandUtterance>& corpus) {
  std::vector<UtterancePair> out;
  for (const auto& u : corpus) out.push_back(u.pair);
  return out;
}

ClassifierModel train_on_bank(const std::vector<UtterancePair>& bank, const PipelineConfig& config,
                              std::size_t replication, TrainingSetStats* stats) {
  auto model = train_from_recordings(accs_of(bank), mics_of(bank), config, replication, pipeline_train_config(), stats);
  model.meta.created = utc_now();
  return model;
}

// Loads --model when given, else trains on the synthetic bank of train_seed.
ClassifierModel obtain_model(const std::string& model_path, std::uint64_t train_seed, const PipelineConfig& config) {
  if (!model_path.empty()) return load_model(model_path);
  spdlog::info("training a model on the synthetic bank (seed {})", train_seed);
  return train_on_bank(synth_phoneme_bank(train_seed), config, 5, nullptr);
}

std::string batch_csv(const BatchResult& r) {
  std::string out = "acc_group,mic_group,tp_rate,fp_rate,genuine_trials,false_trials\n";
  for (const auto& row : r.table) {
    out += fmt::format("{},{},{},{},{},{}\n", row.acc_group, row.mic_group, row.tp_rate(), row.fp_rate(),
                       row.genuine_trials, row.false_trials);
  }
  return out;
}

nlohmann::json batch_json(const BatchResult& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.table) {
    rows.push_back({{"acc_group", row.acc_group},
                    {"mic_group", row.mic_group},
                    {"tp_rate", num(row.tp_rate())},
                    {"fp_rate", num(row.fp_rate())},
                    {"genuine_trials", row.genuine_trials},
                    {"false_trials", row.false_trials}});
  }
  return {{"tp_rate", num(r.tp_rate)}, {"fp_rate", num(r.fp_rate)}, {"table", rows}};
}

struct AttackArgs {
  std::vector<std::size_t> bands{15, 30};
  std::vector<double> levels{0.0, 0.005, 0.02, 0.05, 0.1, 0.2};
  std::string noise_kind = "white";
  unsigned threads = 0;
};

std::vector<AttackReport> run_attacks(const ClassifierModel& model, const PipelineConfig& config, std::uint64_t seed,
                                      const AttackArgs& args, std::vector<AttackReport>* injection) {
  AttackOptions opts;
  opts.pipeline = config;
  opts.threads = args.threads;
  const auto corpus = synth_command_corpus(seed);
  const auto pairs = pairs_of(corpus);
  std::vector<AttackReport> reports = run_mangled_attack(pairs, model, args.bands, opts);
  reports.push_back(run_control_arm(pairs, model, opts));
  reports.push_back(run_replay_attack(corpus, model, opts));
  reports.push_back(run_impersonation_attack(corpus, model, opts));
  auto inj = run_injection_attack(args.levels, mics_of(pairs), model, parse_noise_kind(args.noise_kind), seed, opts);
  reports.insert(reports.end(), inj.begin(), inj.end());
  if (injection) *injection = std::move(inj);
  return reports;
}

std::string injection_csv(const std::vector<AttackReport>& reports, const std::vector<double>& levels) {
  std::string out = "level,trials,accepted,acceptance_rate\n";
  for (std::size_t i = 0; i < reports.size() && i < levels.size(); ++i) {
    const auto& r = reports[i];
    out += fmt::format("{},{},{},{}\n", levels[i], r.trials, r.accepted,
                       r.trials ? static_cast<double>(r.accepted) / static_cast<double>(r.trials) : 0.0);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VAuth voice-authentication matching engine"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON file with pipeline thresholds")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for synthetic data");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_option("--envelope-threshold", g.envelope_threshold, "Envelope threshold as a fraction of peak energy");
  app.add_option("--pitch-distance-max", g.pitch_distance_max, "Maximum glottal-cycle pitch distance");
  app.add_option("--segment-corr-gate", g.segment_corr_gate, "Per-segment correlation gate");
  app.add_option("--decision-threshold", g.decision_threshold, "Threshold for the threshold decision mode");
  app.add_option("--f0-min", g.f0_min, "Lowest accepted accelerometer f0 in Hz");
  app.add_option("--f0-max", g.f0_max, "Highest accepted accelerometer f0 in Hz");
  app.add_option("--decision-mode", g.decision_mode, "classifier or threshold")
      ->check(CLI::IsMember({"classifier", "threshold"}));

  // match
  auto* match_cmd = app.add_subcommand("match", "Match one accelerometer/microphone pair");
  std::string acc_path, mic_path, model_path, json_out, cleaned_out;
  bool include_audio = false;
  match_cmd->add_option("acc", acc_path, "Accelerometer WAV")->required();
  match_cmd->add_option("mic", mic_path, "Microphone WAV")->required();
  match_cmd->add_option("--model", model_path, "Model file (not needed in threshold mode)");
  match_cmd->add_option("--json-out", json_out, "Write the report here instead of stdout");
  match_cmd->add_option("--cleaned-out", cleaned_out, "Write the cleaned microphone signal (WAV) on a match");
  match_cmd->add_flag("--include-audio", include_audio, "Embed the cleaned signal in the JSON report");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Print per-segment diagnostics for a pair");
  analyze_cmd->add_option("acc", acc_path, "Accelerometer WAV")->required();
  analyze_cmd->add_option("mic", mic_path, "Microphone WAV")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the classifier on a 44-pair phoneme bank");
  std::string bank_dir, out_path, csv_path;
  std::size_t replication = 5;
  train_cmd->add_option("--bank", bank_dir, "Corpus directory (default: synthetic bank from --seed)");
  train_cmd->add_option("--replication", replication, "Total copies of each positive example")->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", out_path, "Model output path")->required();
  train_cmd->add_option("--csv", csv_path, "Also export the training set as CSV");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus");
  std::string synth_kind = "bank", noise_kind = "white";
  double noise_level = 0.01, noise_duration = 1.0;
  synth_cmd->add_option("--kind", synth_kind, "bank, commands or noise")->check(CLI::IsMember({"bank", "commands", "noise"}));
  synth_cmd->add_option("--out", out_path, "Output directory")->required();
  synth_cmd->add_option("--noise-kind", noise_kind, "white, periodic or spike");
  synth_cmd->add_option("--level", noise_level, "Noise level");
  synth_cmd->add_option("--duration", noise_duration, "Noise duration in seconds");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run an evaluation suite");
  std::string suite;
  std::optional<std::uint64_t> train_seed;
  std::string bench_out = "bench_out";
  bench_cmd->add_option("--suite", suite, "phoneme, command, attack or fpdecay")->required();
  bench_cmd->add_option("--out", bench_out, "Output directory");
  bench_cmd->add_option("--model", model_path, "Model file (default: train on the bank of --train-seed)");
  bench_cmd->add_option("--train-seed", train_seed, "Bank seed for training (default: seed + 1)");
  unsigned threads = 0;
  bench_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Run the attack scenarios on the synthetic command corpus");
  AttackArgs attack_args;
  attack_cmd->add_option("--model", model_path, "Model file (default: train on the bank of --train-seed)");
  attack_cmd->add_option("--train-seed", train_seed, "Bank seed for training (default: seed + 1)");
  attack_cmd->add_option("--bands", attack_args.bands, "Mel band counts for the mangled attack");
  attack_cmd->add_option("--levels", attack_args.levels, "Induced accelerometer levels");
  attack_cmd->add_option("--noise-kind", attack_args.noise_kind, "Induced noise kind");
  attack_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  attack_cmd->add_option("--json-out", json_out, "Write the reports as JSON");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the matching gateway");
  std::string listen = "127.0.0.1:7700";
  serve_cmd->add_option("--listen", listen, "host:port");
  serve_cmd->add_option("--model", model_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_default_logger(spdlog::default_logger()->clone("vauth"));

  try {
    const PipelineConfig config = effective_config(g);

    if (*match_cmd) {
      const auto acc = read_wav(acc_path);
      const auto mic = read_wav(mic_path);
      ClassifierModel model;
      if (config.mode == DecisionMode::Classifier) {
        if (model_path.empty()) throw InputError("--model is required in classifier mode");
        model = load_model(model_path);
      }
      const auto report = match(acc, mic, model, config);
      const auto text = report_to_json(report, include_audio, 2);
      if (json_out.empty()) {
        std::cout << text << "\n";
      } else {
        write_text(json_out, text + "\n");
      }
      if (!cleaned_out.empty() && report.is_match) write_wav(cleaned_out, report.cleaned_mic);
      return report.is_match ? kExitOk : kExitNoMatch;
    }

    if (*analyze_cmd) {
      const auto analysis = analyze(read_wav(acc_path), read_wav(mic_path), config);
      std::vector<SegmentDiagnostic> diags;
      for (const auto& s : analysis.segments) diags.push_back(diagnose(s));
      nlohmann::json j;
      j["alignment_shift"] = analysis.alignment_shift;
      j["segments"] = nlohmann::json::parse(segments_to_json(diags));
      j["early_exit"] = analysis.early_exit ? nlohmann::json(std::string(to_string(*analysis.early_exit))) : nlohmann::json(nullptr);
      j["center_value"] = analysis.features ? nlohmann::json(analysis.features->center_value()) : nlohmann::json(nullptr);
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (*train_cmd) {
      std::vector<UtterancePair> bank;
      if (bank_dir.empty()) {
        bank = synth_phoneme_bank(g.seed);
      } else {
        if (!fs::is_directory(bank_dir)) throw InputError("bank directory " + bank_dir + " does not exist");
        bank = read_corpus(bank_dir);
      }
      TrainingSetStats stats;
      const auto examples = build_training_set(accs_of(bank), mics_of(bank), replication, pipeline_feature_extractor(config), &stats);
      if (!csv_path.empty()) export_training_csv(examples, csv_path);
      auto model = train_classifier(examples, pipeline_train_config());
      model.meta.config_digest = config_digest(config);
      model.meta.created = utc_now();
      save_model(model, out_path);
      std::cout << fmt::format(
          "base examples: {}\nbase positives: {}\nnegatives: {}\npositives after replication: {}\nfailed pairs: {}\n"
          "training accuracy: {:.4f}\nmodel: {}\n",
          stats.base_examples, stats.base_positives, stats.negatives, stats.positives, stats.failed_pairs,
          model.meta.training_accuracy, out_path);
      return kExitOk;
    }

    if (*synth_cmd) {
      if (synth_kind == "bank") {
        write_corpus(synth_phoneme_bank(g.seed), out_path);
      } else if (synth_kind == "commands") {
        write_corpus(pairs_of(synth_command_corpus(g.seed)), out_path);
      } else {
        fs::create_directories(out_path);
        write_wav(fs::path(out_path) / "noise.wav",
                  make_noise(parse_noise_kind(noise_kind), noise_level, noise_duration, g.seed));
      }
      std::cout << "wrote " << out_path << "\n";
      return kExitOk;
    }

    attack_args.threads = threads;
    if (*bench_cmd) {
      const fs::path out(bench_out);
      if (suite == "fpdecay") {
        const auto rows = fp_decay_montecarlo(uniform_scores(0.0, 0.5), 0.4, {1, 2, 4, 8, 16}, 100000, g.seed);
        const auto csv = fp_decay_csv(rows);
        write_text(out / "fpdecay.csv", csv);
        std::cout << csv;
        return kExitOk;
      }
      if (suite != "phoneme" && suite != "command" && suite != "attack") throw InputError("unknown suite '" + suite + "'");
      const auto model = obtain_model(model_path, train_seed.value_or(g.seed + 1), config);
      if (suite == "attack") {
        std::vector<AttackReport> injection;
        const auto reports = run_attacks(model, config, g.seed, attack_args, &injection);
        write_text(out / "attack.json", attack_reports_to_json(reports) + "\n");
        write_text(out / "injection.csv", injection_csv(injection, attack_args.levels));
        std::cout << format_attack_table(reports);
        return kExitOk;
      }
      std::vector<UtterancePair> pairs;
      std::vector<std::string> groups;
      if (suite == "phoneme") {
        pairs = synth_phoneme_bank(g.seed);
      } else {
        pairs = pairs_of(synth_command_corpus(g.seed));
      }
      for (const auto& p : pairs) groups.push_back(p.group);
      const auto result = batch_match(accs_of(pairs), mics_of(pairs), model, config, groups, threads);
      write_text(out / (suite + ".json"), batch_json(result).dump(2) + "\n");
      write_text(out / (suite + ".csv"), batch_csv(result));
      std::cout << result.format_table();
      return kExitOk;
    }

    if (*attack_cmd) {
      const auto model = obtain_model(model_path, train_seed.value_or(g.seed + 1), config);
      const auto reports = run_attacks(model, config, g.seed, attack_args, nullptr);
      if (!json_out.empty()) write_text(json_out, attack_reports_to_json(reports) + "\n");
      std::cout << format_attack_table(reports);
      return kExitOk;
    }

    if (*serve_cmd) {
      spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
      serve(listen, model_path, config);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
