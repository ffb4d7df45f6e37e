#include "support.hpp"

namespace testutil {

const std::vector<vauth::LabeledExample>& bank_examples() {
  static const std::vector<vauth::LabeledExample> examples = [] {
    const auto bank = vauth::synth_phoneme_bank(1);
    std::vector<vauth::SampledSignal> accs, mics;
    for (const auto& p : bank) {
      accs.push_back(p.acc);
      mics.push_back(p.mic);
    }
    return vauth::build_training_set(accs, mics, 1, vauth::pipeline_feature_extractor(vauth::PipelineConfig{}));
  }();
  return examples;
}

std::vector<vauth::LabeledExample> replicate(const std::vector<vauth::LabeledExample>& base, std::size_t replication) {
  std::vector<vauth::LabeledExample> out = base;
  for (const auto& e : base) {
    if (e.label != 1) continue;
    for (std::size_t r = 1; r < replication; ++r) out.push_back(e);
  }
  return out;
}

const vauth::ClassifierModel& bank_model() {
  static const vauth::ClassifierModel model = [] {
    auto m = vauth::train_classifier(replicate(bank_examples(), 5), vauth::pipeline_train_config());
    m.meta.config_digest = vauth::config_digest(vauth::PipelineConfig{});
    return m;
  }();
  return model;
}

}  // namespace testutil
