#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "vauth/decision.hpp"
#include "vauth/pipeline.hpp"
#include "vauth/signal.hpp"
#include "vauth/synth.hpp"

namespace testutil {

inline std::vector<double> sine(double freq, double rate, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate + phase);
  }
  return x;
}

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

inline std::vector<double> as_vector(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

inline const nlohmann::json& oracles() {
  static const nlohmann::json data = [] {
    std::ifstream in(VAUTH_ORACLE_PATH);
    return nlohmann::json::parse(in);
  }();
  return data;
}

/// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("vauth_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Base (replication 1) training examples of phoneme bank seed 1, computed once.
const std::vector<vauth::LabeledExample>& bank_examples();

/// Classifier trained on phoneme bank seed 1 with five copies of each positive.
const vauth::ClassifierModel& bank_model();

/// Positives of `base` repeated so that each appears `replication` times.
std::vector<vauth::LabeledExample> replicate(const std::vector<vauth::LabeledExample>& base, std::size_t replication);

}  // namespace testutil
