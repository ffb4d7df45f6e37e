#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vauth {

/// Time-domain samples plus their sampling rate. The rate is always positive
/// and every sample is finite; the constructor enforces both.
class SampledSignal {
 public:
  SampledSignal() = default;
  SampledSignal(std::vector<double> samples, double rate_hz);

  /// An empty signal at the given rate.
  static SampledSignal empty(double rate_hz);

  std::span<const double> samples() const { return samples_; }
  const std::vector<double>& vector() const { return samples_; }
  double operator[](std::size_t i) const { return samples_[i]; }
  double rate_hz() const { return rate_hz_; }
  std::size_t size() const { return samples_.size(); }
  bool is_empty() const { return samples_.empty(); }
  double duration_sec() const { return static_cast<double>(samples_.size()) / rate_hz_; }

  /// Moves the samples out, leaving this signal empty.
  std::vector<double> take_samples() { return std::move(samples_); }

  /// Copy of samples [begin, end) at the same rate.
  SampledSignal slice(std::size_t begin, std::size_t end) const;

  bool operator==(const SampledSignal& other) const = default;

 private:
  std::vector<double> samples_;
  double rate_hz_ = 8000.0;
};

/// Sum of squared samples.
double energy(std::span<const double> x);
double peak_abs(std::span<const double> x);
double rms(std::span<const double> x);
bool all_zero(std::span<const double> x);

/// Binary per-frame activity mask.
struct EnergyEnvelope {
  std::vector<unsigned char> mask;  // each entry 0 or 1
  std::size_t frame_len = 1;        // samples per frame
  double rate_hz = 8000.0;

  std::size_t active_frames() const;
};

/// Normalized cross-correlation over the full lag range. Entry k holds the
/// lag `k - zero_lag_index`, i.e. sum_t f[t] * g[t + lag] / sqrt(E_f * E_g).
struct CrossCorrelation {
  std::vector<double> values;
  std::ptrdiff_t zero_lag_index = 0;

  std::ptrdiff_t lag_at(std::size_t k) const { return static_cast<std::ptrdiff_t>(k) - zero_lag_index; }
  /// Index of max |value|; the earliest index wins ties.
  std::size_t argmax_abs() const;
  double max_abs() const;
};

}  // namespace vauth
