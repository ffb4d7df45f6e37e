#include "vauth/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "vauth/errors.hpp"
#include "vauth/fft.hpp"

namespace vauth {
namespace {

constexpr double kLogEps = 1e-10;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

std::size_t frame_count(std::size_t len, const MfccParams& p) {
  return len < p.window_samples ? 0 : (len - p.window_samples) / p.hop_samples + 1;
}

using Spectrogram = std::vector<std::vector<std::complex<double>>>;

Spectrogram stft(std::span<const double> x, const MfccParams& p, const std::vector<double>& win) {
  const std::size_t frames = frame_count(x.size(), p);
  Spectrogram out(frames);
  std::vector<double> buf(p.window_samples);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t off = f * p.hop_samples;
    for (std::size_t i = 0; i < p.window_samples; ++i) buf[i] = x[off + i] * win[i];
    out[f] = fft::rfft(buf, p.window_samples);
  }
  return out;
}

std::vector<double> istft(const Spectrogram& spec, const MfccParams& p, const std::vector<double>& win) {
  if (spec.empty()) return {};
  const std::size_t len = (spec.size() - 1) * p.hop_samples + p.window_samples;
  std::vector<double> out(len, 0.0), norm(len, 0.0);
  for (std::size_t f = 0; f < spec.size(); ++f) {
    const auto frame = fft::irfft(spec[f], p.window_samples);
    const std::size_t off = f * p.hop_samples;
    for (std::size_t i = 0; i < p.window_samples; ++i) {
      out[off + i] += frame[i] * win[i];
      norm[off + i] += win[i] * win[i];
    }
  }
  for (std::size_t i = 0; i < len; ++i) out[i] = norm[i] > 1e-8 ? out[i] / norm[i] : 0.0;
  return out;
}

// Mel band powers per frame.
std::vector<std::vector<double>> mel_powers(const SampledSignal& signal, const MfccParams& p) {
  const auto fb = mel_filterbank(p);
  const auto spec = stft(signal.samples(), p, hann(p.window_samples));
  std::vector<std::vector<double>> out(spec.size(), std::vector<double>(fb.size(), 0.0));
  for (std::size_t f = 0; f < spec.size(); ++f) {
    for (std::size_t b = 0; b < fb.size(); ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec[f].size(); ++k) acc += fb[b][k] * std::norm(spec[f][k]);
      out[f][b] = acc;
    }
  }
  return out;
}

double dct_scale(std::size_t k, std::size_t m) {
  return std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(m));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

void validate(const MfccParams& p) {
  if (p.window_samples == 0 || p.hop_samples == 0 || p.n_coeffs == 0 || p.n_mel_bands == 0) {
    throw InvalidConfig("MFCC sizes must be positive");
  }
  if (p.hop_samples > p.window_samples) throw InvalidConfig("MFCC hop exceeds the window");
  if (!(p.rate_hz > 0.0)) throw InvalidConfig("MFCC rate must be positive");
}

std::vector<std::vector<double>> mel_filterbank(const MfccParams& p) {
  validate(p);
  const std::size_t bins = p.window_samples / 2 + 1;
  const double top = hz_to_mel(p.rate_hz / 2.0);
  std::vector<double> edges(p.n_mel_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(p.n_mel_bands + 1));
  }
  std::vector<std::vector<double>> fb(p.n_mel_bands, std::vector<double>(bins, 0.0));
  for (std::size_t b = 0; b < p.n_mel_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * p.rate_hz / static_cast<double>(p.window_samples);
      if (hz > lo && hz < hi) fb[b][k] = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
    }
  }
  return fb;
}

MfccMatrix mfcc_extract(const SampledSignal& signal, const MfccParams& p) {
  validate(p);
  if (signal.size() < p.window_samples) {
    throw SignalTooShort("signal has " + std::to_string(signal.size()) + " samples, window needs " +
                         std::to_string(p.window_samples));
  }
  const auto mel = mel_powers(signal, p);
  const std::size_t m = p.n_mel_bands;
  MfccMatrix out;
  out.frames = mel.size();
  out.coeffs = std::min(p.n_coeffs, m);
  out.data.assign(out.frames * out.coeffs, 0.0);
  std::vector<double> logmel(m);
  for (std::size_t f = 0; f < out.frames; ++f) {
    for (std::size_t b = 0; b < m; ++b) logmel[b] = std::log(mel[f][b] + kLogEps) - std::log(kLogEps);
    for (std::size_t k = 0; k < out.coeffs; ++k) {
      double acc = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        acc += logmel[b] * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(b) + 0.5) / static_cast<double>(m));
      }
      out.at(f, k) = dct_scale(k, m) * acc;
    }
  }
  return out;
}

SampledSignal mfcc_invert(const MfccMatrix& coeffs, const MfccParams& p, int phase_iters) {
  validate(p);
  if (coeffs.frames == 0) return SampledSignal::empty(p.rate_hz);
  const std::size_t m = p.n_mel_bands;
  const std::size_t kept = std::min(coeffs.coeffs, m);
  const auto fb = mel_filterbank(p);
  const std::size_t bins = fb.front().size();
  Eigen::MatrixXd fbm(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(bins));
  for (std::size_t b = 0; b < m; ++b) {
    for (std::size_t k = 0; k < bins; ++k) fbm(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = fb[b][k];
  }
  const Eigen::MatrixXd pinv = fbm.completeOrthogonalDecomposition().pseudoInverse();

  Spectrogram spec(coeffs.frames, std::vector<std::complex<double>>(bins));
  Eigen::VectorXd mel(static_cast<Eigen::Index>(m));
  for (std::size_t f = 0; f < coeffs.frames; ++f) {
    for (std::size_t b = 0; b < m; ++b) {
      double logmel = 0.0;
      for (std::size_t k = 0; k < kept; ++k) {
        logmel += dct_scale(k, m) * coeffs.at(f, k) *
                  std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(b) + 0.5) / static_cast<double>(m));
      }
      mel(static_cast<Eigen::Index>(b)) = std::max(0.0, std::exp(logmel + std::log(kLogEps)) - kLogEps);
    }
    const Eigen::VectorXd power = pinv * mel;
    for (std::size_t k = 0; k < bins; ++k) spec[f][k] = std::sqrt(std::max(0.0, power(static_cast<Eigen::Index>(k))));
  }

  const auto win = hann(p.window_samples);
  std::vector<double> x = istft(spec, p, win);
  for (int it = 0; it < phase_iters; ++it) {
    const auto est = stft(x, p, win);
    for (std::size_t f = 0; f < spec.size(); ++f) {
      for (std::size_t k = 0; k < bins; ++k) {
        const double mag = std::abs(spec[f][k]);
        const double a = std::abs(est[f][k]);
        spec[f][k] = a > 0.0 ? est[f][k] * (mag / a) : std::complex<double>(mag, 0.0);
      }
    }
    x = istft(spec, p, win);
  }
  return SampledSignal(std::move(x), p.rate_hz);
}

double envelope_correlation(const SampledSignal& reference, const SampledSignal& other, const MfccParams& p) {
  MfccParams fine = p;
  fine.n_mel_bands = 64;
  const auto a = mel_powers(reference, fine);
  const auto b = mel_powers(other, fine);
  const std::size_t frames = std::min(a.size(), b.size());
  if (frames == 0) return 0.0;
  std::vector<double> frame_energy(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (double v : a[f]) frame_energy[f] += v;
  }
  const double loudest = *std::max_element(frame_energy.begin(), frame_energy.end());
  if (loudest <= 0.0) return 0.0;
  double total = 0.0;
  std::size_t used = 0;
  std::vector<double> la(fine.n_mel_bands), lb(fine.n_mel_bands);
  for (std::size_t f = 0; f < frames; ++f) {
    if (frame_energy[f] < loudest * 1e-4) continue;
    for (std::size_t k = 0; k < fine.n_mel_bands; ++k) {
      la[k] = std::log(a[f][k] + kLogEps);
      lb[k] = std::log(b[f][k] + kLogEps);
    }
    total += pearson(la, lb);
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

}  // namespace vauth
