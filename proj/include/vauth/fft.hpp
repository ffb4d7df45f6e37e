#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Thin wrapper over FFTW for the handful of real transforms the library needs.
// Plan creation is serialized internally; execution is reentrant.
namespace vauth::fft {

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t good_size(std::size_t n);

/// Forward real transform of x zero-padded to n. Returns n/2 + 1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n);

/// Inverse of rfft, scaled by 1/n so that irfft(rfft(x, n), n) == x.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

/// Full linear convolution (length a.size() + b.size() - 1).
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// Raw cross-correlation c[k] = sum_t f[t] g[t + lag], lag = k - (f.size() - 1),
/// for lag in [-(f.size()-1), g.size()-1].
std::vector<double> correlate(std::span<const double> f, std::span<const double> g);

}  // namespace vauth::fft
