// Synthetic test signals and independent measurement oracles shared by the
// unit and acceptance suites. Nothing here calls into the library's DSP.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "crm/audio/audio_buffer.hpp"

namespace crm::testing {

inline constexpr int kFs = 44100;

inline audio::AudioBuffer sine(double hz, double seconds, double amplitude = 1.0, int fs = kFs) {
  audio::AudioBuffer b;
  b.sample_rate = fs;
  b.samples.resize(audio::samples_for(seconds, fs));
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    b.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / fs);
  }
  return b;
}

inline audio::AudioBuffer white_noise(double seconds, unsigned seed, double sd = 0.1, int fs = kFs) {
  audio::AudioBuffer b;
  b.sample_rate = fs;
  b.samples.resize(audio::samples_for(seconds, fs));
  std::mt19937 gen(seed);
  std::normal_distribution<double> dist(0.0, sd);
  for (double& x : b.samples) x = dist(gen);
  return b;
}

/// Harmonic complex with per-harmonic amplitude envelope(f). Peak-normalized to 0.8.
template <typename Envelope>
audio::AudioBuffer harmonic_complex(double f0, double seconds, Envelope envelope,
                                    double max_hz = 5000.0, int fs = kFs) {
  audio::AudioBuffer b;
  b.sample_rate = fs;
  b.samples.assign(audio::samples_for(seconds, fs), 0.0);
  for (int k = 1; k * f0 <= max_hz; ++k) {
    const double a = envelope(k * f0);
    const double w = 2.0 * std::numbers::pi * k * f0 / fs;
    for (std::size_t i = 0; i < b.samples.size(); ++i) {
      b.samples[i] += a * std::cos(w * static_cast<double>(i));
    }
  }
  double p = 0.0;
  for (double x : b.samples) p = std::max(p, std::abs(x));
  for (double& x : b.samples) x *= 0.8 / p;
  return b;
}

/// Band-limited pulse train: equal-amplitude harmonics up to 5 kHz.
inline audio::AudioBuffer pulse_train(double f0, double seconds, int fs = kFs) {
  return harmonic_complex(f0, seconds, [](double) { return 1.0; }, 5000.0, fs);
}

/// Vowel-like harmonic complex with a single Lorentzian formant.
inline audio::AudioBuffer single_formant_vowel(double f0, double formant_hz, double seconds,
                                               double bandwidth_hz = 250.0) {
  return harmonic_complex(f0, seconds, [=](double f) {
    const double d = f - formant_hz;
    return 1.0 / std::sqrt(d * d + 0.25 * bandwidth_hz * bandwidth_hz);
  });
}

/// Magnitude of the Hann-windowed DFT of x evaluated at an arbitrary frequency.
inline double dft_magnitude(const audio::AudioBuffer& b, double hz) {
  const std::size_t n = b.samples.size();
  std::complex<double> acc{0.0, 0.0};
  const double w = 2.0 * std::numbers::pi * hz / b.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double win = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    acc += win * b.samples[i] * std::polar(1.0, -w * static_cast<double>(i));
  }
  return std::abs(acc);
}

/// Frequency of the strongest DFT component on a grid over [lo, hi].
inline double dominant_frequency(const audio::AudioBuffer& b, double lo, double hi, double step) {
  double best_hz = lo;
  double best = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double m = dft_magnitude(b, f);
    if (m > best) {
      best = m;
      best_hz = f;
    }
  }
  return best_hz;
}

/// Spectral-envelope peak from harmonic amplitudes. Each harmonic's amplitude is
/// the DFT maximum near k*f0; the vertex of the parabola through 1/A^2 at the
/// three harmonics around the strongest one locates the resonance.
inline double formant_peak(const audio::AudioBuffer& b, double f0, double lo_hz, double hi_hz) {
  std::vector<double> freqs;
  std::vector<double> amps;
  for (int k = 1; k * f0 <= hi_hz + 2 * f0; ++k) {
    double best = 0.0;
    double best_f = k * f0;
    for (double f = k * f0 * 0.98; f <= k * f0 * 1.02; f += 0.5) {
      const double m = dft_magnitude(b, f);
      if (m > best) {
        best = m;
        best_f = f;
      }
    }
    freqs.push_back(best_f);
    amps.push_back(best);
  }
  std::size_t top = 0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (freqs[i] >= lo_hz && freqs[i] <= hi_hz && (amps[top] < amps[i] || freqs[top] < lo_hz)) top = i;
  }
  if (top == 0 || top + 1 >= amps.size()) return freqs[top];
  const double x0 = freqs[top - 1], x1 = freqs[top], x2 = freqs[top + 1];
  const double y0 = 1.0 / (amps[top - 1] * amps[top - 1]);
  const double y1 = 1.0 / (amps[top] * amps[top]);
  const double y2 = 1.0 / (amps[top + 1] * amps[top + 1]);
  // Vertex of the interpolating parabola through three (x, y) points.
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double a = (d1 - d0) / (x2 - x0);
  const double bcoef = d0 - a * (x0 + x1);
  return -bcoef / (2.0 * a);
}

/// Autocorrelation F0 oracle: strongest normalized autocorrelation lag over
/// the whole buffer, preferring the shortest lag within 10% of the maximum.
inline double autocorrelation_f0(const audio::AudioBuffer& b, double lo_hz = 60.0, double hi_hz = 500.0) {
  const auto& x = b.samples;
  const std::size_t lag_min = static_cast<std::size_t>(b.sample_rate / hi_hz);
  const std::size_t lag_max = static_cast<std::size_t>(b.sample_rate / lo_hz) + 1;
  const std::size_t width = x.size() - lag_max - 1;
  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
    double c = 0.0, e0 = 0.0, e1 = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      c += x[i] * x[i + lag];
      e0 += x[i] * x[i];
      e1 += x[i + lag] * x[i + lag];
    }
    r[lag] = c / std::sqrt(e0 * e1);
  }
  double best = 0.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, r[lag]);
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
      const double a = r[lag - 1], c0 = r[lag], c = r[lag + 1];
      const double curv = a - 2 * c0 + c;
      const double shift = curv < 0 ? 0.5 * (a - c) / curv : 0.0;
      return b.sample_rate / (static_cast<double>(lag) + shift);
    }
  }
  return 0.0;
}

}  // namespace crm::testing
