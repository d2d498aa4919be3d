#include <cmath>
#include <random>

#include "crm/audio/spectrum.hpp"
#include "crm/calibration/calibration.hpp"
#include "crm/random.hpp"

namespace crm::calibration {

std::vector<double> average_magnitude_spectrum(std::span<const audio::AudioBuffer> corpus) {
  if (corpus.empty()) throw CalibrationError("shaped noise needs a non-empty reference corpus");
  const auto w = audio::hann_window(kSpectrumFrame);
  const std::size_t hop = kSpectrumFrame / 2;
  std::vector<double> power(kSpectrumFrame / 2 + 1, 0.0);
  std::vector<double> frame(kSpectrumFrame);
  std::size_t frames = 0;
  for (const auto& buffer : corpus) {
    // Zero-pad short buffers so every buffer contributes at least one frame.
    const std::size_t n = std::max(buffer.size(), kSpectrumFrame);
    for (std::size_t start = 0; start + kSpectrumFrame <= n; start += hop) {
      for (std::size_t i = 0; i < kSpectrumFrame; ++i) {
        const std::size_t j = start + i;
        frame[i] = j < buffer.size() ? buffer.samples[j] * w[i] : 0.0;
      }
      const auto bins = audio::real_fft(frame);
      for (std::size_t k = 0; k < power.size(); ++k) power[k] += std::norm(bins[k]);
      ++frames;
    }
  }
  for (auto& p : power) p = std::sqrt(p / static_cast<double>(frames));
  return power;
}

audio::AudioBuffer shaped_noise(std::span<const audio::AudioBuffer> corpus, double duration_s,
                                std::uint64_t seed) {
  const auto magnitude = average_magnitude_spectrum(corpus);
  const int fs = corpus.front().sample_rate;
  const std::size_t n = audio::samples_for(duration_s, fs);
  if (n < 2) throw CalibrationError("shaped noise duration too short");

  double mean_power = 0.0;
  for (const auto& b : corpus) {
    if (b.sample_rate != fs) throw CalibrationError("reference corpus mixes sample rates");
    if (!b.empty()) mean_power += audio::rms(b) * audio::rms(b);
  }
  mean_power /= static_cast<double>(corpus.size());
  if (!(mean_power > 0.0)) throw CalibrationError("reference corpus is silent");

  Rng rng(derive_seed(seed, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(n);
  for (auto& s : noise) s = gauss(rng);

  auto bins = audio::real_fft(noise);
  const double step = static_cast<double>(kSpectrumFrame) / static_cast<double>(n);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double pos = static_cast<double>(k) * step;
    const auto i = std::min(static_cast<std::size_t>(pos), magnitude.size() - 2);
    const double frac = std::min(1.0, pos - static_cast<double>(i));
    bins[k] *= magnitude[i] + frac * (magnitude[i + 1] - magnitude[i]);
  }
  audio::AudioBuffer out{audio::inverse_real_fft(bins, n), fs};
  const double level = audio::rms(out);
  if (!(level > 0.0)) throw CalibrationError("reference spectrum is empty");
  return audio::apply_gain(out, std::sqrt(mean_power) / level);
}

}  // namespace crm::calibration
