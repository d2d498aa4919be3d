#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crm/audio/audio_buffer.hpp"

namespace crm::audio {

double rms(const AudioBuffer& buffer) {
  if (buffer.empty()) throw AudioError("RMS of an empty buffer");
  double acc = 0.0;
  for (double x : buffer.samples) acc += x * x;
  return std::sqrt(acc / static_cast<double>(buffer.size()));
}

double peak(const AudioBuffer& buffer) {
  double p = 0.0;
  for (double x : buffer.samples) p = std::max(p, std::abs(x));
  return p;
}

double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

double amplitude_to_db(double amplitude) {
  if (amplitude <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(amplitude);
}

DbFs rms_level_db(const AudioBuffer& buffer) { return DbFs{amplitude_to_db(rms(buffer))}; }

AudioBuffer apply_gain(const AudioBuffer& buffer, double factor) {
  AudioBuffer out = buffer;
  for (double& x : out.samples) x *= factor;
  return out;
}

AudioBuffer scale_to_rms(const AudioBuffer& buffer, DbFs target) {
  const double current = rms(buffer);
  if (current == 0.0) throw AudioError("cannot scale a silent buffer to a target level");
  if (!std::isfinite(target.value)) throw AudioError("target level must be finite");
  return apply_gain(buffer, db_to_amplitude(target.value) / current);
}

AudioBuffer apply_raised_cosine_ramps(const AudioBuffer& buffer, double ramp_ms) {
  if (ramp_ms < 0.0) throw AudioError("ramp duration must be non-negative");
  const std::size_t ramp = samples_for(ramp_ms / 1000.0, buffer.sample_rate);
  if (buffer.size() < 2 * ramp) {
    throw AudioError("buffer of " + std::to_string(buffer.size()) +
                     " samples is shorter than two " + std::to_string(ramp) + "-sample ramps");
  }
  AudioBuffer out = buffer;
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(ramp)));
    out.samples[i] *= g;
    out.samples[n - 1 - i] *= g;
  }
  return out;
}

AudioBuffer resample_linear(const AudioBuffer& buffer, double ratio) {
  if (!(ratio >= kMinResampleRatio && ratio <= kMaxResampleRatio)) {
    throw AudioError("resample ratio " + std::to_string(ratio) + " outside [0.25, 4]");
  }
  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  if (buffer.empty()) return out;

  const auto n_out =
      static_cast<std::size_t>(std::llround(static_cast<double>(buffer.size()) / ratio));
  out.samples.resize(n_out);
  const std::size_t last = buffer.size() - 1;
  for (std::size_t m = 0; m < n_out; ++m) {
    const double pos = static_cast<double>(m) * ratio;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= last) {
      out.samples[m] = buffer.samples[last];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out.samples[m] = buffer.samples[i] + frac * (buffer.samples[i + 1] - buffer.samples[i]);
  }
  return out;
}

}  // namespace crm::audio
