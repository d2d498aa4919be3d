#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace crm::audio {

inline constexpr int kDefaultSampleRate = 44100;

class AudioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mono waveform. Every DSP routine in the project consumes and produces these.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
  [[nodiscard]] double duration_seconds() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

/// Number of samples covering `seconds` at `sample_rate`, rounded to nearest.
[[nodiscard]] std::size_t samples_for(double seconds, int sample_rate);

// Level reference tags. A full-scale level only becomes a sound-pressure level
// through to_spl(), which requires an explicit calibration offset.
struct FullScale {};
struct SoundPressure {};

template <typename Reference>
struct Level {
  double value = 0.0;

  constexpr Level() = default;
  constexpr explicit Level(double v) : value(v) {}

  friend constexpr auto operator<=>(const Level&, const Level&) = default;
};

using DbFs = Level<FullScale>;
using DbSpl = Level<SoundPressure>;

/// dB SPL produced when 0 dB FS is played through the calibrated chain.
struct CalibrationOffset {
  double db = 0.0;
};

[[nodiscard]] constexpr DbSpl to_spl(DbFs level, CalibrationOffset offset) {
  return DbSpl{level.value + offset.db};
}
[[nodiscard]] constexpr DbFs to_full_scale(DbSpl level, CalibrationOffset offset) {
  return DbFs{level.value - offset.db};
}

// ---------------------------------------------------------------------------
// File I/O: RIFF/WAVE, PCM 16-bit little endian, mono.

[[nodiscard]] AudioBuffer read_wav(const std::filesystem::path& path);
[[nodiscard]] AudioBuffer decode_wav(const std::string& bytes);
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer);
[[nodiscard]] std::string encode_wav(const AudioBuffer& buffer);

// ---------------------------------------------------------------------------
// Level math and gain staging.

/// RMS level in dB FS. A silent buffer yields -infinity rather than an error.
[[nodiscard]] DbFs rms_level_db(const AudioBuffer& buffer);
[[nodiscard]] double rms(const AudioBuffer& buffer);
[[nodiscard]] double peak(const AudioBuffer& buffer);

[[nodiscard]] double db_to_amplitude(double db);
[[nodiscard]] double amplitude_to_db(double amplitude);

[[nodiscard]] AudioBuffer apply_gain(const AudioBuffer& buffer, double factor);
[[nodiscard]] AudioBuffer scale_to_rms(const AudioBuffer& buffer, DbFs target);

/// Raised-cosine fade-in and fade-out of `ramp_ms` each. Gain over the onset
/// ramp is 0.5 * (1 - cos(pi * n / T)); the offset ramp mirrors it.
[[nodiscard]] AudioBuffer apply_raised_cosine_ramps(const AudioBuffer& buffer, double ramp_ms);

/// Linear-interpolation resampler. Output has round(N / ratio) samples at the
/// same nominal rate, so playback raises every frequency by `ratio`.
[[nodiscard]] AudioBuffer resample_linear(const AudioBuffer& buffer, double ratio);

inline constexpr double kMinResampleRatio = 0.25;
inline constexpr double kMaxResampleRatio = 4.0;

}  // namespace crm::audio
