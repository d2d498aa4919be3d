#pragma once

#include <stdexcept>
#include <span>
#include <vector>

#include "crm/audio/audio_buffer.hpp"

namespace crm::voice {

using audio::AudioBuffer;

class MorphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Masker voice relative to the target talker, in semitones.
/// Positive delta_vtl means a longer vocal tract, i.e. lower formants.
struct VoiceCondition {
  double delta_f0_st = 0.0;
  double delta_vtl_st = 0.0;

  friend bool operator==(const VoiceCondition&, const VoiceCondition&) = default;
};

struct F0Estimate {
  double hz = 0.0;
  double voiced_fraction = 0.0;
};

/// One analysis frame of the pitch tracker.
struct PitchFrame {
  double center_s = 0.0;
  double hz = 0.0;        // 0 when unvoiced
  double clarity = 0.0;   // peak normalized cross-correlation
  bool voiced = false;
};

struct PitchTrackerOptions {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double min_hz = 60.0;
  double max_hz = 500.0;
  double voicing_threshold = 0.5;
  /// Frames quieter than this (relative to the loudest frame) are unvoiced.
  double silence_db = -35.0;
  /// estimate_f0 fails when fewer frames than this are voiced.
  double min_voiced_fraction = 0.1;
};

struct WsolaOptions {
  double frame_ms = 30.0;
  double hop_ms = 15.0;
  double tolerance_ms = 7.5;
};

[[nodiscard]] double semitone_to_ratio(double semitones);

[[nodiscard]] std::vector<PitchFrame> track_f0(const AudioBuffer& buffer,
                                               const PitchTrackerOptions& options = {});

/// Median F0 over voiced frames. Throws MorphError when too few frames are
/// voiced or the buffer is shorter than 100 ms.
[[nodiscard]] F0Estimate estimate_f0(const AudioBuffer& buffer,
                                     const PitchTrackerOptions& options = {});

/// Waveform-similarity overlap-add time stretch. Output holds
/// round(factor * N) samples; pitch and spectral envelope are kept.
[[nodiscard]] AudioBuffer wsola_time_stretch(const AudioBuffer& buffer, double factor,
                                             const WsolaOptions& options = {});

/// Pitch-synchronous overlap-add: multiplies F0 by `pitch_factor` while keeping
/// duration and spectral envelope. Unvoiced stretches are copied through.
[[nodiscard]] AudioBuffer psola_pitch_shift(const AudioBuffer& buffer, double pitch_factor);

[[nodiscard]] AudioBuffer shift_f0(const AudioBuffer& buffer, double semitones);
[[nodiscard]] AudioBuffer shift_vtl(const AudioBuffer& buffer, double semitones);

/// Applies both manipulations in one resynthesis pass. The (0, 0) condition
/// is still resynthesized so it carries the same processing artefacts.
[[nodiscard]] AudioBuffer apply_voice(const AudioBuffer& buffer, const VoiceCondition& condition);

/// As above, reusing `track`, which must be track_f0(buffer).
[[nodiscard]] AudioBuffer apply_voice(const AudioBuffer& buffer, const VoiceCondition& condition,
                                      std::span<const PitchFrame> track);

}  // namespace crm::voice
