#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "crm/voice/voice_morph.hpp"

namespace crm::voice {
namespace {

// Grain spacing used across unvoiced stretches.
constexpr double kUnvoicedPeriodS = 0.010;

struct PitchMark {
  long position = 0;
  double period = 0.0;  // samples
  bool voiced = false;
};

class PeriodContour {
 public:
  PeriodContour(std::vector<PitchFrame> frames, double sample_rate)
      : frames_(std::move(frames)), fs_(sample_rate) {}

  /// Local period (samples) and voicing at sample n, from the nearest frame.
  [[nodiscard]] std::pair<double, bool> at(long n) const {
    if (frames_.empty()) return {kUnvoicedPeriodS * fs_, false};
    const double t = static_cast<double>(n) / fs_;
    const auto it = std::lower_bound(frames_.begin(), frames_.end(), t,
                                     [](const PitchFrame& f, double v) { return f.center_s < v; });
    const PitchFrame* f = nullptr;
    if (it == frames_.end()) {
      f = &frames_.back();
    } else if (it == frames_.begin()) {
      f = &*it;
    } else {
      const auto prev = std::prev(it);
      f = (t - prev->center_s) < (it->center_s - t) ? &*prev : &*it;
    }
    if (!f->voiced) return {kUnvoicedPeriodS * fs_, false};
    return {fs_ / f->hz, true};
  }

 private:
  std::vector<PitchFrame> frames_;
  double fs_;
};

std::vector<PitchMark> place_pitch_marks(const AudioBuffer& buffer, const PeriodContour& contour) {
  const auto& x = buffer.samples;
  const long n = static_cast<long>(x.size());
  auto argmax = [&](long lo, long hi) {
    lo = std::clamp(lo, 0L, n - 1);
    hi = std::clamp(hi, lo, n - 1);
    long best = lo;
    for (long i = lo; i <= hi; ++i) {
      if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
  };

  std::vector<PitchMark> marks;
  auto [period, voiced] = contour.at(0);
  long pos = voiced ? argmax(0, std::lround(period) - 1) : 0;
  while (pos < n) {
    std::tie(period, voiced) = contour.at(pos);
    marks.push_back({pos, period, voiced});
    long next = pos + std::max(1L, std::lround(period));
    if (next >= n) break;
    const auto [next_period, next_voiced] = contour.at(next);
    if (next_voiced) {
      // Snap to the waveform peak so every mark sits at the same phase.
      const double p = voiced ? period : next_period;
      next = argmax(pos + std::lround(0.75 * p), pos + std::lround(1.25 * p));
      if (next <= pos) next = pos + 1;
    }
    pos = next;
  }
  return marks;
}

AudioBuffer fit_length(AudioBuffer buffer, std::size_t n) {
  buffer.samples.resize(n, 0.0);
  return buffer;
}

AudioBuffer match_rms(AudioBuffer out, const AudioBuffer& reference) {
  const double target = audio::rms(reference);
  const double current = audio::rms(out);
  if (current > 0.0) {
    for (double& v : out.samples) v *= target / current;
  }
  return out;
}

void require_voiced(std::span<const PitchFrame> track) {
  const auto voiced = std::count_if(track.begin(), track.end(), [](const PitchFrame& f) { return f.voiced; });
  const double fraction = track.empty() ? 0.0 : static_cast<double>(voiced) / static_cast<double>(track.size());
  if (voiced == 0 || fraction < PitchTrackerOptions{}.min_voiced_fraction) {
    throw MorphError("voice manipulation needs voiced input: no voiced speech found");
  }
}

AudioBuffer psola(const AudioBuffer& buffer, double pitch_factor, std::vector<PitchFrame> track) {
  const PeriodContour contour(std::move(track), buffer.sample_rate);
  const auto marks = place_pitch_marks(buffer, contour);

  const auto& x = buffer.samples;
  const long n = static_cast<long>(x.size());
  std::vector<double> out(x.size(), 0.0);

  double synth = static_cast<double>(marks.front().position);
  std::size_t k = 0;
  std::vector<double> window;
  long window_half = -1;
  while (synth < static_cast<double>(n)) {
    // Nearest analysis mark to the synthesis instant (time scale is 1).
    while (k + 1 < marks.size() &&
           std::abs(static_cast<double>(marks[k + 1].position) - synth) <=
               std::abs(static_cast<double>(marks[k].position) - synth)) {
      ++k;
    }
    const PitchMark& mark = marks[k];
    const long half = std::max(1L, std::lround(mark.period));
    if (half != window_half) {
      window_half = half;
      window.resize(static_cast<std::size_t>(2 * half - 1));
      for (long j = -half + 1; j < half; ++j) {
        window[static_cast<std::size_t>(j + half - 1)] =
            0.5 + 0.5 * std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(half));
      }
    }
    const long dst_center = std::lround(synth);
    for (long j = -half + 1; j < half; ++j) {
      const long src = mark.position + j;
      const long dst = dst_center + j;
      if (src < 0 || src >= n || dst < 0 || dst >= n) continue;
      out[static_cast<std::size_t>(dst)] += window[static_cast<std::size_t>(j + half - 1)] * x[static_cast<std::size_t>(src)];
    }
    synth += mark.voiced ? mark.period / pitch_factor : mark.period;
  }

  AudioBuffer result{std::move(out), buffer.sample_rate};
  return match_rms(std::move(result), buffer);
}

}  // namespace

double semitone_to_ratio(double semitones) { return std::pow(2.0, semitones / 12.0); }

AudioBuffer psola_pitch_shift(const AudioBuffer& buffer, double pitch_factor) {
  if (!(pitch_factor >= 0.25 && pitch_factor <= 4.0)) {
    throw MorphError("pitch factor must lie in [0.25, 4]");
  }
  return psola(buffer, pitch_factor, track_f0(buffer));
}

AudioBuffer shift_f0(const AudioBuffer& buffer, double semitones) {
  return apply_voice(buffer, VoiceCondition{semitones, 0.0});
}

AudioBuffer shift_vtl(const AudioBuffer& buffer, double semitones) {
  return apply_voice(buffer, VoiceCondition{0.0, semitones});
}

AudioBuffer apply_voice(const AudioBuffer& buffer, const VoiceCondition& condition) {
  if (!std::isfinite(condition.delta_f0_st) || !std::isfinite(condition.delta_vtl_st)) {
    throw MorphError("semitone shifts must be finite");
  }
  std::vector<PitchFrame> track;
  try {
    track = track_f0(buffer);
  } catch (const MorphError& e) {
    throw MorphError(std::string("voice manipulation needs voiced input: ") + e.what());
  }
  return apply_voice(buffer, condition, track);
}

AudioBuffer apply_voice(const AudioBuffer& buffer, const VoiceCondition& condition,
                        std::span<const PitchFrame> track) {
  if (!std::isfinite(condition.delta_f0_st) || !std::isfinite(condition.delta_vtl_st)) {
    throw MorphError("semitone shifts must be finite");
  }
  require_voiced(track);
  const double f0_ratio = semitone_to_ratio(condition.delta_f0_st);
  const double vtl_ratio = semitone_to_ratio(condition.delta_vtl_st);

  AudioBuffer work = buffer;
  std::vector<PitchFrame> contour(track.begin(), track.end());
  if (condition.delta_vtl_st != 0.0) {
    // Scale the whole spectrum by 1/vtl_ratio, then restore duration. The
    // pitch change this causes is undone by the PSOLA stage below.
    work = audio::resample_linear(work, 1.0 / vtl_ratio);
    work = wsola_time_stretch(work, 1.0 / vtl_ratio);
    for (auto& f : contour) {
      if (f.voiced) f.hz /= vtl_ratio;
    }
  }
  work = psola(work, f0_ratio * vtl_ratio, std::move(contour));
  return match_rms(fit_length(std::move(work), buffer.size()), buffer);
}

}  // namespace crm::voice
