#include <algorithm>
#include <cmath>

#include "crm/audio/spectrum.hpp"
#include "crm/voice/voice_morph.hpp"

namespace crm::voice {
namespace {

// Zero-padded copy of the input so frames may hang over either end.
class PaddedSignal {
 public:
  PaddedSignal(const std::vector<double>& x, long pad) : pad_(pad), x_(x.size() + 2 * static_cast<std::size_t>(pad), 0.0) {
    std::copy(x.begin(), x.end(), x_.begin() + pad);
  }

  [[nodiscard]] long size() const { return static_cast<long>(x_.size()) - 2 * pad_; }

  [[nodiscard]] double at(long i) const {
    return i >= -pad_ && i < size() + pad_ ? x_[static_cast<std::size_t>(i + pad_)] : 0.0;
  }

  /// Normalized similarity between the segments starting at a and b. Both
  /// segments must lie inside the padding.
  [[nodiscard]] double similarity(long a, long b, long len, long stride) const {
    const double* pa = x_.data() + a + pad_;
    const double* pb = x_.data() + b + pad_;
    double c = 0.0;
    double eb = 0.0;
    for (long i = 0; i < len; i += stride) {
      c += pa[i] * pb[i];
      eb += pb[i] * pb[i];
    }
    return eb > 0.0 ? c / std::sqrt(eb) : 0.0;
  }

 private:
  long pad_;
  std::vector<double> x_;
};

}  // namespace

AudioBuffer wsola_time_stretch(const AudioBuffer& buffer, double factor, const WsolaOptions& opt) {
  if (!(factor >= 0.25 && factor <= 4.0)) {
    throw MorphError("time-stretch factor must lie in [0.25, 4]");
  }
  const double fs = buffer.sample_rate;
  const long hop = std::max(1L, std::lround(opt.hop_ms * fs / 1000.0));
  // Frame is twice the hop so the Hann windows overlap-add to exactly one.
  const long frame = std::max(2 * hop, 2 * ((std::lround(opt.frame_ms * fs / 1000.0) + 1) / 2));
  const long tolerance = std::lround(opt.tolerance_ms * fs / 1000.0);
  const long overlap = frame - hop;

  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  const auto n_out = static_cast<long>(std::llround(factor * static_cast<double>(buffer.size())));
  if (n_out == 0) return out;

  const auto window = audio::hann_window(static_cast<std::size_t>(frame));
  const PaddedSignal x(buffer.samples, 2 * frame + 2 * tolerance + hop);
  std::vector<double> acc(static_cast<std::size_t>(n_out + frame), 0.0);

  // Output frame k covers [k*hop - hop, k*hop - hop + frame).
  long previous = -hop;
  for (long k = 0;; ++k) {
    const long out_pos = k * hop - hop;
    if (out_pos >= n_out) break;

    long start = -hop;
    if (k > 0) {
      const long nominal = std::lround(static_cast<double>(out_pos) / factor);
      const long natural = previous + hop;
      // Coarse search on a decimated grid, then refine around the winner.
      long best = nominal;
      double best_score = -1e300;
      for (long delta = -tolerance; delta <= tolerance; delta += 4) {
        const double s = x.similarity(natural, nominal + delta, overlap, 4);
        if (s > best_score) {
          best_score = s;
          best = nominal + delta;
        }
      }
      const long coarse = best;
      best_score = -1e300;
      for (long cand = std::max(nominal - tolerance, coarse - 3);
           cand <= std::min(nominal + tolerance, coarse + 3); ++cand) {
        const double s = x.similarity(natural, cand, overlap, 1);
        if (s > best_score) {
          best_score = s;
          best = cand;
        }
      }
      start = best;
    }

    for (long i = 0; i < frame; ++i) {
      const long dst = out_pos + i;
      if (dst < 0) continue;
      acc[static_cast<std::size_t>(dst)] += window[static_cast<std::size_t>(i)] * x.at(start + i);
    }
    previous = start;
  }

  out.samples.assign(acc.begin(), acc.begin() + n_out);
  return out;
}

}  // namespace crm::voice
