#include <algorithm>
#include <cmath>
#include <numbers>

#include "crm/voice/voice_morph.hpp"

namespace crm::voice {
namespace {

constexpr double kDecimatedRate = 11025.0;
// Among candidate lags, the shortest one within this fraction of the best
// correlation wins. Keeps period-doubling (octave-down) errors out.
constexpr double kOctaveGuard = 0.9;
constexpr double kTrackerCutoffHz = 1000.0;

struct Decimated {
  std::vector<double> samples;
  int factor = 1;
};

Decimated lowpass_decimate(const std::vector<double>& x, int sample_rate) {
  Decimated out;
  out.factor = std::max(1, static_cast<int>(std::floor(sample_rate / kDecimatedRate + 1e-9)));
  const int d = out.factor;
  if (d == 1) {
    out.samples = x;
    return out;
  }
  // Windowed-sinc lowpass at 1 kHz: periodicity is judged on the lowest
  // harmonics, where integer-lag quantization costs little correlation.
  const int half = 16 * d;
  const double cutoff = kTrackerCutoffHz / sample_rate;  // cycles per input sample
  std::vector<double> taps(2 * half + 1);
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double sinc = k == 0 ? 2.0 * cutoff
                               : std::sin(2.0 * std::numbers::pi * cutoff * k) / (std::numbers::pi * k);
    const double w = 0.5 + 0.5 * std::cos(std::numbers::pi * k / (half + 1));
    taps[k + half] = sinc * w;
    sum += taps[k + half];
  }
  for (double& t : taps) t /= sum;

  const auto n = static_cast<long>(x.size());
  out.samples.resize(static_cast<std::size_t>((n + d - 1) / d));
  for (std::size_t m = 0; m < out.samples.size(); ++m) {
    const long center = static_cast<long>(m) * d;
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) {
      const long i = center + k;
      if (i >= 0 && i < n) acc += taps[k + half] * x[static_cast<std::size_t>(i)];
    }
    out.samples[m] = acc;
  }
  return out;
}

double energy(const std::vector<double>& x, std::size_t from, std::size_t len) {
  double e = 0.0;
  for (std::size_t i = from; i < from + len; ++i) e += x[i] * x[i];
  return e;
}

double nccf_at(const std::vector<double>& x, std::size_t start, std::size_t width, std::size_t lag,
               double e0) {
  double c = 0.0;
  double el = 0.0;
  for (std::size_t i = start; i < start + width; ++i) {
    c += x[i] * x[i + lag];
    el += x[i + lag] * x[i + lag];
  }
  const double denom = std::sqrt(e0 * el);
  return denom > 0.0 ? c / denom : 0.0;
}

}  // namespace

std::vector<PitchFrame> track_f0(const AudioBuffer& buffer, const PitchTrackerOptions& opt) {
  if (buffer.duration_seconds() < 0.1) {
    throw MorphError("pitch tracking needs at least 100 ms of audio");
  }
  const double fs = buffer.sample_rate;
  const Decimated dec = lowpass_decimate(buffer.samples, buffer.sample_rate);
  const auto& xd = dec.samples;
  const double fsd = fs / dec.factor;

  const auto width_d = static_cast<std::size_t>(std::lround(opt.frame_ms * fsd / 1000.0));
  const auto hop_d = std::max<std::size_t>(1, std::lround(opt.hop_ms * fsd / 1000.0));
  const auto lag_min = static_cast<std::size_t>(std::floor(fsd / opt.max_hz));
  const auto lag_max = static_cast<std::size_t>(std::ceil(fsd / opt.min_hz));
  if (lag_min < 2 || lag_max <= lag_min) throw MorphError("invalid pitch search range");

  std::vector<std::size_t> starts;
  for (std::size_t n0 = 0; n0 + width_d + lag_max + 1 < xd.size(); n0 += hop_d) starts.push_back(n0);
  if (starts.empty()) throw MorphError("buffer too short for the pitch search range");

  std::vector<double> frame_energy(starts.size());
  double loudest = 0.0;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    frame_energy[f] = energy(xd, starts[f], width_d);
    loudest = std::max(loudest, frame_energy[f]);
  }
  const double gate = loudest * std::pow(10.0, opt.silence_db / 10.0);

  const std::size_t d = static_cast<std::size_t>(dec.factor);
  const std::size_t width_full = width_d * d;
  std::vector<double> r(lag_max + 2);
  std::vector<PitchFrame> frames;
  frames.reserve(starts.size());

  for (std::size_t f = 0; f < starts.size(); ++f) {
    const std::size_t n0 = starts[f];
    PitchFrame frame;
    frame.center_s = (static_cast<double>(n0 * d) + 0.5 * static_cast<double>(width_full)) / fs;
    const double e0 = frame_energy[f];
    if (e0 <= 0.0 || e0 < gate) {
      frames.push_back(frame);
      continue;
    }

    // Normalized cross-correlation with a sliding energy term.
    double el = energy(xd, n0 + lag_min - 1, width_d);
    for (std::size_t lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      if (lag > lag_min - 1) {
        const double out = xd[n0 + lag - 1];
        const double in = xd[n0 + lag - 1 + width_d];
        el = std::max(0.0, el - out * out + in * in);
      }
      double c = 0.0;
      for (std::size_t i = 0; i < width_d; ++i) c += xd[n0 + i] * xd[n0 + i + lag];
      const double denom = std::sqrt(e0 * el);
      r[lag] = denom > 0.0 ? c / denom : 0.0;
    }

    // Peak heights are parabolic-interpolated so that off-grid periods are
    // not penalized relative to their (better aligned) multiples.
    auto is_peak = [&](std::size_t lag) { return r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]; };
    auto height = [&](std::size_t lag) {
      const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
      const double curvature = a - 2.0 * b + c;
      return curvature < 0.0 ? b - 0.125 * (a - c) * (a - c) / curvature : b;
    };
    double best = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (is_peak(lag)) best = std::max(best, height(lag));
    }
    if (best < opt.voicing_threshold) {
      frame.clarity = best;
      frames.push_back(frame);
      continue;
    }
    std::size_t chosen = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (is_peak(lag) && height(lag) >= kOctaveGuard * best) {
        chosen = lag;
        break;
      }
    }

    // Refine on the full-rate signal around the coarse lag.
    const auto& x = buffer.samples;
    const std::size_t start_full = n0 * d;
    const double e_full = energy(x, start_full, width_full);
    const std::size_t lo = chosen * d > d + 1 ? chosen * d - d - 1 : 1;
    const std::size_t hi = chosen * d + d + 1;
    std::size_t best_lag = lo;
    double best_r = -2.0;
    std::vector<double> rf(hi + 2, 0.0);
    for (std::size_t lag = lo - 1; lag <= hi + 1; ++lag) {
      if (start_full + width_full + lag > x.size()) break;
      rf[lag] = nccf_at(x, start_full, width_full, lag, e_full);
      if (lag >= lo && lag <= hi && rf[lag] > best_r) {
        best_r = rf[lag];
        best_lag = lag;
      }
    }
    double lag_est = static_cast<double>(best_lag);
    if (start_full + width_full + best_lag + 1 <= x.size()) {
      const double a = rf[best_lag - 1];
      const double b = rf[best_lag];
      const double c = rf[best_lag + 1];
      const double curvature = a - 2.0 * b + c;
      if (curvature < 0.0) lag_est += 0.5 * (a - c) / curvature;
    }
    frame.hz = fs / lag_est;
    frame.clarity = best_r;
    frame.voiced = frame.hz >= opt.min_hz && frame.hz <= opt.max_hz;
    if (!frame.voiced) frame.hz = 0.0;
    frames.push_back(frame);
  }
  return frames;
}

F0Estimate estimate_f0(const AudioBuffer& buffer, const PitchTrackerOptions& options) {
  const auto frames = track_f0(buffer, options);
  std::vector<double> voiced;
  for (const auto& f : frames) {
    if (f.voiced) voiced.push_back(f.hz);
  }
  const double fraction = frames.empty() ? 0.0 : static_cast<double>(voiced.size()) / static_cast<double>(frames.size());
  if (voiced.empty() || fraction < options.min_voiced_fraction) {
    throw MorphError("no voiced speech found");
  }
  const auto mid = voiced.begin() + static_cast<long>(voiced.size() / 2);
  std::nth_element(voiced.begin(), mid, voiced.end());
  double median = *mid;
  if (voiced.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(voiced.begin(), mid));
  }
  return F0Estimate{median, fraction};
}

}  // namespace crm::voice
