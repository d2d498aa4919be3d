#include <cmath>
#include <numeric>

#include "crm/audio/spectrum.hpp"
#include "crm/calibration/calibration.hpp"

namespace crm::calibration {

std::vector<double> third_octave_centers() {
  std::vector<double> centers;
  for (int k = 20; k <= 40; ++k) centers.push_back(std::pow(10.0, k / 10.0));
  return centers;
}

double band_lower_edge(double center_hz) { return center_hz * std::pow(10.0, -1.0 / 20.0); }
double band_upper_edge(double center_hz) { return center_hz * std::pow(10.0, 1.0 / 20.0); }

namespace {

double power_to_db(double p) {
  if (!(p > 0.0)) return kFloorDb;
  return std::max(kFloorDb, 10.0 * std::log10(p));
}

}  // namespace

ThirdOctaveReport third_octave_levels(const audio::AudioBuffer& buffer, std::string label,
                                      audio::CalibrationOffset offset) {
  if (buffer.duration_seconds() < kMinAnalysisSeconds) {
    throw CalibrationError("third-octave analysis needs at least 1 s of audio");
  }
  const std::size_t n = buffer.size();
  const auto w = audio::hann_window(n);
  std::vector<double> x(n);
  double w2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = buffer.samples[i] * w[i];
    w2 += w[i] * w[i];
  }
  const auto bins = audio::real_fft(x);
  const double df = static_cast<double>(buffer.sample_rate) / static_cast<double>(n);
  // One-sided mean-square density normalised for window energy.
  const double scale = 2.0 / (static_cast<double>(n) * w2);

  ThirdOctaveReport report;
  report.label = std::move(label);
  double total = 0.0;
  for (double fc : third_octave_centers()) {
    const double lo = band_lower_edge(fc);
    const double hi = band_upper_edge(fc);
    const auto first = static_cast<std::size_t>(std::ceil(lo / df));
    double p = 0.0;
    for (std::size_t k = first; k < bins.size() && static_cast<double>(k) * df < hi; ++k) {
      p += std::norm(bins[k]) * scale;
    }
    total += p;
    const double db = power_to_db(p);
    report.bands.push_back({fc, db == kFloorDb ? kFloorDb : db + offset.db});
  }
  const double overall = power_to_db(total);
  report.overall_db = overall == kFloorDb ? kFloorDb : overall + offset.db;
  return report;
}

}  // namespace crm::calibration
