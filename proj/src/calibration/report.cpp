#include <cmath>
#include <cstdio>
#include <sstream>

#include "crm/calibration/calibration.hpp"

namespace crm::calibration {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

CalibrationReport calibration_report(std::span<const ThirdOctaveReport> series, audio::DbSpl target_spl) {
  if (series.empty()) throw CalibrationError("calibration report needs at least one series");
  const auto& grid = series.front().bands;
  for (const auto& s : series) {
    bool same = s.bands.size() == grid.size();
    for (std::size_t b = 0; same && b < grid.size(); ++b) {
      same = std::abs(s.bands[b].center_hz - grid[b].center_hz) < 1e-6 * grid[b].center_hz;
    }
    if (!same) throw CalibrationError("series '" + s.label + "' uses a different band grid");
    if (s.overall_db <= kFloorDb) throw CalibrationError("series '" + s.label + "' is silent");
  }

  CalibrationReport report;
  report.target_spl = target_spl.value;
  for (const auto& b : grid) report.centers_hz.push_back(b.center_hz);
  for (const auto& s : series) {
    report.labels.push_back(s.label);
    std::vector<double> levels;
    const double shift = target_spl.value - s.overall_db;
    for (const auto& b : s.bands) levels.push_back(b.level_db + shift);
    report.levels_spl.push_back(std::move(levels));
  }
  const auto& ref = report.levels_spl.front();
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<double> dev;
    for (std::size_t b = 0; b < ref.size(); ++b) {
      dev.push_back(report.levels_spl[i][b] - ref[b]);
      if (std::abs(dev.back()) > kFlagThresholdDb) {
        report.flags.push_back({report.labels[i], report.centers_hz[b], dev.back()});
      }
    }
    report.deviations_db.push_back(std::move(dev));
  }
  return report;
}

std::string report_to_csv(const CalibrationReport& report) {
  std::ostringstream out;
  out << "band_hz";
  for (const auto& l : report.labels) out << ',' << l;
  for (const auto& l : report.labels) out << ',' << l << "_dev";
  out << '\n';
  for (std::size_t b = 0; b < report.centers_hz.size(); ++b) {
    out << fixed(report.centers_hz[b], 1);
    for (const auto& s : report.levels_spl) out << ',' << fixed(s[b], 2);
    for (const auto& s : report.deviations_db) out << ',' << fixed(s[b], 2);
    out << '\n';
  }
  return out.str();
}

}  // namespace crm::calibration
