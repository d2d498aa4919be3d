#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crm/audio/audio_buffer.hpp"

namespace crm::calibration {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Band levels below this are reported as the floor.
inline constexpr double kFloorDb = -150.0;
inline constexpr double kMinAnalysisSeconds = 1.0;
inline constexpr std::size_t kSpectrumFrame = 4096;
inline constexpr double kFlagThresholdDb = 6.0;

struct BandLevel {
  double center_hz = 0.0;
  double level_db = kFloorDb;
};

struct ThirdOctaveReport {
  std::string label;
  std::vector<BandLevel> bands;
  double overall_db = kFloorDb;
};

// Base-10 nominal centres 10^(k/10), 100 Hz to 10 kHz (21 bands).
[[nodiscard]] std::vector<double> third_octave_centers();
[[nodiscard]] double band_lower_edge(double center_hz);
[[nodiscard]] double band_upper_edge(double center_hz);

// Hann-windowed FFT power binned at the exact band edges. Levels are dB FS
// plus the offset; overall_db is the power sum of the bands.
[[nodiscard]] ThirdOctaveReport third_octave_levels(const audio::AudioBuffer& buffer,
                                                    std::string label = {},
                                                    audio::CalibrationOffset offset = {});

// Power-averaged magnitude spectrum over 4096-sample Hann frames (50% overlap)
// of every buffer; kSpectrumFrame / 2 + 1 bins.
[[nodiscard]] std::vector<double> average_magnitude_spectrum(
    std::span<const audio::AudioBuffer> corpus);

// White Gaussian noise shaped in the frequency domain by the corpus average
// spectrum and scaled to the corpus mean power.
[[nodiscard]] audio::AudioBuffer shaped_noise(std::span<const audio::AudioBuffer> corpus,
                                              double duration_s, std::uint64_t seed);

struct BandFlag {
  std::string label;
  double center_hz = 0.0;
  double deviation_db = 0.0;
};

// Series re-referenced so every overall level equals target_spl. The first
// series is the reference shape; deviations are per band against it.
struct CalibrationReport {
  double target_spl = 65.0;
  std::vector<double> centers_hz;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> levels_spl;
  std::vector<std::vector<double>> deviations_db;
  std::vector<BandFlag> flags;
};

[[nodiscard]] CalibrationReport calibration_report(std::span<const ThirdOctaveReport> series,
                                                   audio::DbSpl target_spl);

// band_hz, one level column per series, then <label>_dev per series.
[[nodiscard]] std::string report_to_csv(const CalibrationReport& report);

}  // namespace crm::calibration
