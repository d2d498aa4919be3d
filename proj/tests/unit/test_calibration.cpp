#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crm/calibration/calibration.hpp"
#include "crm/stimulus/corpus.hpp"
#include "support/signals.hpp"

using namespace crm;
using namespace crm::calibration;

namespace {

double band_level(const ThirdOctaveReport& r, double center) {
  for (const auto& b : r.bands) {
    if (std::abs(b.center_hz - center) < 0.01 * center) return b.level_db;
  }
  throw std::runtime_error("no band");
}

// Blackman-windowed sinc lowpass, applied by direct convolution.
audio::AudioBuffer lowpass(const audio::AudioBuffer& in, double cutoff_hz, int taps = 511) {
  const double fc = cutoff_hz / in.sample_rate;
  const int half = taps / 2;
  std::vector<double> h(taps);
  for (int i = 0; i < taps; ++i) {
    const int m = i - half;
    const double sinc = m == 0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double a = 2.0 * std::numbers::pi * i / (taps - 1);
    h[i] = sinc * (0.42 - 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a));
  }
  audio::AudioBuffer out{std::vector<double>(in.size(), 0.0), in.sample_rate};
  for (std::size_t n = 0; n < in.size(); ++n) {
    double acc = 0.0;
    for (int i = 0; i < taps; ++i) {
      const long j = static_cast<long>(n) + half - i;
      if (j >= 0 && j < static_cast<long>(in.size())) acc += h[i] * in.samples[j];
    }
    out.samples[n] = acc;
  }
  return out;
}

audio::AudioBuffer concat(std::span<const audio::AudioBuffer> parts) {
  audio::AudioBuffer out{{}, parts.front().sample_rate};
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

}  // namespace

TEST_CASE("third-octave band grid") {
  const auto c = third_octave_centers();
  REQUIRE(c.size() == 21);
  CHECK(c.front() == doctest::Approx(100.0));
  CHECK(c[10] == doctest::Approx(1000.0));
  CHECK(c.back() == doctest::Approx(10000.0));
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK(band_lower_edge(c[i]) == doctest::Approx(band_upper_edge(c[i - 1])));
    CHECK(c[i] / c[i - 1] == doctest::Approx(std::pow(10.0, 0.1)));
  }
}

TEST_CASE("single tone lands in its band") {
  // -3 dB FS RMS: amplitude sqrt(2) * 10^(-3/20).
  const double amplitude = std::sqrt(2.0) * std::pow(10.0, -3.0 / 20.0);
  const auto tone = testing::sine(1000.0, 2.0, amplitude);
  const auto r = third_octave_levels(tone);
  CHECK(std::abs(band_level(r, 1000.0) + 3.0) <= 0.5);
  for (const auto& b : r.bands) {
    if (std::abs(b.center_hz - 1000.0) > 1.0) {
      CAPTURE(b.center_hz);
      CHECK(b.level_db <= -40.0);
    }
  }
  CHECK(std::abs(r.overall_db + 3.0) <= 0.2);
}

TEST_CASE("white noise rises with band width") {
  const double sd = 0.1;
  const auto noise = testing::white_noise(20.0, 5, sd);
  const auto r = third_octave_levels(noise);
  // Expected band power: variance times the band's share of the 0..fs/2 range.
  for (const auto& b : r.bands) {
    const double width = band_upper_edge(b.center_hz) - band_lower_edge(b.center_hz);
    const double expected = 10.0 * std::log10(sd * sd * width / (testing::kFs / 2.0));
    CAPTURE(b.center_hz);
    CHECK(std::abs(b.level_db - expected) < (b.center_hz < 300.0 ? 1.0 : 0.5));
  }
  const double slope = (r.bands.back().level_db - r.bands.front().level_db) / 20.0;
  CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("silence and short input") {
  audio::AudioBuffer silence{std::vector<double>(44100, 0.0), 44100};
  const auto r = third_octave_levels(silence);
  for (const auto& b : r.bands) CHECK(b.level_db == kFloorDb);
  CHECK(r.overall_db == kFloorDb);
  CHECK_THROWS_AS(third_octave_levels(testing::sine(1000.0, 0.5)), CalibrationError);
}

TEST_CASE("band power sum equals wideband power for band-limited signals") {
  auto mix = testing::sine(200.0, 1.5, 0.3);
  const auto b = testing::sine(1000.0, 1.5, 0.2);
  const auto c = testing::sine(5000.0, 1.5, 0.1);
  for (std::size_t i = 0; i < mix.size(); ++i) mix.samples[i] += b.samples[i] + c.samples[i];
  const auto r = third_octave_levels(mix);
  CHECK(std::abs(r.overall_db - audio::rms_level_db(mix).value) < 0.5);
  double sum = 0.0;
  for (const auto& band : r.bands) sum += std::pow(10.0, band.level_db / 10.0);
  CHECK(std::abs(10.0 * std::log10(sum) - r.overall_db) < 0.2);
}

TEST_CASE("SPL offset shifts every band") {
  const auto tone = testing::sine(500.0, 1.0, 0.5);
  const auto fs = third_octave_levels(tone, "fs");
  const auto spl = third_octave_levels(tone, "spl", audio::CalibrationOffset{94.0});
  for (std::size_t i = 0; i < fs.bands.size(); ++i) {
    if (fs.bands[i].level_db > kFloorDb) CHECK(spl.bands[i].level_db == doctest::Approx(fs.bands[i].level_db + 94.0));
  }
  CHECK(spl.label == "spl");
}

TEST_CASE("shaped noise from a flat corpus is flat") {
  const std::vector<audio::AudioBuffer> corpus{testing::white_noise(3.0, 11, 0.05)};
  const auto out = shaped_noise(corpus, 20.0, 3);
  CHECK(out.size() == 882000);
  const auto r = third_octave_levels(out);
  const auto ref = third_octave_levels(corpus.front());
  for (std::size_t i = 0; i < r.bands.size(); ++i) {
    CAPTURE(r.bands[i].center_hz);
    CHECK(std::abs(r.bands[i].level_db - ref.bands[i].level_db) <= 2.0);
  }
  CHECK(std::abs(audio::rms_level_db(out).value - audio::rms_level_db(corpus.front()).value) < 0.01);
}

TEST_CASE("shaped noise follows a lowpass reference") {
  const std::vector<audio::AudioBuffer> corpus{lowpass(testing::white_noise(2.0, 21, 0.2), 1000.0)};
  const auto out = shaped_noise(corpus, 10.0, 4);
  const auto r = third_octave_levels(out);
  const double pass = band_level(r, 501.187);
  for (const auto& b : r.bands) {
    if (b.center_hz >= 1990.0) {
      CAPTURE(b.center_hz);
      CHECK(pass - b.level_db >= 20.0);
    }
  }
}

TEST_CASE("average magnitude spectrum of a bin-centred sine") {
  // Sine at bin k of a 4096-point Hann frame: |X_k| = A/2 * sum(w) = A * 1024.
  const double hz = 93.0 * 44100.0 / 4096.0;
  const std::vector<audio::AudioBuffer> corpus{testing::sine(hz, 1.0, 0.5), testing::sine(hz, 0.3, 0.5)};
  const auto mag = average_magnitude_spectrum(corpus);
  REQUIRE(mag.size() == 2049);
  CHECK(mag[93] == doctest::Approx(0.5 * 1024.0).epsilon(0.02));
  CHECK(mag[92] == doctest::Approx(0.25 * 1024.0).epsilon(0.02));
  CHECK(mag[200] < 1e-3 * mag[93]);
}

TEST_CASE("shaped noise matches the corpus average spectrum per band") {
  stimulus::SyntheticCorpusOptions o;
  o.duration_scale = 0.6;
  std::vector<audio::AudioBuffer> corpus;
  for (const auto& s : stimulus::synthesize_corpus(o)) corpus.push_back(s.audio);
  corpus.resize(24);
  const auto mag = average_magnitude_spectrum(corpus);
  const auto out = shaped_noise(corpus, 30.0, 7);
  const auto got = third_octave_levels(out);

  // Reference band shape from the averaged spectrum (read as a piecewise-linear
  // function of frequency), pinned to the output's overall level.
  std::vector<double> ref;
  double total = 0.0;
  for (const auto& b : got.bands) {
    // Integrate the linearly interpolated magnitude squared on a 0.05 Hz grid.
    double p = 0.0;
    for (double f = band_lower_edge(b.center_hz); f < band_upper_edge(b.center_hz); f += 0.05) {
      const double pos = f * 4096.0 / 44100.0;
      const auto k = static_cast<std::size_t>(pos);
      const double m = mag[k] + (pos - k) * (mag[k + 1] - mag[k]);
      p += m * m;
    }
    ref.push_back(p);
    total += p;
  }
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double expected = 10.0 * std::log10(ref[i] / total) + got.overall_db;
    CAPTURE(got.bands[i].center_hz);
    CHECK(std::abs(got.bands[i].level_db - expected) <= 2.0);
  }

  // Against the full-resolution corpus spectrum the match holds wherever the
  // 10.8 Hz frame resolution does not smear the fundamental across a band edge.
  const auto direct = third_octave_levels(concat(corpus));
  for (std::size_t i = 0; i < direct.bands.size(); ++i) {
    if (direct.bands[i].center_hz < 300.0) continue;
    CAPTURE(direct.bands[i].center_hz);
    CHECK(std::abs(got.bands[i].level_db - direct.bands[i].level_db) <= 2.0);
  }
}

TEST_CASE("shaped noise determinism, duration and errors") {
  const std::vector<audio::AudioBuffer> corpus{testing::white_noise(1.0, 2)};
  CHECK(shaped_noise(corpus, 1.5, 9) == shaped_noise(corpus, 1.5, 9));
  CHECK_FALSE(shaped_noise(corpus, 1.5, 9) == shaped_noise(corpus, 1.5, 10));
  for (double d : {0.5, 1.0001, 2.34567}) {
    CHECK(std::abs(static_cast<double>(shaped_noise(corpus, d, 1).size()) - d * 44100.0) <= 1.0);
  }
  CHECK_THROWS_AS(shaped_noise(std::vector<audio::AudioBuffer>{}, 1.0, 1), CalibrationError);
}

TEST_CASE("calibration report") {
  const auto ref = third_octave_levels(testing::white_noise(2.0, 1), "reference");
  auto same = ref;
  same.label = "plain";
  auto dipped = ref;
  dipped.label = "embodied";
  dipped.bands[1].level_db -= 20.0;  // 125.9 Hz nominal 125
  double total = 0.0;
  for (const auto& b : dipped.bands) total += std::pow(10.0, b.level_db / 10.0);
  dipped.overall_db = 10.0 * std::log10(total);

  const std::vector<ThirdOctaveReport> series{ref, same, dipped};
  const auto rep = calibration_report(series, audio::DbSpl{65.0});
  REQUIRE(rep.labels.size() == 3);
  for (double d : rep.deviations_db[1]) CHECK(d == doctest::Approx(0.0));
  REQUIRE(rep.flags.size() == 1);
  CHECK(rep.flags[0].label == "embodied");
  CHECK(rep.flags[0].center_hz == doctest::Approx(125.89).epsilon(1e-3));
  CHECK(rep.flags[0].deviation_db < -19.0);

  for (const auto& levels : rep.levels_spl) {
    double p = 0.0;
    for (double l : levels) p += std::pow(10.0, l / 10.0);
    CHECK(10.0 * std::log10(p) == doctest::Approx(65.0));
  }

  const auto csv = report_to_csv(rep);
  CHECK(csv.starts_with("band_hz,reference,plain,embodied,reference_dev,plain_dev,embodied_dev\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);

  auto broken = ref;
  broken.bands.pop_back();
  const std::vector<ThirdOctaveReport> bad{ref, broken};
  CHECK_THROWS_AS(calibration_report(bad, audio::DbSpl{65.0}), CalibrationError);
  CHECK_THROWS_AS(calibration_report(std::vector<ThirdOctaveReport>{}, audio::DbSpl{65.0}), CalibrationError);
}
