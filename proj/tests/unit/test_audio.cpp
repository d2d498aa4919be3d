#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "crm/audio/audio_buffer.hpp"
#include "crm/audio/spectrum.hpp"
#include "support/signals.hpp"

using namespace crm;
using audio::AudioBuffer;
using audio::DbFs;

namespace {

// Hand-assembled canonical 44-byte header + little-endian samples.
std::string raw_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                    std::uint16_t bits, const std::vector<std::int16_t>& samples,
                    std::uint32_t declared_data_bytes = 0xFFFFFFFF) {
  auto u32 = [](std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [](std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
  };
  const std::uint32_t data = static_cast<std::uint32_t>(samples.size() * 2);
  std::string s = "RIFF";
  u32(s, 36 + data);
  s += "WAVEfmt ";
  u32(s, 16);
  u16(s, format);
  u16(s, channels);
  u32(s, rate);
  u32(s, rate * channels * bits / 8);
  u16(s, static_cast<std::uint16_t>(channels * bits / 8));
  u16(s, bits);
  s += "data";
  u32(s, declared_data_bytes == 0xFFFFFFFF ? data : declared_data_bytes);
  for (auto v : samples) u16(s, static_cast<std::uint16_t>(v));
  return s;
}

AudioBuffer constant(double v, std::size_t n) { return AudioBuffer{std::vector<double>(n, v), 44100}; }

}  // namespace

TEST_CASE("decode_wav scales 16-bit PCM by 1/32768") {
  const auto b = audio::decode_wav(raw_wav(1, 1, 44100, 16, {16384}));
  REQUIRE(b.size() == 1);
  CHECK(b.samples[0] == 0.5);
  CHECK(b.sample_rate == 44100);
}

TEST_CASE("one second of samples at 44.1 kHz lasts 1.0 s") {
  const auto b = audio::decode_wav(raw_wav(1, 1, 44100, 16, std::vector<std::int16_t>(44100, 0)));
  CHECK(b.duration_seconds() == 1.0);
}

TEST_CASE("decode_wav rejects unsupported inputs") {
  CHECK_THROWS_WITH_AS(audio::decode_wav(raw_wav(1, 2, 44100, 16, {0, 0})),
                       doctest::Contains("mono"), audio::AudioError);
  CHECK_THROWS_WITH_AS(audio::decode_wav(raw_wav(3, 1, 44100, 16, {0})),
                       doctest::Contains("encoding"), audio::AudioError);
  CHECK_THROWS_WITH_AS(audio::decode_wav(raw_wav(1, 1, 44100, 8, {0})),
                       doctest::Contains("16-bit"), audio::AudioError);
  CHECK_THROWS_WITH_AS(audio::decode_wav(raw_wav(1, 1, 44100, 16, {1, 2}, 400)),
                       doctest::Contains("truncated"), audio::AudioError);
  CHECK_THROWS_AS(audio::decode_wav("RIFF"), audio::AudioError);
  CHECK_THROWS_AS(audio::read_wav("/nonexistent/file.wav"), audio::AudioError);
}

TEST_CASE("decode_wav skips unknown chunks") {
  std::string s = raw_wav(1, 1, 22050, 16, {100, -100});
  // Splice a LIST chunk with odd length (plus pad byte) between fmt and data.
  s.insert(36, std::string("LIST\x03\x00\x00\x00" "abc\x00", 12));
  const auto b = audio::decode_wav(s);
  CHECK(b.sample_rate == 22050);
  CHECK(b.size() == 2);
}

TEST_CASE("write/read round trip is lossless within one quantization step") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(0, 5000);
  const auto path = std::filesystem::temp_directory_path() / "crm_roundtrip.wav";
  for (int trial = 0; trial < 25; ++trial) {
    AudioBuffer b;
    b.sample_rate = trial % 2 ? 44100 : 16000;
    b.samples.resize(length(gen));
    for (double& x : b.samples) x = value(gen);
    audio::write_wav(path, b);
    const auto r = audio::read_wav(path);
    REQUIRE(r.size() == b.size());
    CHECK(r.sample_rate == b.sample_rate);
    for (std::size_t i = 0; i < b.size(); ++i) {
      REQUIRE(std::abs(r.samples[i] - b.samples[i]) <= 1.0 / 32768.0);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("rms_level_db") {
  CHECK(audio::rms_level_db(constant(1.0, 100)).value == doctest::Approx(0.0));
  CHECK(audio::rms_level_db(constant(0.5, 100)).value == doctest::Approx(-6.0206).epsilon(1e-5));
  CHECK(audio::rms_level_db(testing::sine(1000.0, 1.0)).value ==
        doctest::Approx(-3.0103).epsilon(1e-5));
  CHECK(std::isinf(audio::rms_level_db(constant(0.0, 10)).value));
  CHECK(audio::rms_level_db(constant(0.0, 10)).value < 0);
  CHECK_THROWS_AS(audio::rms_level_db(AudioBuffer{}), audio::AudioError);
}

TEST_CASE("levels with different references only meet through a calibration offset") {
  const audio::CalibrationOffset cal{91.0};
  const DbFs fs{-26.0};
  CHECK(audio::to_spl(fs, cal).value == doctest::Approx(65.0));
  CHECK(audio::to_full_scale(audio::to_spl(fs, cal), cal) == fs);
  static_assert(!std::is_convertible_v<audio::DbSpl, DbFs>);
}

TEST_CASE("raised-cosine ramps") {
  const auto ramped = audio::apply_raised_cosine_ramps(constant(1.0, 44100), 50.0);
  const std::size_t T = 2205;
  CHECK(ramped.samples.front() == 0.0);
  CHECK(ramped.samples[T / 2 + 0] == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(ramped.samples[T] == 1.0);
  CHECK(ramped.samples[22050] == 1.0);
  CHECK(ramped.samples.back() == ramped.samples.front());
  CHECK(ramped.samples[44100 - 1 - 100] == doctest::Approx(ramped.samples[100]));

  // Energy of a raised-cosine ramp: integral of (0.5(1-cos))^2 over T is 3T/8.
  double energy = 0.0;
  for (std::size_t i = 0; i < T; ++i) energy += ramped.samples[i] * ramped.samples[i];
  CHECK(energy / static_cast<double>(T) == doctest::Approx(3.0 / 8.0).epsilon(1e-3));

  CHECK_THROWS_AS(audio::apply_raised_cosine_ramps(constant(1.0, 4409), 50.0), audio::AudioError);
  CHECK_NOTHROW(audio::apply_raised_cosine_ramps(constant(1.0, 4410), 50.0));
}

TEST_CASE("ramping never increases peak amplitude") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = testing::white_noise(0.2 + 0.01 * trial, static_cast<unsigned>(trial), 0.3);
    CHECK(audio::peak(audio::apply_raised_cosine_ramps(b, 50.0)) <= audio::peak(b));
  }
}

TEST_CASE("scale_to_rms") {
  // Amplitude 0.25 (-12.04 dB FS) to amplitude 0.5 (-6.02 dB FS) doubles the gain.
  const auto quarter = constant(0.25, 1000);
  const auto doubled = audio::scale_to_rms(quarter, DbFs{20.0 * std::log10(0.5)});
  CHECK(doubled.samples[0] / quarter.samples[0] == doctest::Approx(2.0).epsilon(1e-9));

  // Exactly -12 to exactly -6 dB FS: a 6 dB step is 10^(6/20).
  const auto at_minus12 = constant(std::pow(10.0, -12.0 / 20.0), 1000);
  const auto at_minus6 = audio::scale_to_rms(at_minus12, DbFs{-6.0});
  CHECK(std::abs(at_minus6.samples[0] / at_minus12.samples[0] - std::pow(10.0, 0.3)) < 1e-6);

  const auto noise = testing::white_noise(0.5, 3);
  const auto same = audio::scale_to_rms(noise, audio::rms_level_db(noise));
  for (std::size_t i = 0; i < noise.size(); i += 97) CHECK(std::abs(same.samples[i] - noise.samples[i]) < 1e-9);

  const auto scaled = audio::scale_to_rms(noise, DbFs{-20.0});
  CHECK(std::abs(audio::rms_level_db(scaled).value + 20.0) < 0.01);
  // Idempotent at the target level.
  const auto again = audio::scale_to_rms(scaled, DbFs{-20.0});
  CHECK(std::abs(audio::rms_level_db(again).value + 20.0) < 1e-9);

  CHECK_THROWS_AS(audio::scale_to_rms(constant(0.0, 10), DbFs{-6.0}), audio::AudioError);
}

TEST_CASE("resample_linear") {
  const auto s = testing::sine(440.0, 0.5);
  CHECK(audio::resample_linear(s, 1.0) == s);

  const auto up = audio::resample_linear(s, 2.0);
  CHECK(up.size() == s.size() / 2);
  const double f = testing::dominant_frequency(up, 400.0, 1200.0, 1.0);
  CHECK(std::abs(f - 880.0) / 880.0 < 0.01);

  const auto down = audio::resample_linear(s, 0.5);
  CHECK(std::abs(static_cast<long>(down.size()) - 2 * static_cast<long>(s.size())) <= 1);

  CHECK_THROWS_AS(audio::resample_linear(s, 0.2), audio::AudioError);
  CHECK_THROWS_AS(audio::resample_linear(s, 4.5), audio::AudioError);
}

TEST_CASE("resampling there and back preserves duration within 2 samples") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> ratio(0.25, 4.0);
  std::uniform_int_distribution<std::size_t> length(1, 20000);
  for (int trial = 0; trial < 200; ++trial) {
    AudioBuffer b{std::vector<double>(length(gen), 0.1), 44100};
    const double r = ratio(gen);
    const auto back = audio::resample_linear(audio::resample_linear(b, r), 1.0 / r);
    CHECK(std::abs(static_cast<long>(back.size()) - static_cast<long>(b.size())) <= 2);
  }
}

TEST_CASE("real_fft agrees with a direct DFT and inverts") {
  std::mt19937 gen(3);
  std::normal_distribution<double> g;
  for (std::size_t n : {1u, 2u, 7u, 64u, 1000u}) {
    std::vector<double> x(n);
    for (double& v : x) v = g(gen);
    const auto bins = audio::real_fft(x);
    REQUIRE(bins.size() == n / 2 + 1);
    for (std::size_t k = 0; k < bins.size(); ++k) {
      std::complex<double> direct{0, 0};
      for (std::size_t i = 0; i < n; ++i) {
        direct += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
      }
      CHECK(std::abs(bins[k] - direct) < 1e-9 * (1.0 + std::abs(direct)));
    }
    const auto back = audio::inverse_real_fft(bins, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
}
