#include "crm/audio/audio_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace crm::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

std::int16_t quantize(double x) {
  const double scaled = std::round(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace

std::size_t samples_for(double seconds, int sample_rate) {
  if (seconds <= 0.0) return 0;
  return static_cast<std::size_t>(std::llround(seconds * static_cast<double>(sample_rate)));
}

AudioBuffer decode_wav(const std::string& b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw AudioError("not a RIFF/WAVE stream");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::uint32_t len = read_u32(b, pos + 4);
    const std::size_t body = pos + 8;

    if (id == "fmt ") {
      if (len < 16 || body + len > b.size()) throw AudioError("truncated fmt chunk");
      std::uint16_t format = read_u16(b, body);
      channels = read_u16(b, body + 2);
      rate = read_u32(b, body + 4);
      bits = read_u16(b, body + 14);
      if (format == kFormatExtensible && len >= 26) format = read_u16(b, body + 24);
      if (format != kFormatPcm) {
        throw AudioError("unsupported WAV encoding (format tag " + std::to_string(format) +
                         "); only linear PCM is accepted");
      }
      if (channels != 1) {
        throw AudioError("expected mono WAV, found " + std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw AudioError("expected 16-bit samples, found " + std::to_string(bits) + "-bit");
      }
      if (rate == 0) throw AudioError("WAV sample rate is zero");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw AudioError("data chunk precedes fmt chunk");
      if (body + len > b.size()) throw AudioError("truncated data chunk");
      if (len % 2 != 0) throw AudioError("data chunk holds a partial sample");
      AudioBuffer out;
      out.sample_rate = static_cast<int>(rate);
      out.samples.resize(len / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(b, body + 2 * i));
        out.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return out;
    }
    // Chunks are word aligned.
    pos = body + len + (len & 1u);
  }
  throw AudioError(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const AudioError& e) {
    throw AudioError(path.string() + ": " + e.what());
  }
}

std::string encode_wav(const AudioBuffer& buffer) {
  if (buffer.sample_rate <= 0) throw AudioError("sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(buffer.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double x : buffer.samples) put_u16(out, static_cast<std::uint16_t>(quantize(x)));
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer) {
  const std::string bytes = encode_wav(buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw AudioError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw AudioError("short write to " + path.string());
}

}  // namespace crm::audio
