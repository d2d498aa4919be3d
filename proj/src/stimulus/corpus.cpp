#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "crm/stimulus/corpus.hpp"

namespace crm::stimulus {
namespace {

struct Formants {
  double f1;
  double f2;
};

// One spoken unit: optional noise onset, a (possibly gliding) vowel, optional
// noise coda, then a pause.
struct Syllable {
  double onset_ms = 0.0;
  double onset_hz = 3000.0;
  Formants from{500.0, 1500.0};
  Formants to{500.0, 1500.0};
  double vowel_ms = 150.0;
  double coda_ms = 0.0;
  double coda_hz = 3000.0;
  double pause_ms = 20.0;
};

Syllable vowel(Formants f, double ms, double pause = 20.0) {
  Syllable s;
  s.from = s.to = f;
  s.vowel_ms = ms;
  s.pause_ms = pause;
  return s;
}

Syllable with_onset(Syllable s, double ms, double hz) {
  s.onset_ms = ms;
  s.onset_hz = hz;
  return s;
}

Syllable with_coda(Syllable s, double ms, double hz) {
  s.coda_ms = ms;
  s.coda_hz = hz;
  return s;
}

Syllable glide(Formants a, Formants b, double ms) {
  Syllable s = vowel(a, ms);
  s.to = b;
  return s;
}

Syllable call_sign_word(CallSign c) {
  if (c == CallSign::dog) return with_coda(with_onset(vowel({600, 1000}, 200), 20, 1500), 25, 1800);
  return with_coda(with_onset(vowel({750, 1750}, 200), 35, 3000), 30, 3500);
}

Syllable color_word(Color c) {
  switch (c) {
    case Color::red: return with_coda(glide({400, 1300}, {550, 1900}, 190), 20, 2500);
    case Color::green: return with_onset(vowel({300, 2300}, 210), 25, 1800);
    case Color::pink: return with_coda(with_onset(vowel({400, 2100}, 180), 25, 1200), 30, 3000);
    case Color::white: return with_coda(glide({700, 1200}, {400, 2000}, 210), 20, 3500);
    case Color::black: return with_coda(with_onset(vowel({750, 1700}, 190), 20, 900), 35, 2800);
    case Color::blue: return with_onset(vowel({300, 900}, 200), 20, 800);
  }
  return vowel({500, 1500}, 180);
}

Syllable number_word(int n) {
  switch (n) {
    case 1: return glide({450, 800}, {600, 1100}, 220);
    case 2: return with_onset(vowel({300, 900}, 200), 30, 3500);
    case 3: return with_onset(vowel({300, 2300}, 200), 70, 5000);
    case 4: return with_onset(vowel({500, 900}, 200), 70, 4500);
    case 5: return with_onset(glide({700, 1300}, {400, 2000}, 230), 70, 4500);
    case 6: return with_coda(with_onset(vowel({400, 2000}, 160), 80, 5500), 80, 5500);
    case 8: return with_coda(glide({500, 1900}, {350, 2200}, 190), 25, 3000);
    case 9: return glide({650, 1200}, {400, 2000}, 240);
    default: return vowel({500, 1500}, 200);
  }
}

std::vector<Syllable> sentence_plan(CallSign c, const Keywords& k) {
  const Syllable the = vowel({500, 1500}, 80, 10);
  return {
      with_onset(vowel({500, 900}, 180), 100, 3000),  // show
      the,
      call_sign_word(c),
      glide({350, 800}, {500, 1800}, 170),  // where
      the,
      color_word(k.color),
      number_word(k.number),
      with_coda(vowel({350, 2100}, 110), 80, 4500),  // is
  };
}

double lorentz(double f, double center, double bandwidth) {
  const double d = f - center;
  const double hb = 0.5 * bandwidth;
  return hb / std::sqrt(d * d + hb * hb);
}

class SentenceSynth {
 public:
  SentenceSynth(int fs, double f0_start, double f0_end, std::uint64_t seed)
      : fs_(fs), f0_start_(f0_start), f0_end_(f0_end), rng_(seed) {}

  AudioBuffer render(const std::vector<Syllable>& plan, double scale) {
    double total_ms = 0.0;
    for (const auto& s : plan) total_ms += (s.onset_ms + s.vowel_ms + s.coda_ms + s.pause_ms) * scale;
    total_samples_ = audio::samples_for(total_ms / 1000.0, fs_);
    out_.assign(total_samples_, 0.0);
    cursor_ = 0;
    for (const auto& s : plan) {
      noise(s.onset_ms * scale, s.onset_hz);
      voiced(s, s.vowel_ms * scale);
      noise(s.coda_ms * scale, s.coda_hz);
      cursor_ += audio::samples_for(s.pause_ms * scale / 1000.0, fs_);
    }
    AudioBuffer b{std::move(out_), fs_};
    b.samples.resize(total_samples_, 0.0);
    return b;
  }

 private:
  [[nodiscard]] double f0_at(std::size_t i) const {
    const double u = static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, total_samples_));
    return f0_start_ + (f0_end_ - f0_start_) * u;
  }

  static double edge_gain(std::size_t i, std::size_t n, std::size_t ramp) {
    if (n <= 2 * ramp) ramp = n / 2;
    if (ramp == 0) return 1.0;
    if (i < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
    if (i >= n - ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - i) / ramp);
    return 1.0;
  }

  void voiced(const Syllable& s, double ms) {
    const std::size_t n = audio::samples_for(ms / 1000.0, fs_);
    const std::size_t ramp = audio::samples_for(0.012, fs_);
    for (std::size_t i = 0; i < n && cursor_ + i < out_.size(); ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n);
      const double f1 = s.from.f1 + (s.to.f1 - s.from.f1) * u;
      const double f2 = s.from.f2 + (s.to.f2 - s.from.f2) * u;
      const double f0 = f0_at(cursor_ + i);
      phase_ += 2.0 * std::numbers::pi * f0 / fs_;
      if (phase_ > 2.0 * std::numbers::pi) phase_ -= 2.0 * std::numbers::pi;
      // Formants move slowly; refresh the harmonic envelope every 32 samples.
      if (i % 32 == 0 || envelope_.empty()) {
        envelope_.clear();
        for (int k = 1; k * f0 < 5000.0; ++k) {
          const double f = k * f0;
          envelope_.push_back((lorentz(f, f1, 90.0) + 0.6 * lorentz(f, f2, 140.0) +
                               0.25 * lorentz(f, 2700.0, 220.0) + 0.02) /
                              std::sqrt(static_cast<double>(k)));
        }
      }
      // sin(k*phase) by the Chebyshev recurrence.
      const double c2 = 2.0 * std::cos(phase_);
      double prev = 0.0;
      double cur = std::sin(phase_);
      double acc = 0.0;
      for (double env : envelope_) {
        acc += env * cur;
        const double next = c2 * cur - prev;
        prev = cur;
        cur = next;
      }
      out_[cursor_ + i] += 0.12 * acc * edge_gain(i, n, ramp);
    }
    cursor_ += n;
  }

  void noise(double ms, double center_hz) {
    if (ms <= 0.0) return;
    const std::size_t n = audio::samples_for(ms / 1000.0, fs_);
    const std::size_t ramp = audio::samples_for(0.008, fs_);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double smooth = 0.0;
    for (std::size_t i = 0; i < n && cursor_ + i < out_.size(); ++i) {
      smooth += 0.15 * (gauss(rng_) - smooth);
      const double carrier = std::cos(2.0 * std::numbers::pi * center_hz * (cursor_ + i) / fs_);
      out_[cursor_ + i] += 0.08 * smooth * carrier * edge_gain(i, n, ramp);
    }
    cursor_ += n;
  }

  int fs_;
  double f0_start_;
  double f0_end_;
  Rng rng_;
  std::vector<double> out_;
  std::size_t total_samples_ = 0;
  std::size_t cursor_ = 0;
  double phase_ = 0.0;
  std::vector<double> envelope_;
};

}  // namespace

void validate_corpus(std::span<const Sentence> sentences) {
  std::set<std::string> seen;
  int per_sign[2] = {0, 0};
  for (const auto& s : sentences) {
    if (!is_valid_number(s.keywords.number)) {
      throw StimulusError("sentence " + s.id + " uses an illegal number keyword");
    }
    if (!seen.insert(sentence_id(s.call_sign, s.keywords)).second) {
      throw StimulusError("duplicate sentence " + s.id);
    }
    if (s.audio.empty()) throw StimulusError("sentence " + s.id + " has no audio");
    ++per_sign[s.call_sign == CallSign::dog ? 0 : 1];
  }
  if (per_sign[0] != 48 || per_sign[1] != 48) {
    std::ostringstream msg;
    msg << "corpus incomplete: expected 48 'dog' and 48 'cat' sentences, found " << per_sign[0]
        << " and " << per_sign[1];
    throw StimulusError(msg.str());
  }
  const int fs = sentences.front().audio.sample_rate;
  for (const auto& s : sentences) {
    if (s.audio.sample_rate != fs) throw StimulusError("corpus mixes sample rates");
  }
}

std::vector<Sentence> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw StimulusError("corpus directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Sentence> out;
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const auto a = stem.find('_');
    const auto b = stem.rfind('_');
    if (a == std::string::npos || a == b) continue;
    const auto sign = parse_call_sign(stem.substr(0, a));
    const auto color = parse_color(stem.substr(a + 1, b - a - 1));
    int number = 0;
    try {
      number = std::stoi(stem.substr(b + 1));
    } catch (const std::exception&) {
      continue;
    }
    if (!sign || !color) continue;
    Sentence s;
    s.call_sign = *sign;
    s.keywords = Keywords{*color, number};
    s.id = sentence_id(*sign, s.keywords);
    s.audio = audio::read_wav(path);
    out.push_back(std::move(s));
  }
  validate_corpus(out);
  return out;
}

void write_corpus(const std::filesystem::path& dir, std::span<const Sentence> sentences) {
  std::filesystem::create_directories(dir);
  for (const auto& s : sentences) audio::write_wav(dir / (s.id + ".wav"), s.audio);
}

std::vector<Sentence> synthesize_corpus(const SyntheticCorpusOptions& options) {
  std::vector<Sentence> out;
  std::uint64_t index = 0;
  for (CallSign sign : {CallSign::dog, CallSign::cat}) {
    for (const Keywords& k : all_keyword_pairs()) {
      Rng jitter(derive_seed(options.seed, 0x636f72707573ULL, index++));
      std::uniform_real_distribution<double> wobble(-0.03, 0.03);
      const double start = options.reference_f0_hz * (1.08 + wobble(jitter));
      const double end = options.reference_f0_hz * (0.92 + wobble(jitter));
      SentenceSynth synth(options.sample_rate, start, end, jitter());
      Sentence s;
      s.call_sign = sign;
      s.keywords = k;
      s.id = sentence_id(sign, k);
      s.audio = synth.render(sentence_plan(sign, k), options.duration_scale);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace crm::stimulus
