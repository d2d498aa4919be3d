#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "crm/stimulus/stimulus.hpp"

namespace crm::stimulus {

// ---------------------------------------------------------------------------
// Sentence corpora. On disk a corpus is a directory of mono 16-bit WAV files
// named <call sign>_<colour>_<number>.wav, e.g. dog_pink_5.wav.

/// Throws StimulusError unless the corpus holds exactly the 48 colour/number
/// sentences for each call sign.
void validate_corpus(std::span<const Sentence> sentences);

[[nodiscard]] std::vector<Sentence> load_corpus(const std::filesystem::path& dir);
void write_corpus(const std::filesystem::path& dir, std::span<const Sentence> sentences);

struct SyntheticCorpusOptions {
  double reference_f0_hz = 242.0;
  int sample_rate = audio::kDefaultSampleRate;
  /// Multiplies every segment duration; 1.0 gives sentences of roughly 2 s.
  double duration_scale = 1.0;
  std::uint64_t seed = 1;
};

/// Formant-synthesized stand-in for a CRM recording set: 96 sentences with a
/// declining F0 contour around the reference, keyword-specific vowels and
/// noise-burst consonants. Good enough to exercise the whole pipeline.
[[nodiscard]] std::vector<Sentence> synthesize_corpus(const SyntheticCorpusOptions& options = {});

// ---------------------------------------------------------------------------
// Manifest: line-delimited JSON, one header record followed by one record per
// trial (training first, then experiment trials in presentation order).

inline constexpr int kManifestVersion = 1;

struct Manifest {
  std::uint64_t seed = 0;
  int sample_rate = audio::kDefaultSampleRate;
  double presentation_level_dbfs = -26.0;
  std::vector<TrialSpec> training;
  std::vector<TrialSpec> experiment;

  [[nodiscard]] std::size_t size() const { return training.size() + experiment.size(); }
};

[[nodiscard]] std::string manifest_to_jsonl(const Manifest& manifest);
[[nodiscard]] Manifest manifest_from_jsonl(const std::string& text);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
[[nodiscard]] Manifest read_manifest(const std::filesystem::path& path);

/// Trial plan with stimulus paths assigned, without rendering any audio.
[[nodiscard]] Manifest plan_manifest(const ConditionGrid& grid, std::uint64_t seed,
                                     int sample_rate = audio::kDefaultSampleRate,
                                     DbFs presentation_level = DbFs{-26.0},
                                     std::span<const VoiceCondition> training_voices = {});

// ---------------------------------------------------------------------------
// Rendering.

/// Lazily morphed copies of masker sentences, one per (sentence, voice). Safe
/// to share between threads and between sessions using the same corpus.
class MaskerVoiceCache {
 public:
  const AudioBuffer& morphed(const Sentence& sentence, const VoiceCondition& voice);
  [[nodiscard]] std::size_t size() const;

 private:
  struct Entry {
    std::once_flag once;
    AudioBuffer audio;
  };
  struct Track {
    std::once_flag once;
    std::vector<voice::PitchFrame> frames;
  };
  using Key = std::tuple<std::string, double, double>;
  mutable std::mutex mutex_;
  std::map<Key, std::unique_ptr<Entry>> entries_;
  std::map<std::string, std::unique_ptr<Track>> tracks_;
};

struct RenderedTrial {
  AudioBuffer stimulus;
  std::optional<SplicedMasker> masker;  // empty for baseline trials
  MixResult mix;
};

[[nodiscard]] RenderedTrial render_trial(const TrialSpec& spec, std::span<const Sentence> corpus,
                                         MaskerVoiceCache& cache, DbFs presentation_level);

struct PregenerateOptions {
  DbFs presentation_level{-26.0};
  unsigned threads = 0;                 // 0: hardware concurrency
  MaskerVoiceCache* cache = nullptr;    // optional shared cache
  std::vector<VoiceCondition> training_voices;  // empty: the standard nine
};

/// Renders all training and experimental stimuli into `out_dir` and writes
/// `out_dir/manifest.jsonl`. Output is a pure function of the inputs and seed.
Manifest pregenerate_corpus(const ConditionGrid& grid, std::span<const Sentence> corpus,
                            std::uint64_t seed, const std::filesystem::path& out_dir,
                            const PregenerateOptions& options = {});

}  // namespace crm::stimulus
