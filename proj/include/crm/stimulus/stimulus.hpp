#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crm/audio/audio_buffer.hpp"
#include "crm/random.hpp"
#include "crm/stimulus/keywords.hpp"
#include "crm/voice/voice_morph.hpp"

namespace crm::stimulus {

using audio::AudioBuffer;
using audio::DbFs;
using voice::VoiceCondition;

class StimulusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sentence {
  std::string id;
  CallSign call_sign = CallSign::dog;
  Keywords keywords;
  AudioBuffer audio;
};

/// Target-to-masker ratio in dB, or the maskerless baseline.
class TmrCondition {
 public:
  static TmrCondition db(double value) { return TmrCondition(value); }
  static TmrCondition baseline() { return TmrCondition(); }

  [[nodiscard]] bool is_baseline() const { return !db_.has_value(); }
  [[nodiscard]] double value_db() const;  // throws on baseline
  [[nodiscard]] std::optional<double> optional_db() const { return db_; }

  friend bool operator==(const TmrCondition&, const TmrCondition&) = default;

 private:
  TmrCondition() = default;
  explicit TmrCondition(double v) : db_(v) {}
  std::optional<double> db_;
};

inline constexpr std::array<double, 3> kExperimentTmrsDb{-6.0, 0.0, 6.0};
inline constexpr std::array<VoiceCondition, 4> kExperimentVoices{
    VoiceCondition{0.0, 0.0}, VoiceCondition{-12.0, 0.0}, VoiceCondition{0.0, 3.8},
    VoiceCondition{-12.0, 3.8}};
inline constexpr int kTrialsPerCell = 7;
inline constexpr int kTrainingTrials = 4;

/// The nine F0 x VTL combinations of the familiarisation corpus.
[[nodiscard]] std::vector<VoiceCondition> training_voices();

struct ConditionCell {
  TmrCondition tmr = TmrCondition::baseline();
  VoiceCondition voice;
  int trials = kTrialsPerCell;

  friend bool operator==(const ConditionCell&, const ConditionCell&) = default;
};

struct ConditionGrid {
  std::vector<ConditionCell> cells;

  [[nodiscard]] int total_trials() const;
  [[nodiscard]] int experimental_trials() const;
};

/// 3 TMR x 4 voice cells plus the baseline cell, 7 trials each.
[[nodiscard]] ConditionGrid build_condition_grid();

enum class TrialPhase { training, experiment };
[[nodiscard]] std::string_view to_string(TrialPhase p);

struct TrialSpec {
  int index = 0;   // 1-based presentation position within its phase
  TrialPhase phase = TrialPhase::experiment;
  int cell = -1;   // index into ConditionGrid::cells; -1 for training trials
  TmrCondition tmr = TmrCondition::baseline();
  VoiceCondition voice;
  Keywords target;
  std::uint64_t seed = 0;
  std::string stimulus_path;  // relative to the session's stimulus root

  [[nodiscard]] std::string target_id() const { return sentence_id(CallSign::dog, target); }
};

/// Four training trials drawn without replacement from `voices` (must be the
/// nine training combinations). The first two run at 0 dB TMR, the rest at +6.
[[nodiscard]] std::vector<TrialSpec> build_training_set(
    std::uint64_t seed, std::span<const VoiceCondition> voices = {});

/// Every experimental trial of `grid`, with per-trial seeds and targets, in a
/// seed-determined presentation order.
[[nodiscard]] std::vector<TrialSpec> plan_experiment(const ConditionGrid& grid, std::uint64_t seed);

struct MaskerSegment {
  std::string source_id;
  std::size_t source_offset = 0;
  std::size_t length = 0;  // samples actually used (the last one may be trimmed)
  std::size_t drawn_length = 0;
};

struct SplicedMasker {
  AudioBuffer audio;
  std::vector<MaskerSegment> segments;
};

inline constexpr double kMaskerLeadS = 0.75;
inline constexpr double kMaskerTailS = 0.25;
inline constexpr double kSegmentMinMs = 150.0;
inline constexpr double kSegmentMaxMs = 300.0;
inline constexpr double kSegmentRampMs = 50.0;

/// Sentences that may feed a masker for `target`: "cat" call sign, sharing
/// neither the colour nor the number keyword.
[[nodiscard]] std::vector<const Sentence*> eligible_masker_pool(std::span<const Sentence> pool,
                                                                const Keywords& target);

/// Concatenates randomly drawn, individually ramped 150-300 ms segments of the
/// eligible pool until the masker spans the target plus 0.75 s lead and
/// 0.25 s tail, then trims to that exact length.
[[nodiscard]] SplicedMasker splice_masker(std::span<const Sentence> pool, const Keywords& target,
                                          std::size_t target_samples, Rng& rng);

struct MixResult {
  AudioBuffer audio;
  double target_gain = 1.0;
  double masker_gain = 0.0;
  /// Global attenuation (dB, <= 0) applied to keep the peak within full scale.
  double peak_attenuation_db = 0.0;
};

/// Scales the masker against the target for the requested TMR (RMS based),
/// starts the target 0.75 s into the masker and sets the overall RMS of the sum
/// to `presentation_level`. Baseline trials present the scaled target alone.
[[nodiscard]] MixResult mix_trial(const AudioBuffer& target, const AudioBuffer* masker,
                                  const TmrCondition& tmr, DbFs presentation_level);

}  // namespace crm::stimulus
