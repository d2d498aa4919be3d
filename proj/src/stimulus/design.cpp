#include <algorithm>
#include <numeric>

#include "crm/stimulus/stimulus.hpp"

namespace crm::stimulus {
namespace {

// Substream identifiers for derive_seed.
constexpr std::uint64_t kTrainingSelectionStream = 0x7472'6169'6e00ULL;
constexpr std::uint64_t kTrainingTrialStream = 0x7472'6169'6e01ULL;
constexpr std::uint64_t kExperimentTrialStream = 0x6578'7065'7200ULL;
constexpr std::uint64_t kExperimentOrderStream = 0x6578'7065'7201ULL;

Keywords draw_target(Rng& rng) {
  const auto pairs = all_keyword_pairs();
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  return pairs[pick(rng)];
}

}  // namespace

double TmrCondition::value_db() const {
  if (!db_) throw StimulusError("baseline condition has no TMR");
  return *db_;
}

std::vector<VoiceCondition> training_voices() {
  std::vector<VoiceCondition> out;
  for (double f0 : {-12.0, -6.0, 0.0}) {
    for (double vtl : {0.0, 1.9, 3.8}) out.push_back({f0, vtl});
  }
  return out;
}

int ConditionGrid::total_trials() const {
  int n = 0;
  for (const auto& c : cells) n += c.trials;
  return n;
}

int ConditionGrid::experimental_trials() const {
  int n = 0;
  for (const auto& c : cells) {
    if (!c.tmr.is_baseline()) n += c.trials;
  }
  return n;
}

ConditionGrid build_condition_grid() {
  ConditionGrid grid;
  for (double tmr : kExperimentTmrsDb) {
    for (const auto& voice : kExperimentVoices) {
      grid.cells.push_back({TmrCondition::db(tmr), voice, kTrialsPerCell});
    }
  }
  grid.cells.push_back({TmrCondition::baseline(), VoiceCondition{}, kTrialsPerCell});
  return grid;
}

std::string_view to_string(TrialPhase p) { return p == TrialPhase::training ? "training" : "experiment"; }

std::vector<TrialSpec> build_training_set(std::uint64_t seed, std::span<const VoiceCondition> voices) {
  std::vector<VoiceCondition> pool(voices.begin(), voices.end());
  if (pool.empty()) pool = training_voices();
  const auto standard = training_voices();
  const bool complete =
      pool.size() == standard.size() &&
      std::all_of(standard.begin(), standard.end(), [&](const VoiceCondition& v) {
        return std::find(pool.begin(), pool.end(), v) != pool.end();
      });
  if (!complete) {
    throw StimulusError("training corpus must contain all nine F0/VTL combinations");
  }

  Rng rng(derive_seed(seed, kTrainingSelectionStream));
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<TrialSpec> out;
  for (int i = 0; i < kTrainingTrials; ++i) {
    TrialSpec spec;
    spec.index = i + 1;
    spec.phase = TrialPhase::training;
    spec.voice = pool[order[static_cast<std::size_t>(i)]];
    spec.tmr = TmrCondition::db(i < 2 ? 0.0 : 6.0);
    spec.seed = derive_seed(seed, kTrainingTrialStream, static_cast<std::uint64_t>(i));
    Rng trial_rng(spec.seed);
    spec.target = draw_target(trial_rng);
    out.push_back(spec);
  }
  return out;
}

std::vector<TrialSpec> plan_experiment(const ConditionGrid& grid, std::uint64_t seed) {
  std::vector<TrialSpec> trials;
  std::uint64_t design_index = 0;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    for (int k = 0; k < grid.cells[c].trials; ++k) {
      TrialSpec spec;
      spec.phase = TrialPhase::experiment;
      spec.cell = static_cast<int>(c);
      spec.tmr = grid.cells[c].tmr;
      spec.voice = grid.cells[c].voice;
      spec.seed = derive_seed(seed, kExperimentTrialStream, design_index++);
      Rng trial_rng(spec.seed);
      spec.target = draw_target(trial_rng);
      trials.push_back(spec);
    }
  }
  Rng order_rng(derive_seed(seed, kExperimentOrderStream));
  std::shuffle(trials.begin(), trials.end(), order_rng);
  for (std::size_t i = 0; i < trials.size(); ++i) trials[i].index = static_cast<int>(i + 1);
  return trials;
}

}  // namespace crm::stimulus
