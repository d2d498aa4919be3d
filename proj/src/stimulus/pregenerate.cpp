#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "crm/stimulus/corpus.hpp"
#include "crm/stimulus/masker_detail.hpp"

namespace crm::stimulus {
namespace {

constexpr std::uint64_t kMaskerStream = 0x6d61'736b'6572ULL;

std::string stimulus_name(const TrialSpec& t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "stimuli/%s_%03d.wav", std::string(to_string(t.phase)).c_str(), t.index);
  return buf;
}

const Sentence& find_sentence(std::span<const Sentence> corpus, const std::string& id) {
  for (const auto& s : corpus) {
    if (s.id == id) return s;
  }
  throw StimulusError("sentence " + id + " missing from corpus");
}

}  // namespace

const AudioBuffer& MaskerVoiceCache::morphed(const Sentence& sentence, const VoiceCondition& voice) {
  Entry* entry = nullptr;
  Track* track = nullptr;
  {
    std::lock_guard lock(mutex_);
    auto& slot = entries_[Key{sentence.id, voice.delta_f0_st, voice.delta_vtl_st}];
    if (!slot) slot = std::make_unique<Entry>();
    entry = slot.get();
    auto& track_slot = tracks_[sentence.id];
    if (!track_slot) track_slot = std::make_unique<Track>();
    track = track_slot.get();
  }
  std::call_once(entry->once, [&] {
    std::call_once(track->once, [&] { track->frames = voice::track_f0(sentence.audio); });
    entry->audio = voice::apply_voice(sentence.audio, voice, track->frames);
  });
  return entry->audio;
}

std::size_t MaskerVoiceCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

RenderedTrial render_trial(const TrialSpec& spec, std::span<const Sentence> corpus,
                           MaskerVoiceCache& cache, DbFs presentation_level) {
  const Sentence& target = find_sentence(corpus, spec.target_id());
  RenderedTrial out;
  if (spec.tmr.is_baseline()) {
    out.mix = mix_trial(target.audio, nullptr, spec.tmr, presentation_level);
  } else {
    const auto eligible = eligible_masker_pool(corpus, spec.target);
    if (eligible.empty()) throw StimulusError("masker pool is empty after keyword exclusion");
    const int fs = target.audio.sample_rate;
    const std::size_t needed =
        target.audio.size() + audio::samples_for(kMaskerLeadS + kMaskerTailS, fs);
    Rng rng(derive_seed(spec.seed, kMaskerStream));
    SplicedMasker masker;
    masker.segments = detail::plan_masker_segments(eligible, needed, fs, rng);
    masker.audio = detail::assemble_masker(
        masker.segments,
        [&](const std::string& id) -> const AudioBuffer& {
          return cache.morphed(find_sentence(corpus, id), spec.voice);
        },
        fs);
    out.mix = mix_trial(target.audio, &masker.audio, spec.tmr, presentation_level);
    out.masker = std::move(masker);
  }
  out.stimulus = out.mix.audio;
  return out;
}

Manifest plan_manifest(const ConditionGrid& grid, std::uint64_t seed, int sample_rate,
                       DbFs presentation_level, std::span<const VoiceCondition> training_voices) {
  Manifest manifest;
  manifest.seed = seed;
  manifest.sample_rate = sample_rate;
  manifest.presentation_level_dbfs = presentation_level.value;
  manifest.training = build_training_set(seed, training_voices);
  manifest.experiment = plan_experiment(grid, seed);
  for (auto& t : manifest.training) t.stimulus_path = stimulus_name(t);
  for (auto& t : manifest.experiment) t.stimulus_path = stimulus_name(t);
  return manifest;
}

Manifest pregenerate_corpus(const ConditionGrid& grid, std::span<const Sentence> corpus,
                            std::uint64_t seed, const std::filesystem::path& out_dir,
                            const PregenerateOptions& options) {
  validate_corpus(corpus);
  Manifest manifest = plan_manifest(grid, seed, corpus.front().audio.sample_rate,
                                    options.presentation_level, options.training_voices);

  std::vector<TrialSpec*> jobs;
  for (auto& t : manifest.training) jobs.push_back(&t);
  for (auto& t : manifest.experiment) jobs.push_back(&t);

  std::filesystem::create_directories(out_dir / "stimuli");
  MaskerVoiceCache local_cache;
  MaskerVoiceCache& cache = options.cache ? *options.cache : local_cache;

  // Each trial draws only from its own substream, so the worker count never
  // changes the output.
  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto rendered = render_trial(*jobs[i], corpus, cache, options.presentation_level);
        audio::write_wav(out_dir / jobs[i]->stimulus_path, rendered.stimulus);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace crm::stimulus
