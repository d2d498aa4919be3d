#include <algorithm>
#include <cmath>
#include <iostream>

#include "crm/stimulus/masker_detail.hpp"
#include "crm/stimulus/stimulus.hpp"

namespace crm::stimulus {

std::vector<const Sentence*> eligible_masker_pool(std::span<const Sentence> pool,
                                                  const Keywords& target) {
  std::vector<const Sentence*> out;
  for (const auto& s : pool) {
    if (s.call_sign != CallSign::cat) continue;
    if (s.keywords.color == target.color || s.keywords.number == target.number) continue;
    out.push_back(&s);
  }
  return out;
}

namespace detail {

std::vector<MaskerSegment> plan_masker_segments(std::span<const Sentence* const> eligible,
                                                std::size_t masker_samples, int sample_rate,
                                                Rng& rng) {
  const auto min_len = audio::samples_for(kSegmentMinMs / 1000.0, sample_rate);
  const auto max_len = audio::samples_for(kSegmentMaxMs / 1000.0, sample_rate);
  std::vector<const Sentence*> usable;
  for (const Sentence* s : eligible) {
    if (s->audio.size() >= max_len) usable.push_back(s);
  }
  if (usable.empty()) {
    throw StimulusError("no eligible masker sentence (after keyword exclusion) is long enough");
  }

  std::uniform_int_distribution<std::size_t> pick_sentence(0, usable.size() - 1);
  std::uniform_real_distribution<double> pick_ms(kSegmentMinMs, kSegmentMaxMs);
  std::vector<MaskerSegment> segments;
  std::size_t total = 0;
  while (total < masker_samples) {
    const Sentence* src = usable[pick_sentence(rng)];
    const auto len = std::clamp(audio::samples_for(pick_ms(rng) / 1000.0, sample_rate), min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick_offset(0, src->audio.size() - len);
    MaskerSegment seg;
    seg.source_id = src->id;
    seg.source_offset = pick_offset(rng);
    seg.drawn_length = len;
    seg.length = std::min(len, masker_samples - total);
    total += seg.length;
    segments.push_back(seg);
  }
  return segments;
}

AudioBuffer assemble_masker(std::span<const MaskerSegment> segments, const SourceLookup& source,
                            int sample_rate) {
  AudioBuffer out;
  out.sample_rate = sample_rate;
  for (const auto& seg : segments) {
    const AudioBuffer& src = source(seg.source_id);
    AudioBuffer piece;
    piece.sample_rate = sample_rate;
    piece.samples.assign(src.samples.begin() + static_cast<long>(seg.source_offset),
                         src.samples.begin() + static_cast<long>(seg.source_offset + seg.drawn_length));
    piece = audio::apply_raised_cosine_ramps(piece, kSegmentRampMs);
    out.samples.insert(out.samples.end(), piece.samples.begin(),
                       piece.samples.begin() + static_cast<long>(seg.length));
  }
  return out;
}

}  // namespace detail

SplicedMasker splice_masker(std::span<const Sentence> pool, const Keywords& target,
                            std::size_t target_samples, Rng& rng) {
  const auto eligible = eligible_masker_pool(pool, target);
  if (eligible.empty()) throw StimulusError("masker pool is empty after keyword exclusion");
  const int fs = eligible.front()->audio.sample_rate;
  const std::size_t needed = target_samples + audio::samples_for(kMaskerLeadS + kMaskerTailS, fs);

  SplicedMasker out;
  out.segments = detail::plan_masker_segments(eligible, needed, fs, rng);
  out.audio = detail::assemble_masker(
      out.segments,
      [&](const std::string& id) -> const AudioBuffer& {
        for (const Sentence* s : eligible) {
          if (s->id == id) return s->audio;
        }
        throw StimulusError("unknown masker source " + id);
      },
      fs);
  return out;
}

MixResult mix_trial(const AudioBuffer& target, const AudioBuffer* masker, const TmrCondition& tmr,
                    DbFs presentation_level) {
  if (target.empty() || audio::rms(target) == 0.0) throw StimulusError("target is silent");
  MixResult result;

  if (tmr.is_baseline()) {
    result.audio = audio::scale_to_rms(target, presentation_level);
    result.target_gain = audio::rms(result.audio) / audio::rms(target);
    result.masker_gain = 0.0;
  } else {
    if (masker == nullptr) throw StimulusError("masked condition needs a masker");
    if (masker->sample_rate != target.sample_rate) throw StimulusError("sample rate mismatch");
    const std::size_t lead = audio::samples_for(kMaskerLeadS, target.sample_rate);
    const std::size_t expected =
        target.size() + audio::samples_for(kMaskerLeadS + kMaskerTailS, target.sample_rate);
    if (masker->size() != expected) {
      throw StimulusError("masker must be exactly 1 s longer than the target (got " +
                          std::to_string(masker->size()) + " samples, expected " +
                          std::to_string(expected) + ")");
    }
    const double masker_rms = masker->empty() ? 0.0 : audio::rms(*masker);
    if (masker_rms == 0.0) throw StimulusError("masker is silent");

    const double target_rms = audio::rms(target);
    double masker_gain = target_rms / masker_rms * audio::db_to_amplitude(-tmr.value_db());
    AudioBuffer mix;
    mix.sample_rate = target.sample_rate;
    mix.samples.resize(masker->size());
    for (std::size_t i = 0; i < mix.samples.size(); ++i) mix.samples[i] = masker_gain * masker->samples[i];
    for (std::size_t i = 0; i < target.size(); ++i) mix.samples[lead + i] += target.samples[i];

    const double level_gain = audio::db_to_amplitude(presentation_level.value) / audio::rms(mix);
    result.audio = audio::apply_gain(mix, level_gain);
    result.target_gain = level_gain;
    result.masker_gain = masker_gain * level_gain;
  }

  const double p = audio::peak(result.audio);
  if (p > 1.0) {
    // Attenuate globally instead of clipping; the TMR is unaffected.
    const double g = 1.0 / p;
    result.audio = audio::apply_gain(result.audio, g);
    result.target_gain *= g;
    result.masker_gain *= g;
    result.peak_attenuation_db = audio::amplitude_to_db(g);
    std::clog << "warning: stimulus peak " << p << " exceeds full scale; attenuated by "
              << -result.peak_attenuation_db << " dB\n";
  }
  return result;
}

}  // namespace crm::stimulus
