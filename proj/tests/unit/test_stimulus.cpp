#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crm/stimulus/corpus.hpp"
#include "crm/stimulus/masker_detail.hpp"
#include "support/signals.hpp"

using namespace crm;
using namespace crm::stimulus;

namespace {

const std::vector<Sentence>& small_corpus() {
  static const auto corpus = [] {
    SyntheticCorpusOptions o;
    o.duration_scale = 0.6;
    return synthesize_corpus(o);
  }();
  return corpus;
}

const Sentence& sentence(const std::string& id) {
  for (const auto& s : small_corpus()) {
    if (s.id == id) return s;
  }
  throw std::runtime_error("no " + id);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Least-squares fit out = a * masker + b * shifted_target; returns (a, b).
std::pair<double, double> component_gains(const audio::AudioBuffer& out, const audio::AudioBuffer& target,
                                          const audio::AudioBuffer& masker, std::size_t lead) {
  double mm = 0, tt = 0, mt = 0, om = 0, ot = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = masker.samples[i];
    const double t = i >= lead && i - lead < target.size() ? target.samples[i - lead] : 0.0;
    mm += m * m;
    tt += t * t;
    mt += m * t;
    om += out.samples[i] * m;
    ot += out.samples[i] * t;
  }
  const double det = mm * tt - mt * mt;
  return {(om * tt - ot * mt) / det, (ot * mm - om * mt) / det};
}

}  // namespace

TEST_CASE("keywords") {
  CHECK(all_keyword_pairs().size() == 48);
  CHECK_FALSE(is_valid_number(7));
  CHECK(is_valid_number(9));
  CHECK(parse_color("pink") == Color::pink);
  CHECK_FALSE(parse_color("purple").has_value());
  CHECK(sentence_id(CallSign::dog, {Color::pink, 5}) == "dog_pink_5");
}

TEST_CASE("condition grid") {
  const auto grid = build_condition_grid();
  CHECK(grid.cells.size() == 13);
  for (const auto& c : grid.cells) CHECK(c.trials == 7);
  CHECK(grid.total_trials() == 91);
  CHECK(grid.experimental_trials() == 84);

  std::map<double, int> per_tmr;
  std::map<std::pair<double, double>, int> per_voice;
  int baseline = 0;
  for (const auto& c : grid.cells) {
    if (c.tmr.is_baseline()) {
      baseline += c.trials;
      continue;
    }
    per_tmr[c.tmr.value_db()] += c.trials;
    per_voice[{c.voice.delta_f0_st, c.voice.delta_vtl_st}] += c.trials;
  }
  CHECK(baseline == 7);
  CHECK(per_tmr == std::map<double, int>{{-6.0, 28}, {0.0, 28}, {6.0, 28}});
  CHECK(per_voice.size() == 4);
  for (const auto& [voice, n] : per_voice) CHECK(n == 21);
}

TEST_CASE("training set") {
  const auto training = build_training_set(123);
  REQUIRE(training.size() == 4);
  const auto nine = training_voices();
  std::set<std::pair<double, double>> distinct;
  for (const auto& t : training) {
    CHECK(std::find(nine.begin(), nine.end(), t.voice) != nine.end());
    distinct.insert({t.voice.delta_f0_st, t.voice.delta_vtl_st});
    CHECK(t.phase == TrialPhase::training);
  }
  CHECK(distinct.size() == 4);
  CHECK(training[0].tmr.value_db() == 0.0);
  CHECK(training[1].tmr.value_db() == 0.0);
  CHECK(training[2].tmr.value_db() == 6.0);
  CHECK(training[3].tmr.value_db() == 6.0);

  // Ordered selections over 20 seeds. A pair collides with probability 1/3024,
  // so nearly every seed should yield its own selection.
  std::set<std::vector<std::pair<double, double>>> selections;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::vector<std::pair<double, double>> pick;
    for (const auto& t : build_training_set(seed)) pick.push_back({t.voice.delta_f0_st, t.voice.delta_vtl_st});
    selections.insert(pick);
  }
  CHECK(selections.size() >= 19);

  const std::vector<voice::VoiceCondition> partial(nine.begin(), nine.begin() + 8);
  CHECK_THROWS_AS(build_training_set(1, partial), StimulusError);
}

TEST_CASE("experiment plan is a seed-determined permutation of the grid") {
  const auto grid = build_condition_grid();
  const auto a = plan_experiment(grid, 5);
  const auto b = plan_experiment(grid, 5);
  const auto c = plan_experiment(grid, 6);
  REQUIRE(a.size() == 91);
  std::map<int, int> per_cell;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == static_cast<int>(i + 1));
    CHECK(a[i].cell == b[i].cell);
    CHECK(a[i].target == b[i].target);
    ++per_cell[a[i].cell];
  }
  for (const auto& [cell, n] : per_cell) CHECK(n == 7);
  int same_position = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same_position += a[i].cell == c[i].cell;
  CHECK(same_position < 40);
}

TEST_CASE("masker pool excludes shared colour or number") {
  const Keywords target{Color::pink, 5};
  const auto pool = eligible_masker_pool(small_corpus(), target);
  CHECK(pool.size() == 35);
  for (const auto* s : pool) {
    CHECK(s->call_sign == CallSign::cat);
    CHECK(s->keywords.color != Color::pink);
    CHECK(s->keywords.number != 5);
  }
}

TEST_CASE("splice_masker timing") {
  Rng rng(99);
  const auto& target = sentence("dog_pink_5");
  const std::size_t two_seconds = 88200;
  const auto m = splice_masker(small_corpus(), target.keywords, two_seconds, rng);
  CHECK(m.audio.size() == two_seconds + 44100);
  CHECK(m.audio.duration_seconds() == doctest::Approx(3.0));

  std::size_t total = 0;
  for (std::size_t i = 0; i < m.segments.size(); ++i) {
    const auto& seg = m.segments[i];
    CHECK(seg.drawn_length >= 6615);  // 150 ms
    CHECK(seg.drawn_length <= 13230); // 300 ms
    if (i + 1 < m.segments.size()) CHECK(seg.length == seg.drawn_length);
    const auto& src = sentence(seg.source_id);
    CHECK(src.keywords.color != Color::pink);
    CHECK(src.keywords.number != 5);
    CHECK(src.call_sign == CallSign::cat);
    total += seg.length;
  }
  CHECK(total == m.audio.size());
  // Each segment starts from silence (its own onset ramp).
  CHECK(m.audio.samples[0] == 0.0);
}

TEST_CASE("splice_masker fails on an empty eligible pool") {
  std::vector<Sentence> pool;
  for (const auto& s : small_corpus()) {
    if (s.call_sign == CallSign::cat && (s.keywords.color == Color::red || s.keywords.number == 1)) pool.push_back(s);
  }
  Rng rng(1);
  CHECK_THROWS_AS(splice_masker(pool, Keywords{Color::red, 1}, 1000, rng), StimulusError);
}

TEST_CASE("segment lengths are uniform over [150, 300] ms") {
  const auto pool = eligible_masker_pool(small_corpus(), Keywords{Color::blue, 3});
  std::vector<int> bins(10, 0);
  int n = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng rng(derive_seed(2024, s));
    const auto segments = detail::plan_masker_segments(pool, 132300, 44100, rng);
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const double ms = segments[i].drawn_length * 1000.0 / 44100.0;
      REQUIRE(ms >= 149.99);
      REQUIRE(ms <= 300.01);
      ++bins[std::min(9, static_cast<int>((ms - 150.0) / 15.0))];
      ++n;
    }
  }
  double chi2 = 0.0;
  const double expected = n / 10.0;
  for (int b : bins) chi2 += (b - expected) * (b - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(9), chi2));
  CAPTURE(chi2);
  CHECK(p > 0.01);
}

TEST_CASE("mix_trial sets the TMR on component RMS") {
  const auto& target = sentence("dog_green_2");
  Rng rng(3);
  const auto masker = splice_masker(small_corpus(), target.keywords, target.audio.size(), rng);
  const std::size_t lead = 33075;
  for (double tmr : {-6.0, 0.0, 6.0}) {
    CAPTURE(tmr);
    const auto mix = mix_trial(target.audio, &masker.audio, TmrCondition::db(tmr), audio::DbFs{-26.0});
    const auto [a, b] = component_gains(mix.audio, target.audio, masker.audio, lead);
    const double measured =
        audio::amplitude_to_db(b * audio::rms(target.audio)) - audio::amplitude_to_db(a * audio::rms(masker.audio));
    CHECK(std::abs(measured - tmr) < 0.1);
    if (tmr == 6.0) {
      CHECK(std::abs(b * audio::rms(target.audio) / (a * audio::rms(masker.audio)) - 1.9953) / 1.9953 < 0.01);
    }
    CHECK(std::abs(audio::rms_level_db(mix.audio).value + 26.0) < 1e-6);
    CHECK(audio::peak(mix.audio) <= 1.0);
  }
}

TEST_CASE("mix_trial baseline and error paths") {
  const auto& target = sentence("dog_blue_9");
  const auto base = mix_trial(target.audio, nullptr, TmrCondition::baseline(), audio::DbFs{-20.0});
  CHECK(base.audio == audio::scale_to_rms(target.audio, audio::DbFs{-20.0}));

  audio::AudioBuffer short_masker{std::vector<double>(target.audio.size() + 100, 0.1), 44100};
  CHECK_THROWS_AS(mix_trial(target.audio, &short_masker, TmrCondition::db(0), audio::DbFs{-20.0}),
                  StimulusError);
  audio::AudioBuffer silent{std::vector<double>(target.audio.size() + 44100, 0.0), 44100};
  CHECK_THROWS_AS(mix_trial(target.audio, &silent, TmrCondition::db(0), audio::DbFs{-20.0}), StimulusError);
  CHECK_THROWS_AS(mix_trial(target.audio, nullptr, TmrCondition::db(0), audio::DbFs{-20.0}), StimulusError);
}

TEST_CASE("mix_trial attenuates instead of clipping") {
  const auto& target = sentence("dog_white_4");
  Rng rng(8);
  const auto masker = splice_masker(small_corpus(), target.keywords, target.audio.size(), rng);
  const auto mix = mix_trial(target.audio, &masker.audio, TmrCondition::db(-6.0), audio::DbFs{-1.0});
  CHECK(mix.peak_attenuation_db < 0.0);
  CHECK(audio::peak(mix.audio) <= 1.0 + 1e-12);
  const auto [a, b] = component_gains(mix.audio, target.audio, masker.audio, 33075);
  const double measured =
      audio::amplitude_to_db(b * audio::rms(target.audio)) - audio::amplitude_to_db(a * audio::rms(masker.audio));
  CHECK(std::abs(measured + 6.0) < 0.1);
}

TEST_CASE("morphed masker sentences carry the condition's F0 difference") {
  const auto& target = sentence("dog_red_1");
  const double target_f0 = voice::estimate_f0(target.audio).hz;
  MaskerVoiceCache cache;
  const auto& masker = sentence("cat_black_6");
  const double masker_f0 = voice::estimate_f0(masker.audio).hz;
  for (const auto& v : kExperimentVoices) {
    CAPTURE(v.delta_f0_st);
    CAPTURE(v.delta_vtl_st);
    const auto& morphed = cache.morphed(masker, v);
    const double ratio = voice::estimate_f0(morphed).hz / masker_f0;
    CHECK(std::abs(ratio - voice::semitone_to_ratio(v.delta_f0_st)) / voice::semitone_to_ratio(v.delta_f0_st) < 0.03);
  }
  CHECK(std::abs(masker_f0 - target_f0) / target_f0 < 0.05);
  CHECK(cache.size() == 4);
}

TEST_CASE("corpus validation and disk round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "crm_corpus_test";
  std::filesystem::remove_all(dir);
  write_corpus(dir, small_corpus());
  const auto loaded = load_corpus(dir);
  CHECK(loaded.size() == 96);

  std::filesystem::remove(dir / "cat_blue_9.wav");
  CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("incomplete"), StimulusError);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_corpus(dir), StimulusError);
}

TEST_CASE("pregenerate_corpus renders 95 deterministic stimuli") {
  const auto root = std::filesystem::temp_directory_path() / "crm_pregen_test";
  std::filesystem::remove_all(root);
  PregenerateOptions serial;
  serial.threads = 1;
  PregenerateOptions parallel;
  parallel.threads = 3;
  const auto m1 = pregenerate_corpus(build_condition_grid(), small_corpus(), 77, root / "a", serial);
  const auto m2 = pregenerate_corpus(build_condition_grid(), small_corpus(), 77, root / "b", parallel);
  CHECK(m1.size() == 95);
  CHECK(m1.training.size() == 4);
  CHECK(m1.experiment.size() == 91);
  CHECK(slurp(root / "a" / "manifest.jsonl") == slurp(root / "b" / "manifest.jsonl"));

  for (const auto* list : {&m1.training, &m1.experiment}) {
    for (const auto& t : *list) {
      const auto bytes = slurp(root / "a" / t.stimulus_path);
      REQUIRE(!bytes.empty());
      CHECK(bytes == slurp(root / "b" / t.stimulus_path));
      const auto wav = audio::decode_wav(bytes);
      const auto& target = sentence(t.target_id());
      if (t.tmr.is_baseline()) {
        CHECK(wav.size() == target.audio.size());
      } else {
        CHECK(wav.size() == target.audio.size() + 44100);
      }
    }
  }

  const auto parsed = read_manifest(root / "a" / "manifest.jsonl");
  CHECK(parsed.seed == 77);
  REQUIRE(parsed.experiment.size() == 91);
  for (std::size_t i = 0; i < 91; ++i) {
    CHECK(parsed.experiment[i].target == m1.experiment[i].target);
    CHECK(parsed.experiment[i].tmr == m1.experiment[i].tmr);
    CHECK(parsed.experiment[i].voice == m1.experiment[i].voice);
    CHECK(parsed.experiment[i].seed == m1.experiment[i].seed);
  }
  std::filesystem::remove_all(root);
}

TEST_CASE("manifest parsing rejects foreign or newer files") {
  CHECK_THROWS_AS(manifest_from_jsonl(""), StimulusError);
  CHECK_THROWS_AS(manifest_from_jsonl(R"({"record":"header","schema":"crm.manifest","version":9,"seed":1,"sample_rate":44100,"presentation_level_dbfs":-26})"),
                  StimulusError);
  CHECK_THROWS_AS(manifest_from_jsonl("not json"), StimulusError);
}
