// Acceptance run: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "crm/calibration/calibration.hpp"
#include "crm/session/session.hpp"
#include "crm/stats/anova.hpp"
#include "crm/stats/tests.hpp"
#include "crm/stimulus/corpus.hpp"
#include "crm/stimulus/masker_detail.hpp"
#include "crm/voice/voice_morph.hpp"
#include "support/signals.hpp"

using namespace crm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const std::vector<stimulus::Sentence>& corpus() {
  static const auto c = [] {
    stimulus::SyntheticCorpusOptions o;
    o.duration_scale = 0.6;
    return stimulus::synthesize_corpus(o);
  }();
  return c;
}

double relative_error(double got, double want) { return std::abs(got - want) / std::abs(want); }

// ---------------------------------------------------------------------------

Verdict nars_t() {
  Verdict v;
  const auto s1 = stats::one_sample_t(14.8, 3.73, 20, 18.0);
  const auto s2 = stats::one_sample_t(15.8, 2.17, 20, 15.0);
  const auto s3 = stats::one_sample_t(8.5, 1.91, 20, 9.0);
  v.require(std::abs(s1.t + 3.83) <= 0.02, "S1 t = -3.83 +- 0.02");
  v.require(s1.p < 0.01, "S1 p < 0.01");
  v.require(std::abs(std::abs(s2.t) - 1.65) <= 0.01, "|S2 t| = 1.65 +- 0.01");
  v.require(std::abs(std::abs(s3.t) - 1.17) <= 0.02, "|S3 t| = 1.17 +- 0.02");
  v.note(fmt("S1 t=%.3f p=%.4f", s1.t, s1.p) + fmt(", S2 t=%.3f, S3 t=%.3f", s2.t, s3.t));
  return v;
}

Verdict design_grid() {
  Verdict v;
  const auto grid = stimulus::build_condition_grid();
  v.require(grid.cells.size() == 13, "13 cells");
  bool seven = true;
  std::map<double, int> tmr;
  for (const auto& c : grid.cells) {
    seven = seven && c.trials == 7;
    if (!c.tmr.is_baseline()) tmr[c.tmr.value_db()] += c.trials;
  }
  v.require(seven, "7 trials per cell");
  v.require(grid.total_trials() == 91, "91 trials");
  v.require(tmr.size() == 3 && tmr[-6.0] == 28 && tmr[0.0] == 28 && tmr[6.0] == 28, "TMR marginals 28/28/28");

  const auto dir = fs::temp_directory_path() / "crm_acceptance_pregen";
  fs::remove_all(dir);
  const auto m = stimulus::pregenerate_corpus(grid, corpus(), 5, dir);
  int wavs = 0;
  for (const auto& f : fs::directory_iterator(dir / "stimuli")) wavs += f.path().extension() == ".wav";
  v.require(m.size() == 95 && wavs == 95, "95 stimuli pregenerated");
  v.note("cells=" + std::to_string(grid.cells.size()) + " trials=" + std::to_string(grid.total_trials()) +
         " stimuli=" + std::to_string(wavs));
  fs::remove_all(dir);
  return v;
}

Verdict masker_timing() {
  Verdict v;
  std::mt19937_64 pick(7);
  std::vector<int> bins(10, 0);
  int segments = 0;
  bool lengths_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<const stimulus::Sentence*> targets;
    for (const auto& s : corpus())
      if (s.call_sign == stimulus::CallSign::dog) targets.push_back(&s);
    const auto& target = *targets[pick() % targets.size()];
    Rng rng(derive_seed(31, static_cast<std::uint64_t>(trial)));
    const auto m = stimulus::splice_masker(corpus(), target.keywords, target.audio.size(), rng);
    const long diff = static_cast<long>(m.audio.size()) - static_cast<long>(target.audio.size());
    lengths_ok = lengths_ok && std::abs(diff - 44100) <= 1;
    for (const auto& seg : m.segments) {
      const double ms = seg.drawn_length * 1000.0 / 44100.0;
      if (ms < 149.99 || ms > 300.01) lengths_ok = false;
      ++bins[std::clamp(static_cast<int>((ms - 150.0) / 15.0), 0, 9)];
      ++segments;
    }
  }
  double chi2 = 0.0;
  const double expected = segments / 10.0;
  for (int b : bins) chi2 += (b - expected) * (b - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(9), chi2));
  v.require(lengths_ok, "masker = target + 1.000 s +- 1 sample, segments within [150, 300] ms");
  v.require(p > 0.01, "segment lengths uniform (chi-square p > 0.01)");
  v.note(fmt("200 trials, %.0f segments, chi2=%.2f p=%.3f", segments, chi2, p));
  return v;
}

Verdict tmr_accuracy() {
  Verdict v;
  double worst = 0.0;
  for (const char* id : {"dog_green_2", "dog_white_8", "dog_blue_4"}) {
    const stimulus::Sentence* target = nullptr;
    for (const auto& s : corpus())
      if (s.id == id) target = &s;
    Rng rng(3);
    const auto masker = stimulus::splice_masker(corpus(), target->keywords, target->audio.size(), rng);
    const std::size_t lead = 33075;
    for (double tmr : {-6.0, 0.0, 6.0}) {
      const auto mix =
          stimulus::mix_trial(target->audio, &masker.audio, stimulus::TmrCondition::db(tmr), audio::DbFs{-26.0});
      // Least-squares component gains: out = a * masker + b * delayed target.
      double mm = 0, tt = 0, mt = 0, om = 0, ot = 0;
      for (std::size_t i = 0; i < mix.audio.size(); ++i) {
        const double mk = masker.audio.samples[i];
        const double tg = i >= lead && i - lead < target->audio.size() ? target->audio.samples[i - lead] : 0.0;
        mm += mk * mk;
        tt += tg * tg;
        mt += mk * tg;
        om += mix.audio.samples[i] * mk;
        ot += mix.audio.samples[i] * tg;
      }
      const double det = mm * tt - mt * mt;
      const double a = (om * tt - ot * mt) / det, b = (ot * mm - om * mt) / det;
      const double rms_t = std::sqrt(tt / target->audio.size());
      const double rms_m = std::sqrt(mm / masker.audio.size());
      const double measured = 20.0 * std::log10(b * rms_t) - 20.0 * std::log10(a * rms_m);
      worst = std::max(worst, std::abs(measured - tmr));
    }
  }
  v.require(worst <= 0.1, "component RMS difference within 0.1 dB of nominal");
  v.note(fmt("max |error| = %.4f dB over 3 targets x 3 TMRs", worst));
  return v;
}

Verdict voice_morph() {
  Verdict v;
  const auto p = testing::pulse_train(242.0, 1.0);
  const auto down = voice::shift_f0(p, -12.0);
  const double f0 = testing::autocorrelation_f0(down);
  const double dur = std::abs(static_cast<double>(down.size()) - p.size()) / p.size();
  v.require(relative_error(f0, 121.0) <= 0.03, "shift_f0(-12) F0 = 121 Hz +- 3%");
  v.require(dur <= 0.02, "duration change <= 2%");

  const auto vowel = testing::single_formant_vowel(242.0, 1000.0, 1.0);
  const auto longer = voice::shift_vtl(vowel, 3.8);
  const double vf0 = testing::autocorrelation_f0(longer);
  const double peak = testing::formant_peak(longer, vf0, 300.0, 3000.0);
  v.require(relative_error(vf0, 242.0) <= 0.03, "shift_vtl(+3.8) F0 within 3%");
  v.require(relative_error(peak, 803.0) <= 0.05, "1 kHz peak moves to 803 Hz +- 5%");
  v.note(fmt("F0 %.1f Hz, duration change %.2f%%", f0, 100 * dur) + fmt(", VTL: F0 %.1f Hz, peak %.0f Hz", vf0, peak));
  return v;
}

Verdict anova_oracle() {
  Verdict v;
  std::mt19937_64 g(77);
  std::normal_distribution<double> noise(0.0, 10.0);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    stats::RmDataset d;
    d.levels = {2};
    std::vector<double> a, b;
    for (int s = 0; s < 3; ++s) {
      const double base = 50 + noise(g);
      a.push_back(base + noise(g));
      b.push_back(base + 3 + noise(g));
      d.values.push_back({a.back(), b.back()});
    }
    // Paired t from first principles.
    double md = 0;
    for (int s = 0; s < 3; ++s) md += (a[s] - b[s]) / 3;
    double ss = 0;
    for (int s = 0; s < 3; ++s) ss += std::pow(a[s] - b[s] - md, 2);
    const double t = md / std::sqrt(ss / 2 / 3);
    worst = std::max(worst, relative_error(stats::rm_anova(d).at(0).f, t * t));
  }
  v.require(worst <= 1e-9, "F = paired t^2 to 1e-9 on 50 datasets");

  // Fixed 2x2, 3 subjects, against a brute-force decomposition.
  stats::RmDataset d;
  d.factor_names = {"A", "B"};
  d.levels = {2, 2};
  d.values = {{10, 14, 13, 21}, {8, 13, 9, 15}, {12, 15, 16, 25}};
  double G = 0, Ms[3] = {}, Ma[2] = {}, Mb[2] = {}, Mab[2][2] = {}, Msa[3][2] = {}, Msb[3][2] = {};
  auto y = [&](int s, int a, int b) { return d.values[s][a * 2 + b]; };
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        G += y(s, a, b) / 12;
        Ms[s] += y(s, a, b) / 4;
        Ma[a] += y(s, a, b) / 6;
        Mb[b] += y(s, a, b) / 6;
        Mab[a][b] += y(s, a, b) / 3;
        Msa[s][a] += y(s, a, b) / 2;
        Msb[s][b] += y(s, a, b) / 2;
      }
  double ss_a = 0, ss_b = 0, ss_ab = 0, ss_as = 0, ss_bs = 0, ss_abs = 0;
  for (int i = 0; i < 2; ++i) {
    ss_a += 6 * std::pow(Ma[i] - G, 2);
    ss_b += 6 * std::pow(Mb[i] - G, 2);
    for (int j = 0; j < 2; ++j) ss_ab += 3 * std::pow(Mab[i][j] - Ma[i] - Mb[j] + G, 2);
  }
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 2; ++i) {
      ss_as += 2 * std::pow(Msa[s][i] - Ms[s] - Ma[i] + G, 2);
      ss_bs += 2 * std::pow(Msb[s][i] - Ms[s] - Mb[i] + G, 2);
      for (int j = 0; j < 2; ++j)
        ss_abs += std::pow(y(s, i, j) - Msa[s][i] - Msb[s][j] - Mab[i][j] + Ma[i] + Mb[j] + Ms[s] - G, 2);
    }
  const auto e = stats::rm_anova(d);
  const double want[3][2] = {{ss_a, ss_as}, {ss_b, ss_bs}, {ss_ab, ss_abs}};
  double worst_ss = 0.0;
  for (int k = 0; k < 3; ++k) {
    worst_ss = std::max(worst_ss, relative_error(e[k].ss_effect, want[k][0]));
    worst_ss = std::max(worst_ss, relative_error(e[k].ss_error, want[k][1]));
  }
  v.require(worst_ss <= 1e-9, "2x2 SS terms match brute force");
  bool eps_one = true;
  for (const auto& x : e) eps_one = eps_one && x.epsilon_gg == 1.0;
  v.require(eps_one, "GG epsilon = 1 for 2-level factors");

  std::vector<std::vector<double>> cs(4, std::vector<double>(4, 2.0));
  for (int i = 0; i < 4; ++i) cs[i][i] = 5.0;
  const double eps = stats::gg_epsilon(cs);
  v.require(std::abs(eps - 1.0) <= 1e-9, "GG epsilon = 1 +- 1e-9 under compound symmetry");
  v.note(fmt("max rel err F/t^2 %.2e, SS %.2e, CS epsilon-1 %.1e", worst, worst_ss, eps - 1.0));
  return v;
}

Verdict bootstrap() {
  Verdict v;
  const auto r = stats::bootstrap_feedback_duration(0.9, 91, 2.5, 3.2, 10000, 2024);
  const auto all = stats::bootstrap_feedback_duration(1.0, 91, 2.5, 3.2, 10000, 2024);
  v.require(std::abs(r.mean_min - 3.90) <= 0.02, "p = 0.9 mean 3.90 +- 0.02 min");
  v.require(all.mean_min * 60.0 == 227.5, "p = 1 gives exactly 227.5 s");
  v.note(fmt("p=0.9: %.4f min (sd %.2f s); p=1: %.4f s", r.mean_min, r.sd_s, all.mean_min * 60.0));
  return v;
}

Verdict icc() {
  Verdict v;
  const auto perfect = stats::icc_2k({{1, 1}, {4, 4}, {2, 2}, {5, 5}});
  // Hand decomposition of [[1,2],[2,3],[3,4],[4,5]]: MS_rows = 10/3, MS_cols = 2, MS_err = 0.
  const double hand = (10.0 / 3.0 - 0.0) / (10.0 / 3.0 + (2.0 - 0.0) / 4.0);
  const auto four = stats::icc_2k({{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const auto anti = stats::icc_2k({{1, 3}, {3, 1}, {2, 5}, {5, 2}, {4, 4}});
  v.require(std::abs(perfect.icc - 1.0) <= 1e-12, "perfect agreement = 1");
  v.require(std::abs(four.icc - hand) <= 1e-9, "4x2 example matches hand computation to 1e-9");
  v.require(anti.icc < 0.0, "anti-correlated raters give a negative value");
  v.note(fmt("perfect %.6f, 4x2 %.9f, anti %.4f", perfect.icc, four.icc, anti.icc));
  return v;
}

Verdict session_replay() {
  Verdict v;
  const auto root = fs::temp_directory_path() / "crm_acceptance_replay";
  fs::remove_all(root);
  int exact = 0;
  for (int i = 0; i < 20; ++i) {
    session::SessionContext ctx;
    ctx.config.session_id = "acc-" + std::to_string(i);
    ctx.config.participant_id = "P" + std::to_string(i);
    ctx.config.interface = i % 2 ? session::InterfaceKind::embodied : session::InterfaceKind::plain;
    ctx.config.seed = 900 + i;
    ctx.manifest = stimulus::plan_manifest(stimulus::build_condition_grid(), ctx.config.seed);
    session::ParticipantModel model;
    model.p_correct = std::uniform_real_distribution<double>(0.2, 1.0)(*std::make_unique<std::mt19937_64>(i));
    model.seed = 70 + i;
    const auto dir = root / ctx.config.session_id;
    const auto live = session::simulate_session(ctx, model, dir);
    const auto log = session::read_event_log(session::events_path(dir));
    const auto state = session::replay(log.context, log.events);
    if (state == live.state && state.data_correct == live.state.data_correct &&
        session::session_metrics(log) == live.metrics && live.metrics.responses == 91)
      ++exact;
  }
  v.require(exact == 20, "20 sessions replay to identical state, tally and metrics");

  // Persistence cost: every append adds exactly its own line and leaves the
  // earlier bytes untouched, however long the log already is.
  struct Spy : session::EventSink {
    std::unique_ptr<session::FileEventLog> inner;
    fs::path file;
    std::uintmax_t size = 0;
    bool constant = true;
    int appends = 0;
    void append(const session::Event& e) override {
      inner->append(e);
      ++appends;
      const auto now = fs::file_size(file);
      constant = constant && now == size + session::event_to_json(e).dump().size() + 1;
      size = now;
    }
    void phase_boundary(const session::SessionContext& c, const session::SessionState& s) override {
      inner->phase_boundary(c, s);
    }
  };
  session::SessionContext ctx;
  ctx.config.session_id = "acc-append";
  ctx.config.participant_id = "P99";
  ctx.config.seed = 5;
  ctx.manifest = stimulus::plan_manifest(stimulus::build_condition_grid(), ctx.config.seed);
  const auto dir = root / "append";
  auto spy = std::make_unique<Spy>();
  spy->inner = session::FileEventLog::create(dir, ctx);
  spy->file = session::events_path(dir);
  spy->size = fs::file_size(spy->file);
  Spy* raw = spy.get();
  std::string head;
  {
    std::ifstream in(spy->file, std::ios::binary);
    std::getline(in, head);
  }
  session::SimulatedClock clock;
  session::Session s(ctx, std::move(spy), clock);
  s.advance();
  while (s.state().phase != session::Phase::done) {
    const auto step = s.next_trial();
    if (const auto* d = std::get_if<session::TrialDescriptor>(&step)) {
      s.submit_response(d->spec->target);
    } else if (std::get<session::Transition>(step) == session::Transition::awaiting_confirmation) {
      s.advance();
    } else {
      s.break_reply(false);
    }
  }
  std::string head_after;
  {
    std::ifstream in(raw->file, std::ios::binary);
    std::getline(in, head_after);
  }
  v.require(raw->constant && head == head_after, "each append writes only its own line");
  v.note(std::to_string(exact) + "/20 exact replays, " + std::to_string(raw->appends) + " single-line appends");
  fs::remove_all(root);
  return v;
}

Verdict calibration_check() {
  Verdict v;
  const double amplitude = std::sqrt(2.0) * std::pow(10.0, -3.0 / 20.0);
  const auto tone = calibration::third_octave_levels(testing::sine(1000.0, 2.0, amplitude));
  double in_band = -999, worst_other = -999;
  for (const auto& b : tone.bands) {
    if (std::abs(b.center_hz - 1000.0) < 1.0) in_band = b.level_db;
    else worst_other = std::max(worst_other, b.level_db);
  }
  v.require(std::abs(in_band + 3.0) <= 0.5, "1 kHz band = -3 +- 0.5 dB");
  v.require(worst_other <= -40.0, "other bands <= -40 dB");

  // Reference 1: a white-noise corpus; band power is proportional to bandwidth.
  const std::vector<audio::AudioBuffer> flat{testing::white_noise(20.0, 3)};
  const auto flat_out = calibration::third_octave_levels(calibration::shaped_noise(flat, 20.0, 9));
  double total_bw = 0.0;
  for (const auto& b : flat_out.bands) total_bw += calibration::band_upper_edge(b.center_hz) - calibration::band_lower_edge(b.center_hz);
  double worst_flat = 0.0;
  for (const auto& b : flat_out.bands) {
    const double bw = calibration::band_upper_edge(b.center_hz) - calibration::band_lower_edge(b.center_hz);
    worst_flat = std::max(worst_flat, std::abs(b.level_db - (flat_out.overall_db + 10.0 * std::log10(bw / total_bw))));
  }
  v.require(worst_flat <= 2.0, "white reference matched within 2 dB per band");

  // Reference 2: the 4096-bin averaged spectrum of a speech corpus, integrated
  // per band as a piecewise-linear function.
  std::vector<audio::AudioBuffer> speech;
  for (const auto& s : corpus()) speech.push_back(s.audio);
  speech.resize(24);
  const auto mag = calibration::average_magnitude_spectrum(speech);
  const auto got = calibration::third_octave_levels(calibration::shaped_noise(speech, 30.0, 7));
  std::vector<double> ref;
  double total = 0.0;
  for (const auto& b : got.bands) {
    double p = 0.0;
    for (double f = calibration::band_lower_edge(b.center_hz); f < calibration::band_upper_edge(b.center_hz); f += 0.05) {
      const double pos = f * 4096.0 / 44100.0;
      const auto k = static_cast<std::size_t>(pos);
      const double m = mag[k] + (pos - k) * (mag[k + 1] - mag[k]);
      p += m * m;
    }
    ref.push_back(p);
    total += p;
  }
  double worst_speech = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    worst_speech = std::max(worst_speech, std::abs(got.bands[i].level_db - (10.0 * std::log10(ref[i] / total) + got.overall_db)));
  }
  v.require(worst_speech <= 2.0, "speech-corpus reference matched within 2 dB per band");
  v.note(fmt("tone band %.2f dB, others <= %.1f dB", in_band, worst_other) +
         fmt(", max band deviation white %.2f dB, speech %.2f dB", worst_flat, worst_speech));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {"NARS t-test reproduction", 1.0, nars_t},
      {"Design-grid exactness", 1.0, design_grid},
      {"Masker timing", 30.0, masker_timing},
      {"TMR accuracy", 10.0, tmr_accuracy},
      {"Voice morph", 10.0, voice_morph},
      {"ANOVA oracle equivalence", 5.0, anova_oracle},
      {"Bootstrap duration", 5.0, bootstrap},
      {"ICC", 1.0, icc},
      {"Session replay", 60.0, session_replay},
      {"Calibration", 30.0, calibration_check},
  };
  (void)corpus();
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.require(false, std::string("threw: ") + e.what());
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(elapsed <= c.budget_s, fmt("runtime %.1f s within %.0f s", elapsed, c.budget_s));
    failed += !v.pass;
    std::printf("%s %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), elapsed);
  }
  std::fflush(stdout);
  return failed;
}
