#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "crm/calibration/calibration.hpp"
#include "crm/service/http.hpp"
#include "crm/session/session.hpp"
#include "crm/stats/anova.hpp"
#include "crm/stats/tests.hpp"
#include "crm/stimulus/corpus.hpp"

namespace fs = std::filesystem;
using namespace crm;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes to `path`, or to stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<double> read_numbers(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    for (char& c : tok)
      if (c == ',') c = ' ';
    std::istringstream parts(tok);
    double v;
    while (parts >> v) out.push_back(v);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string ttest_csv_row(const std::string& label, double mu, const stats::TTestResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%g,%g,%.4f,%.6g,%.4f,%.4f\n", label.c_str(), r.mean, r.sd, mu, r.df,
                r.t, r.p, r.ci_low, r.ci_high);
  return buf;
}

constexpr const char* kTtestHeader = "label,mean,sd,mu,df,t,p,ci_low,ci_high\n";

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s)) {
    if (!part.empty()) out.push_back(std::stoi(part));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate response measure speech-in-speech test platform"};
  app.require_subcommand(1);

  // ---------------------------------------------------------------- corpus
  auto* synth = app.add_subcommand("synth-corpus", "Write a formant-synthesized stand-in sentence corpus");
  std::string synth_out;
  stimulus::SyntheticCorpusOptions synth_opts;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_opts.seed, "Synthesis seed");
  synth->add_option("--f0", synth_opts.reference_f0_hz, "Reference F0 in Hz");
  synth->add_option("--duration-scale", synth_opts.duration_scale, "Sentence duration multiplier");
  synth->callback([&] {
    const auto corpus = stimulus::synthesize_corpus(synth_opts);
    stimulus::write_corpus(synth_out, corpus);
    std::cerr << "wrote " << corpus.size() << " sentences to " << synth_out << "\n";
  });

  auto* pregen = app.add_subcommand("pregenerate", "Render every stimulus of one session plan");
  std::string pregen_corpus, pregen_out;
  std::uint64_t pregen_seed = 1;
  stimulus::PregenerateOptions pregen_opts;
  double pregen_level = -26.0;
  pregen->add_option("--corpus-dir", pregen_corpus, "Sentence corpus directory")->required();
  pregen->add_option("--out", pregen_out, "Output directory")->required();
  pregen->add_option("--seed", pregen_seed, "Session seed");
  pregen->add_option("--threads", pregen_opts.threads, "Worker threads (0: all cores)");
  pregen->add_option("--level", pregen_level, "Presentation level in dB FS RMS");
  pregen->callback([&] {
    pregen_opts.presentation_level = audio::DbFs{pregen_level};
    const auto corpus = stimulus::load_corpus(pregen_corpus);
    const auto m =
        stimulus::pregenerate_corpus(stimulus::build_condition_grid(), corpus, pregen_seed, pregen_out, pregen_opts);
    std::cerr << "rendered " << m.size() << " stimuli (" << m.training.size() << " training, "
              << m.experiment.size() << " experimental) into " << pregen_out << "\n";
  });

  // ----------------------------------------------------------- calibration
  auto* cal = app.add_subcommand("calibrate", "Shaped calibration noise and third-octave level report");
  std::string cal_corpus, cal_out, cal_noise_out;
  double cal_duration = 10.0, cal_target = 65.0, cal_offset = 0.0;
  std::uint64_t cal_seed = 1;
  std::vector<std::string> cal_recordings;
  cal->add_option("--corpus-dir", cal_corpus, "Sentence corpus directory")->required();
  cal->add_option("--duration", cal_duration, "Noise duration in seconds");
  cal->add_option("--seed", cal_seed, "Noise seed");
  cal->add_option("--target-spl", cal_target, "Calibrated level in dB SPL");
  cal->add_option("--offset", cal_offset, "dB SPL produced by 0 dB FS (nominal)");
  cal->add_option("--recording", cal_recordings, "Extra series as label=path.wav (e.g. a recorded interface)");
  cal->add_option("--noise-out", cal_noise_out, "Write the shaped noise to this WAV file");
  cal->add_option("--out", cal_out, "Report CSV (default stdout)");
  cal->callback([&] {
    const auto corpus = stimulus::load_corpus(cal_corpus);
    std::vector<audio::AudioBuffer> buffers;
    audio::AudioBuffer joined;
    joined.sample_rate = corpus.front().audio.sample_rate;
    for (const auto& s : corpus) {
      buffers.push_back(s.audio);
      joined.samples.insert(joined.samples.end(), s.audio.samples.begin(), s.audio.samples.end());
    }
    const audio::CalibrationOffset offset{cal_offset};
    const auto noise = calibration::shaped_noise(buffers, cal_duration, cal_seed);
    if (!cal_noise_out.empty()) audio::write_wav(cal_noise_out, noise);
    std::vector<calibration::ThirdOctaveReport> series{calibration::third_octave_levels(noise, "shaped_noise", offset),
                                                       calibration::third_octave_levels(joined, "corpus", offset)};
    for (const auto& spec : cal_recordings) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--recording", "expected label=path");
      series.push_back(calibration::third_octave_levels(audio::read_wav(spec.substr(eq + 1)), spec.substr(0, eq), offset));
    }
    const auto report = calibration::calibration_report(series, audio::DbSpl{cal_target});
    emit(cal_out, calibration::report_to_csv(report));
    for (const auto& f : report.flags) {
      std::cerr << "flag: " << f.label << " deviates " << fmt("%+.1f", f.deviation_db) << " dB at "
                << fmt("%.0f", f.center_hz) << " Hz\n";
    }
  });

  // --------------------------------------------------------------- service
  auto* serve = app.add_subcommand("serve", "Run the session HTTP service");
  service::ServiceConfig svc;
  std::string listen = "127.0.0.1:8080", agent_mode = "none", breaks = "31,61";
  serve->add_option("--corpus-dir", svc.corpus_root, "Directory with one corpus per language")->required();
  serve->add_option("--data-dir", svc.data_dir, "Session data directory")->required();
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--agent-mode", agent_mode, "none, simulated or logging");
  serve->add_option("--break-after", breaks, "Comma-separated data trials followed by a break offer");
  serve->add_option("--nod-s", svc.latencies.nod_s, "Nod feedback duration");
  serve->add_option("--shake-s", svc.latencies.shake_s, "Shake feedback duration");
  serve->add_option("--threads", svc.pregenerate_threads, "Pregeneration threads (0: all cores)");
  serve->add_option("--level", svc.presentation_level_dbfs, "Presentation level in dB FS RMS");
  serve->callback([&] {
    const auto mode = service::parse_agent_mode(agent_mode);
    if (!mode) throw CLI::ValidationError("--agent-mode", "expected none, simulated or logging");
    svc.agent_mode = *mode;
    svc.break_after = parse_int_list(breaks);
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
    service::SessionService service(svc);
    if (service.languages().empty()) std::cerr << "warning: no corpus found under " << svc.corpus_root << "\n";
    httplib::Server server;
    service::install_routes(server, service);
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));
    std::cerr << "listening on " << host << ":" << port << " (" << service.session_count()
              << " sessions resumed)\n";
    if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + listen);
  });

  // --------------------------------------------------------------- session
  auto* sim = app.add_subcommand("simulate", "Run simulated participants and write their logs and metrics");
  std::string sim_out, sim_interface = "both";
  int sim_participants = 20;
  std::uint64_t sim_seed = 1;
  session::ParticipantModel sim_model;
  sim->add_option("--out-dir", sim_out, "Directory for per-session logs and metrics.csv")->required();
  sim->add_option("--participants", sim_participants, "Number of participants");
  sim->add_option("--interface", sim_interface, "plain, embodied or both");
  sim->add_option("--p-correct", sim_model.p_correct, "Probability of a correct answer");
  sim->add_option("--seed", sim_seed, "Base seed");
  sim->callback([&] {
    std::vector<session::InterfaceKind> kinds;
    if (sim_interface == "both") {
      kinds = {session::InterfaceKind::plain, session::InterfaceKind::embodied};
    } else if (auto k = session::parse_interface(sim_interface)) {
      kinds = {*k};
    } else {
      throw CLI::ValidationError("--interface", "expected plain, embodied or both");
    }
    std::vector<session::SessionMetrics> all;
    const auto grid = stimulus::build_condition_grid();
    for (int p = 1; p <= sim_participants; ++p) {
      for (const auto kind : kinds) {
        char id[32];
        std::snprintf(id, sizeof id, "P%02d", p);
        session::SessionContext ctx;
        ctx.config.participant_id = id;
        ctx.config.interface = kind;
        ctx.config.seed = derive_seed(sim_seed, static_cast<std::uint64_t>(p * 2 + static_cast<int>(kind)));
        ctx.config.session_id = std::string(id) + "-" + std::string(session::to_string(kind));
        ctx.manifest = stimulus::plan_manifest(grid, ctx.config.seed);
        auto model = sim_model;
        model.seed = derive_seed(ctx.config.seed, 99);
        const auto r = session::simulate_session(ctx, model, fs::path(sim_out) / ctx.config.session_id);
        all.push_back(r.metrics);
      }
    }
    emit((fs::path(sim_out) / "metrics.csv").string(), session::metrics_to_csv(all));
    std::cerr << "simulated " << all.size() << " sessions into " << sim_out << "\n";
  });

  auto* metrics = app.add_subcommand("metrics", "Replay event logs and export the metrics table");
  std::vector<std::string> metrics_logs;
  std::string metrics_out;
  metrics->add_option("logs", metrics_logs, "events.jsonl files or session directories")->required();
  metrics->add_option("--out", metrics_out, "CSV path (default stdout)");
  metrics->callback([&] {
    std::vector<session::SessionMetrics> all;
    for (const auto& p : metrics_logs) {
      const fs::path path = fs::is_directory(p) ? session::events_path(p) : fs::path(p);
      all.push_back(session::session_metrics(session::read_event_log(path)));
    }
    emit(metrics_out, session::metrics_to_csv(all));
  });

  // ----------------------------------------------------------------- stats
  auto* anova = app.add_subcommand("anova", "Repeated-measures ANOVA on a metrics table");
  std::string anova_in, anova_out, anova_means;
  anova->add_option("--metrics", anova_in, "Metrics CSV")->required();
  anova->add_option("--out", anova_out, "Result table CSV (default stdout)");
  anova->add_option("--cell-means", anova_means, "Write per-cell mean and sd of percent correct here");
  anova->callback([&] {
    const auto data = stats::rm_dataset_from_metrics_csv(read_text(anova_in));
    emit(anova_out, stats::anova_table_csv(stats::rm_anova(data)));
    if (!anova_means.empty()) {
      std::string csv = "cell";
      for (const auto& f : data.factor_names) csv += "," + f;
      csv += ",mean,sd,n\n";
      for (int c = 0; c < data.cells(); ++c) {
        std::vector<double> v;
        for (const auto& row : data.values) v.push_back(row[c]);
        csv += std::to_string(c);
        int rest = c;
        std::vector<int> idx(data.levels.size());
        for (int f = static_cast<int>(data.levels.size()) - 1; f >= 0; --f) {
          idx[f] = rest % data.levels[f];
          rest /= data.levels[f];
        }
        for (std::size_t f = 0; f < idx.size(); ++f) {
          csv += "," + (f < data.level_names.size() ? data.level_names[f][idx[f]] : std::to_string(idx[f]));
        }
        csv += "," + fmt("%.4f", stats::mean_of(v)) + "," + fmt("%.4f", v.size() > 1 ? stats::sd_of(v) : 0.0) +
               "," + std::to_string(v.size()) + "\n";
      }
      emit(anova_means, csv);
    }
  });

  auto* ttest = app.add_subcommand("ttest", "One-sample or paired t-test");
  double tt_mean = 0, tt_sd = 0, tt_mu = 0;
  int tt_n = 0;
  std::string tt_values, tt_a, tt_b, tt_label = "t";
  auto* o_mean = ttest->add_option("--mean", tt_mean, "Sample mean (summary form)");
  ttest->add_option("--sd", tt_sd, "Sample sd (summary form)")->needs(o_mean);
  ttest->add_option("--n", tt_n, "Sample size (summary form)")->needs(o_mean);
  ttest->add_option("--mu", tt_mu, "Hypothesized mean");
  ttest->add_option("--values", tt_values, "File of numbers (one-sample form)");
  ttest->add_option("--paired-a", tt_a, "File of numbers, first condition");
  ttest->add_option("--paired-b", tt_b, "File of numbers, second condition");
  ttest->add_option("--label", tt_label, "Row label");
  ttest->callback([&] {
    stats::TTestResult r;
    double mu = tt_mu;
    if (!tt_a.empty() || !tt_b.empty()) {
      r = stats::paired_t(read_numbers(tt_a), read_numbers(tt_b));
      mu = 0.0;
    } else if (!tt_values.empty()) {
      r = stats::one_sample_t(read_numbers(tt_values), tt_mu);
    } else if (*o_mean) {
      r = stats::one_sample_t(tt_mean, tt_sd, tt_n, tt_mu);
    } else {
      throw CLI::ValidationError("ttest", "give --mean/--sd/--n, --values or --paired-a/--paired-b");
    }
    std::cout << kTtestHeader << ttest_csv_row(tt_label, mu, r);
  });

  auto* nars = app.add_subcommand("nars", "Score NARS questionnaires and test against neutral means");
  std::string nars_in, nars_scores_out;
  nars->add_option("--responses", nars_in, "CSV: participant,item1..item14")->required();
  nars->add_option("--scores", nars_scores_out, "Write per-participant subscale scores here");
  nars->callback([&] {
    std::istringstream in(read_text(nars_in));
    std::string line;
    std::getline(in, line);
    std::vector<double> s[3];
    std::string scores = "participant,s1,s2,s3\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split(line);
      if (cells.size() != 1 + stats::kNarsItems) throw std::runtime_error("NARS row needs 15 columns: " + line);
      std::vector<int> items;
      for (std::size_t i = 1; i < cells.size(); ++i) items.push_back(std::stoi(cells[i]));
      const auto sc = stats::nars_score(items);
      s[0].push_back(sc.s1);
      s[1].push_back(sc.s2);
      s[2].push_back(sc.s3);
      scores += cells[0] + "," + std::to_string(sc.s1) + "," + std::to_string(sc.s2) + "," + std::to_string(sc.s3) + "\n";
    }
    std::string table = kTtestHeader;
    for (int k = 0; k < 3; ++k) {
      table += ttest_csv_row("S" + std::to_string(k + 1), stats::kNarsNeutralMeans[k],
                             stats::one_sample_t(s[k], stats::kNarsNeutralMeans[k]));
    }
    std::cout << table;
    if (!nars_scores_out.empty()) emit(nars_scores_out, scores);
  });

  auto* icc = app.add_subcommand("icc", "ICC(2,k) of an items x raters matrix");
  std::string icc_in;
  icc->add_option("--ratings", icc_in, "CSV with a header row; one row per item, one column per rater")->required();
  icc->callback([&] {
    std::istringstream in(read_text(icc_in));
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> m;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      for (const auto& c : split(line)) row.push_back(std::stod(c));
      m.push_back(row);
    }
    const auto r = stats::icc_2k(m);
    std::cout << "icc,ms_rows,ms_cols,ms_error\n"
              << fmt("%.6f", r.icc) << "," << fmt("%.6g", r.ms_rows) << "," << fmt("%.6g", r.ms_cols) << ","
              << fmt("%.6g", r.ms_error) << "\n";
  });

  auto* boot = app.add_subcommand("bootstrap", "Expected time added by agent feedback");
  double b_p = 0.9, b_correct = 2.5, b_incorrect = 3.2;
  int b_n = 91, b_reps = 10000;
  std::uint64_t b_seed = 1;
  unsigned b_threads = 1;
  boot->add_option("--p-correct", b_p, "Probability of a correct response");
  boot->add_option("--n", b_n, "Trials per session");
  boot->add_option("--correct-s", b_correct, "Feedback seconds after a correct response");
  boot->add_option("--incorrect-s", b_incorrect, "Feedback seconds after an incorrect response");
  boot->add_option("--reps", b_reps, "Bootstrap repetitions");
  boot->add_option("--seed", b_seed, "Seed");
  boot->add_option("--threads", b_threads, "Worker threads");
  boot->callback([&] {
    const auto r = stats::bootstrap_feedback_duration(b_p, b_n, b_correct, b_incorrect, b_reps, b_seed, b_threads);
    std::cout << "p_correct,n,reps,mean_min,sd_s\n"
              << b_p << "," << b_n << "," << r.reps << "," << fmt("%.4f", r.mean_min) << "," << fmt("%.4f", r.sd_s)
              << "\n";
  });

  auto* bc = app.add_subcommand("backchannel", "Tally coded behaviours and rater agreement");
  std::string bc_in, bc_icc_out;
  bc->add_option("--coded", bc_in, "CSV: coder,interface,behavior,segment")->required();
  bc->add_option("--icc-out", bc_icc_out, "Write per-behaviour ICC(2,k) here");
  bc->callback([&] {
    const auto records = stats::parse_backchannel_csv(read_text(bc_in));
    std::cout << stats::tally_to_csv(stats::backchannel_tally(records));
    if (!bc_icc_out.empty()) {
      std::string csv = "behavior,icc\n";
      for (const auto b : stats::kBehaviors) {
        std::string value = "NA";
        try {
          value = fmt("%.4f", stats::icc_2k(stats::rating_matrix(records, b)).icc);
        } catch (const stats::StatsError&) {
        }
        csv += stats::to_string(b) + "," + value + "\n";
      }
      emit(bc_icc_out, csv);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
