#include <sstream>

#include "crm/session/log.hpp"
#include "crm/stimulus/manifest_json.hpp"

namespace crm::session {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw SessionError(SessionErrorKind::corrupt_log, what); }

template <typename E, typename F>
E parse_or_throw(const json& j, F parse, const char* what) {
  const auto v = parse(j.get<std::string>());
  if (!v) corrupt(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

Phase phase_of(const json& j) { return parse_or_throw<Phase>(j, parse_phase, "phase"); }

json keywords_json(const Keywords& k) {
  return json{{"color", std::string(stimulus::to_string(k.color))}, {"number", k.number}};
}

Keywords keywords_of(const json& j) {
  const auto color = stimulus::parse_color(j.at("color").get<std::string>());
  if (!color) corrupt("unknown colour in log");
  return Keywords{*color, j.at("number").get<int>()};
}

}  // namespace

json event_to_json(const Event& event) {
  json j;
  j["seq"] = event.seq;
  j["t"] = event.time_s;
  j["type"] = std::string(event_type(event.payload));
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, events::PhaseChanged>) {
          j["from"] = std::string(to_string(e.from));
          j["to"] = std::string(to_string(e.to));
        } else if constexpr (std::is_same_v<T, events::TrialPresented>) {
          j["phase"] = std::string(to_string(e.phase));
          j["index"] = e.index;
        } else if constexpr (std::is_same_v<T, events::ResponseLogged>) {
          j["phase"] = std::string(to_string(e.phase));
          j["index"] = e.index;
          j["response"] = keywords_json(e.response);
          j["correct"] = e.correct;
          if (!e.request_id.empty()) j["request_id"] = e.request_id;
        } else if constexpr (std::is_same_v<T, events::Feedback>) {
          j["kind"] = std::string(to_string(e.kind));
          j["duration_s"] = e.duration_s;
          if (e.highlight) j["highlight"] = keywords_json(*e.highlight);
        } else if constexpr (std::is_same_v<T, events::BreakOffered>) {
          j["after_trial"] = e.after_trial;
        } else if constexpr (std::is_same_v<T, events::BreakPrompt>) {
          j["stage"] = std::string(to_string(e.stage));
        } else if constexpr (std::is_same_v<T, events::BreakReply>) {
          j["stage"] = std::string(to_string(e.stage));
          j["reply"] = e.yes ? "yes" : "no";
        } else if constexpr (std::is_same_v<T, events::BreakWait>) {
          j["seconds"] = e.seconds;
        }
      },
      event.payload);
  return j;
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.time_s = j.at("t").get<double>();
  const auto type = j.at("type").get<std::string>();
  if (type == "agent_introduction") {
    e.payload = events::AgentIntroduction{};
  } else if (type == "start_screen") {
    e.payload = events::StartScreen{};
  } else if (type == "phase_changed") {
    e.payload = events::PhaseChanged{phase_of(j.at("from")), phase_of(j.at("to"))};
  } else if (type == "trial_presented") {
    e.payload = events::TrialPresented{phase_of(j.at("phase")), j.at("index").get<int>()};
  } else if (type == "response") {
    e.payload = events::ResponseLogged{phase_of(j.at("phase")), j.at("index").get<int>(),
                                       keywords_of(j.at("response")), j.at("correct").get<bool>(),
                                       j.value("request_id", std::string{})};
  } else if (type == "feedback") {
    events::Feedback f;
    f.kind = parse_or_throw<FeedbackKind>(j.at("kind"), parse_feedback, "feedback kind");
    f.duration_s = j.at("duration_s").get<double>();
    if (j.contains("highlight")) f.highlight = keywords_of(j.at("highlight"));
    e.payload = f;
  } else if (type == "training_complete") {
    e.payload = events::TrainingComplete{};
  } else if (type == "break_offered") {
    e.payload = events::BreakOffered{j.at("after_trial").get<int>()};
  } else if (type == "break_prompt") {
    e.payload = events::BreakPrompt{parse_or_throw<BreakStage>(j.at("stage"), parse_break_stage, "break stage")};
  } else if (type == "break_reply") {
    const auto reply = j.at("reply").get<std::string>();
    if (reply != "yes" && reply != "no") corrupt("break reply '" + reply + "'");
    e.payload = events::BreakReply{parse_or_throw<BreakStage>(j.at("stage"), parse_break_stage, "break stage"),
                                   reply == "yes"};
  } else if (type == "break_wait") {
    e.payload = events::BreakWait{j.at("seconds").get<double>()};
  } else if (type == "stretch_routine") {
    e.payload = events::StretchRoutine{};
  } else if (type == "break_ended") {
    e.payload = events::BreakEnded{};
  } else {
    corrupt("unknown event type '" + type + "'");
  }
  return e;
}

json config_to_json(const SessionConfig& c) {
  return json{{"session_id", c.session_id},
              {"participant_id", c.participant_id},
              {"interface", std::string(to_string(c.interface))},
              {"language", c.language},
              {"seed", c.seed},
              {"break_after", c.break_after},
              {"nod_s", c.latencies.nod_s},
              {"shake_s", c.latencies.shake_s},
              {"highlight_s", c.highlight_s},
              {"break_wait_s", c.break_wait_s}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.session_id = j.at("session_id").get<std::string>();
  c.participant_id = j.at("participant_id").get<std::string>();
  c.interface = parse_or_throw<InterfaceKind>(j.at("interface"), parse_interface, "interface");
  c.language = j.at("language").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.break_after = j.at("break_after").get<std::vector<int>>();
  c.latencies.nod_s = j.at("nod_s").get<double>();
  c.latencies.shake_s = j.at("shake_s").get<double>();
  c.highlight_s = j.at("highlight_s").get<double>();
  c.break_wait_s = j.at("break_wait_s").get<double>();
  return c;
}

json log_header(const SessionContext& ctx) {
  json trials = json::array();
  for (const auto& t : ctx.manifest.training) trials.push_back(stimulus::trial_to_json(t));
  for (const auto& t : ctx.manifest.experiment) trials.push_back(stimulus::trial_to_json(t));
  return json{{"record", "header"},
              {"schema", kEventLogSchema},
              {"version", kEventLogVersion},
              {"config", config_to_json(ctx.config)},
              {"manifest",
               {{"seed", ctx.manifest.seed},
                {"sample_rate", ctx.manifest.sample_rate},
                {"presentation_level_dbfs", ctx.manifest.presentation_level_dbfs},
                {"trials", trials}}}};
}

SessionContext context_from_header(const json& h) {
  if (h.value("schema", std::string{}) != kEventLogSchema) corrupt("not a session event log");
  if (h.at("version").get<int>() != kEventLogVersion) {
    corrupt("unsupported event log version " + std::to_string(h.at("version").get<int>()));
  }
  SessionContext ctx;
  ctx.config = config_from_json(h.at("config"));
  const auto& m = h.at("manifest");
  ctx.manifest.seed = m.at("seed").get<std::uint64_t>();
  ctx.manifest.sample_rate = m.at("sample_rate").get<int>();
  ctx.manifest.presentation_level_dbfs = m.at("presentation_level_dbfs").get<double>();
  for (const auto& t : m.at("trials")) {
    auto spec = stimulus::trial_from_json(t);
    (spec.phase == stimulus::TrialPhase::training ? ctx.manifest.training : ctx.manifest.experiment)
        .push_back(std::move(spec));
  }
  return ctx;
}

std::filesystem::path events_path(const std::filesystem::path& dir) { return dir / "events.jsonl"; }
std::filesystem::path summary_path(const std::filesystem::path& dir) { return dir / "summary.json"; }

FileEventLog::FileEventLog(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::unique_ptr<FileEventLog> FileEventLog::create(const std::filesystem::path& dir, const SessionContext& context) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SessionError(SessionErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  if (std::filesystem::exists(events_path(dir))) {
    throw SessionError(SessionErrorKind::duplicate_session, "session log already exists in " + dir.string());
  }
  std::unique_ptr<FileEventLog> log(new FileEventLog(dir));
  log->out_.open(events_path(dir), std::ios::out | std::ios::app);
  if (!log->out_) throw SessionError(SessionErrorKind::io, "cannot open " + events_path(dir).string());
  log->out_ << log_header(context).dump() << '\n' << std::flush;
  return log;
}

std::unique_ptr<FileEventLog> FileEventLog::reopen(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(events_path(dir))) {
    throw SessionError(SessionErrorKind::io, "no session log in " + dir.string());
  }
  std::unique_ptr<FileEventLog> log(new FileEventLog(dir));
  log->out_.open(events_path(dir), std::ios::out | std::ios::app);
  if (!log->out_) throw SessionError(SessionErrorKind::io, "cannot open " + events_path(dir).string());
  return log;
}

void FileEventLog::append(const Event& event) {
  out_ << event_to_json(event).dump() << '\n' << std::flush;
  if (!out_) throw SessionError(SessionErrorKind::io, "event log write failed");
}

void FileEventLog::phase_boundary(const SessionContext& context, const SessionState& state) {
  const auto tmp = summary_path(dir_).string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << session_summary(context, state).dump(2) << '\n';
    if (!out) throw SessionError(SessionErrorKind::io, "summary write failed");
  }
  std::filesystem::rename(tmp, summary_path(dir_));
  ++summary_writes_;
}

LoadedLog read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SessionError(SessionErrorKind::io, "cannot read " + path.string());
  LoadedLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (!have_header) {
        log.context = context_from_header(j);
        have_header = true;
      } else {
        log.events.push_back(event_from_json(j));
      }
    } catch (const json::exception& e) {
      corrupt(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const stimulus::StimulusError& e) {
      corrupt(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) corrupt(path.string() + " has no header");
  return log;
}

json session_summary(const SessionContext& ctx, const SessionState& s) {
  return json{{"schema", "crm.session-summary"},
              {"version", kEventLogVersion},
              {"session_id", ctx.config.session_id},
              {"participant_id", ctx.config.participant_id},
              {"interface", std::string(to_string(ctx.config.interface))},
              {"language", ctx.config.language},
              {"phase", std::string(to_string(s.phase))},
              {"training", {{"answered", s.training_answered}, {"correct", s.training_correct},
                            {"total", ctx.training_trials()}}},
              {"data_collection", {{"answered", s.data_answered}, {"correct", s.data_correct},
                                   {"total", ctx.data_trials()}}},
              {"events", s.next_seq},
              {"updated_t", s.last_time_s}};
}

}  // namespace crm::session
