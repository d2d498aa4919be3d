#include "crm/service/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace crm::service {

namespace fs = std::filesystem;
using session::Phase;
using session::SessionError;
using session::SessionErrorKind;

int http_status(SessionErrorKind kind) {
  switch (kind) {
    case SessionErrorKind::invalid_config: return 400;
    case SessionErrorKind::illegal_keyword:
    case SessionErrorKind::invalid_reply: return 422;
    case SessionErrorKind::duplicate_session:
    case SessionErrorKind::wrong_phase:
    case SessionErrorKind::duplicate_submission:
    case SessionErrorKind::incomplete_session: return 409;
    case SessionErrorKind::missing_manifest:
    case SessionErrorKind::corrupt_log:
    case SessionErrorKind::io: return 500;
  }
  return 500;
}

json error_body(const ServiceError& error) {
  json e = error.details();
  e["code"] = error.code();
  e["message"] = error.what();
  return json{{"api_version", kApiVersion}, {"error", e}};
}

std::string_view to_string(AgentMode m) {
  switch (m) {
    case AgentMode::none: return "none";
    case AgentMode::simulated: return "simulated";
    case AgentMode::logging: return "logging";
  }
  return "none";
}

std::optional<AgentMode> parse_agent_mode(std::string_view s) {
  for (auto m : {AgentMode::none, AgentMode::simulated, AgentMode::logging})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

namespace {

ServiceError bad_request(const std::string& message) { return ServiceError(400, "bad_request", message); }

ServiceError from_session_error(const SessionError& e) {
  return ServiceError(http_status(e.kind()), std::string(session::to_string(e.kind())), e.what());
}

// Runs f, translating engine errors into service errors.
template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const SessionError& e) {
    throw from_session_error(e);
  }
}

const json& member(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) throw bad_request(std::string("missing field '") + key + "'");
  return body.at(key);
}

std::string string_member(const json& body, const char* key) {
  const auto& v = member(body, key);
  if (!v.is_string()) throw bad_request(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw ServiceError(500, "io", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ServiceError(500, "io", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string random_token() {
  static std::mutex mutex;
  static std::random_device device;
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", device(), device(), device(), device());
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CreateSessionRequest create_request_from_json(const json& body) {
  if (!body.is_object()) throw bad_request("request body must be a JSON object");
  CreateSessionRequest r;
  r.participant_id = string_member(body, "participant_id");
  if (r.participant_id.empty()) throw bad_request("participant_id must not be empty");
  if (body.contains("language")) r.language = string_member(body, "language");
  const auto iface = session::parse_interface(string_member(body, "interface"));
  if (!iface) throw bad_request("interface must be 'plain' or 'embodied'");
  r.interface = *iface;
  if (body.contains("phase")) {
    const auto p = session::parse_phase(string_member(body, "phase"));
    if (!p || (*p != Phase::intro && *p != Phase::training)) throw bad_request("phase must be 'intro' or 'training'");
    r.start_phase = *p;
  }
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) throw bad_request("seed must be a non-negative integer");
    r.seed = body["seed"].get<std::uint64_t>();
  }
  return r;
}

json handle_to_json(const SessionHandle& h, bool with_token) {
  json j{{"session_id", h.session_id},
         {"participant_id", h.participant_id},
         {"language", h.language},
         {"interface", session::to_string(h.interface)},
         {"created_at", h.created_at}};
  if (with_token) j["token"] = h.token;
  return j;
}

SessionHandle handle_from_json(const json& j) {
  SessionHandle h;
  h.session_id = j.at("session_id").get<std::string>();
  h.token = j.at("token").get<std::string>();
  h.participant_id = j.at("participant_id").get<std::string>();
  h.language = j.at("language").get<std::string>();
  h.interface = session::parse_interface(j.at("interface").get<std::string>()).value();
  h.created_at = j.at("created_at").get<std::string>();
  return h;
}

json state_to_json(const SessionHandle& handle, const session::SessionContext& context,
                   const session::SessionState& state) {
  json j = handle_to_json(handle, false);
  j["api_version"] = kApiVersion;
  j["phase"] = session::to_string(state.phase);
  j["awaiting_response"] = state.awaiting_response;
  j["awaiting_confirmation"] = state.awaiting_confirmation;
  j["break_stage"] = state.break_stage ? json(session::to_string(*state.break_stage)) : json(nullptr);
  j["breaks_taken"] = state.breaks_taken;
  j["progress"] = {
      {"training",
       {{"presented", state.training_presented}, {"answered", state.training_answered}, {"total", context.training_trials()}}},
      {"data_collection",
       {{"presented", state.data_presented}, {"answered", state.data_answered}, {"total", context.data_trials()}}}};
  return j;
}

json outcome_to_json(const session::ResponseOutcome& o) {
  json feedback{{"kind", session::to_string(o.feedback.kind)}, {"duration_s", o.feedback.duration_s}};
  if (o.feedback.highlight) {
    feedback["highlight"] = {{"color", stimulus::to_string(o.feedback.highlight->color)},
                             {"number", o.feedback.highlight->number}};
  }
  return json{{"api_version", kApiVersion},
              {"phase", session::to_string(o.phase)},
              {"index", o.index},
              {"correct", o.correct},
              {"feedback", feedback},
              {"next", session::to_string(o.next)},
              {"replayed", o.replayed}};
}

json break_step_to_json(const session::BreakStep& step, Phase phase) {
  return json{{"api_version", kApiVersion},
              {"prompt", step.prompt ? json(session::to_string(*step.prompt)) : json(nullptr)},
              {"waited_s", step.waited_s},
              {"stretched", step.stretched},
              {"phase", session::to_string(phase)}};
}

// ---------------------------------------------------------------------------

struct SessionService::Language {
  std::string name;
  std::vector<stimulus::Sentence> corpus;
  stimulus::MaskerVoiceCache cache;
};

struct SessionService::Entry {
  SessionHandle handle;
  fs::path dir;
  std::mutex write_mutex;
  session::WallClock clock;
  std::ofstream agent_log;
  std::unique_ptr<session::Agent> agent;
  std::optional<session::Session> live;

  mutable std::mutex snapshot_mutex;
  json snapshot;

  // Caller holds write_mutex.
  void publish() {
    json s = state_to_json(handle, live->context(), live->state());
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(s);
  }
};

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.corpus_root.empty() && fs::is_directory(config_.corpus_root)) {
    for (const auto& d : fs::directory_iterator(config_.corpus_root)) {
      if (!d.is_directory()) continue;
      try {
        auto lang = std::make_unique<Language>();
        lang->name = d.path().filename().string();
        lang->corpus = stimulus::load_corpus(d.path());
        languages_.emplace(lang->name, std::move(lang));
      } catch (const std::exception& e) {
        std::clog << "warning: skipping corpus " << d.path() << ": " << e.what() << "\n";
      }
    }
  }
  fs::create_directories(config_.data_dir);
  resume_sessions();
}

SessionService::~SessionService() = default;

std::vector<std::string> SessionService::languages() const {
  std::vector<std::string> out;
  for (const auto& [name, lang] : languages_) out.push_back(name);
  return out;
}

std::size_t SessionService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::open_entry(SessionHandle handle, const fs::path& dir,
                                                                  std::optional<session::SessionContext> fresh) {
  auto entry = std::make_shared<Entry>();
  entry->handle = std::move(handle);
  entry->dir = dir;
  switch (config_.agent_mode) {
    case AgentMode::none: break;
    case AgentMode::simulated: entry->agent = std::make_unique<session::SimulatedAgent>(); break;
    case AgentMode::logging:
      entry->agent_log.open(dir / "agent.log", std::ios::app);
      entry->agent = std::make_unique<session::LoggingAgent>(entry->agent_log);
      break;
  }
  if (fresh) {
    auto sink = session::FileEventLog::create(dir, *fresh);
    entry->live.emplace(std::move(*fresh), std::move(sink), entry->clock, entry->agent.get());
  } else {
    auto log = session::read_event_log(session::events_path(dir));
    auto sink = session::FileEventLog::reopen(dir);
    entry->live.emplace(session::Session::resume(std::move(log), std::move(sink), entry->clock, entry->agent.get()));
  }
  return entry;
}

void SessionService::resume_sessions() {
  for (const auto& d : fs::directory_iterator(config_.data_dir)) {
    if (!d.is_directory() || !fs::exists(d.path() / "handle.json") || !fs::exists(session::events_path(d.path())))
      continue;
    try {
      auto handle = handle_from_json(json::parse(read_file(d.path() / "handle.json")));
      auto entry = open_entry(handle, d.path(), std::nullopt);
      std::lock_guard write(entry->write_mutex);
      entry->publish();
      sessions_.emplace(handle.session_id, std::move(entry));
    } catch (const std::exception& e) {
      std::clog << "warning: cannot resume session in " << d.path() << ": " << e.what() << "\n";
    }
  }
}

json SessionService::create_session(const CreateSessionRequest& request) {
  if (request.participant_id.empty()) throw bad_request("participant_id must not be empty");
  const auto lang = languages_.find(request.language);
  if (lang == languages_.end()) {
    throw ServiceError(422, "unknown_language", "language '" + request.language + "' is not installed",
                       json{{"installed", languages()}});
  }

  SessionHandle handle;
  handle.session_id = random_token();
  handle.token = random_token();
  handle.participant_id = request.participant_id;
  handle.language = request.language;
  handle.interface = request.interface;
  handle.created_at = utc_timestamp();
  const fs::path dir = config_.data_dir / handle.session_id;
  fs::create_directories(dir);

  session::SessionConfig sc;
  sc.session_id = handle.session_id;
  sc.participant_id = handle.participant_id;
  sc.interface = handle.interface;
  sc.language = handle.language;
  sc.seed = request.seed ? *request.seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
  sc.break_after = config_.break_after;
  sc.latencies = config_.latencies;

  session::SessionContext context;
  context.config = sc;
  try {
    stimulus::PregenerateOptions options;
    options.presentation_level = audio::DbFs{config_.presentation_level_dbfs};
    options.threads = config_.pregenerate_threads;
    options.cache = &lang->second->cache;
    context.manifest = stimulus::pregenerate_corpus(stimulus::build_condition_grid(), lang->second->corpus, sc.seed,
                                                    dir, options);
  } catch (const std::exception& e) {
    std::error_code ignored;
    fs::remove_all(dir, ignored);
    throw ServiceError(500, "pregeneration_failed", e.what());
  }

  auto entry = guarded([&] {
    session::validate_config(sc, context.data_trials());
    write_atomically(dir / "handle.json", handle_to_json(handle, true).dump(2) + "\n");
    auto e = open_entry(handle, dir, std::move(context));
    if (request.start_phase == Phase::training) e->live->advance();
    return e;
  });
  json state;
  {
    std::lock_guard write(entry->write_mutex);
    entry->publish();
    state = entry->snapshot;
  }
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(handle.session_id, entry);
  }
  return json{{"api_version", kApiVersion},
              {"session", handle_to_json(handle, false)},
              {"token", handle.token},
              {"state", state}};
}

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + session_id + "'");
  return it->second;
}

std::shared_ptr<SessionService::Entry> SessionService::authorize(const std::string& session_id,
                                                                 const std::string& token) const {
  auto entry = find(session_id);
  if (token.empty() || token != entry->handle.token) {
    throw ServiceError(401, "unauthorized", "a valid session token is required");
  }
  return entry;
}

json SessionService::state(const std::string& session_id) const {
  auto entry = find(session_id);
  std::lock_guard lock(entry->snapshot_mutex);
  return entry->snapshot;
}

std::string SessionService::mint_stimulus_token(const fs::path& file) {
  auto token = random_token();
  std::lock_guard lock(stimuli_mutex_);
  stimuli_.emplace(token, file);
  return token;
}

std::string SessionService::take_stimulus(const std::string& stimulus_token) {
  fs::path file;
  {
    std::lock_guard lock(stimuli_mutex_);
    const auto it = stimuli_.find(stimulus_token);
    if (it == stimuli_.end()) throw ServiceError(404, "unknown_stimulus", "stimulus link is unknown or already used");
    file = it->second;
    stimuli_.erase(it);
  }
  return read_file(file);
}

json SessionService::current_trial(const std::string& session_id, const std::string& token) {
  auto entry = authorize(session_id, token);
  std::lock_guard write(entry->write_mutex);
  const auto step = guarded([&] { return entry->live->next_trial(); });
  entry->publish();
  json out{{"api_version", kApiVersion}, {"session_id", session_id}};
  if (const auto* t = std::get_if<session::TrialDescriptor>(&step)) {
    const auto url = "/v1/stimuli/" + mint_stimulus_token(entry->dir / t->spec->stimulus_path);
    out["status"] = "trial";
    out["phase"] = session::to_string(t->phase);
    out["trial"] = {{"phase", session::to_string(t->phase)},
                    {"index", t->index},
                    {"total", t->total},
                    {"answered", t->answered},
                    {"stimulus_url", url}};
  } else {
    out["status"] = session::to_string(std::get<session::Transition>(step));
    out["phase"] = session::to_string(entry->live->state().phase);
  }
  return out;
}

json SessionService::post_response(const std::string& session_id, const std::string& token, const json& body) {
  auto entry = authorize(session_id, token);
  std::string request_id;
  if (body.is_object() && body.contains("request_id")) request_id = string_member(body, "request_id");
  const auto color = stimulus::parse_color(string_member(body, "color"));
  const auto& number = member(body, "number");
  if (!number.is_number_integer()) throw bad_request("field 'number' must be an integer");

  std::lock_guard write(entry->write_mutex);
  const auto outcome = guarded([&] {
    // A known request id is answered from the log before any validation.
    if (!color && !entry->live->state().find_request(request_id)) {
      throw SessionError(SessionErrorKind::illegal_keyword,
                         "illegal colour '" + body["color"].get<std::string>() + "'");
    }
    return entry->live->submit_response(
        stimulus::Keywords{color.value_or(stimulus::Color::red), number.get<int>()}, request_id);
  });
  entry->publish();
  return outcome_to_json(outcome);
}

json SessionService::break_reply(const std::string& session_id, const std::string& token, const json& body) {
  auto entry = authorize(session_id, token);
  const auto& reply = member(body, "reply");
  std::lock_guard write(entry->write_mutex);
  const auto step = guarded([&] {
    const bool yes = reply.is_boolean() ? reply.get<bool>()
                                        : session::parse_reply(reply.is_string() ? reply.get<std::string>() : "");
    return entry->live->break_reply(yes);
  });
  entry->publish();
  return break_step_to_json(step, entry->live->state().phase);
}

json SessionService::advance(const std::string& session_id, const std::string& token) {
  auto entry = authorize(session_id, token);
  std::lock_guard write(entry->write_mutex);
  guarded([&] { entry->live->advance(); });
  entry->publish();
  return entry->snapshot;
}

std::string SessionService::metrics_csv(const std::string& session_id) const {
  auto entry = find(session_id);
  std::lock_guard write(entry->write_mutex);
  return guarded([&] {
    const auto m = session::session_metrics(entry->live->context(), entry->live->state());
    return session::metrics_to_csv(std::span(&m, 1));
  });
}

}  // namespace crm::service
