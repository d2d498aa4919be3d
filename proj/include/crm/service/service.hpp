#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "crm/session/session.hpp"

namespace crm::service {

using nlohmann::json;

inline constexpr int kApiVersion = 1;

// A failed request: HTTP status, stable machine-readable code, message and
// optional extra fields merged into the error body.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message, json details = json::object())
      : std::runtime_error(message), status_(status), code_(std::move(code)), details_(std::move(details)) {}
  [[nodiscard]] int status() const { return status_; }
  [[nodiscard]] const std::string& code() const { return code_; }
  [[nodiscard]] const json& details() const { return details_; }

 private:
  int status_;
  std::string code_;
  json details_;
};

[[nodiscard]] int http_status(session::SessionErrorKind kind);
[[nodiscard]] json error_body(const ServiceError& error);

enum class AgentMode { none, simulated, logging };
[[nodiscard]] std::string_view to_string(AgentMode m);
[[nodiscard]] std::optional<AgentMode> parse_agent_mode(std::string_view s);

struct ServiceConfig {
  // One subdirectory per installed language, each holding a sentence corpus.
  std::filesystem::path corpus_root;
  // One subdirectory per session: handle.json, manifest.jsonl, stimuli/,
  // events.jsonl, summary.json.
  std::filesystem::path data_dir;
  AgentMode agent_mode = AgentMode::none;
  std::vector<int> break_after{31, 61};
  session::FeedbackLatencies latencies;
  unsigned pregenerate_threads = 0;
  double presentation_level_dbfs = -26.0;
};

struct CreateSessionRequest {
  std::string participant_id;
  std::string language = "en";
  session::InterfaceKind interface = session::InterfaceKind::plain;
  // intro, or training to skip past the welcome screen.
  session::Phase start_phase = session::Phase::intro;
  std::optional<std::uint64_t> seed;
};

[[nodiscard]] CreateSessionRequest create_request_from_json(const json& body);

struct SessionHandle {
  std::string session_id;
  std::string token;
  std::string participant_id;
  std::string language;
  session::InterfaceKind interface = session::InterfaceKind::plain;
  std::string created_at;  // ISO 8601, UTC
};

[[nodiscard]] json handle_to_json(const SessionHandle& handle, bool with_token);
[[nodiscard]] SessionHandle handle_from_json(const json& j);

// Everything the HTTP layer needs, independent of the transport. Calls for
// different sessions run concurrently; mutations of one session are
// serialized; state reads return the last published snapshot.
class SessionService {
 public:
  // Loads every corpus under corpus_root and resumes the sessions found in
  // data_dir.
  explicit SessionService(ServiceConfig config);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  [[nodiscard]] std::vector<std::string> languages() const;
  [[nodiscard]] const ServiceConfig& config() const { return config_; }

  // Pregenerates the session's stimuli before returning.
  json create_session(const CreateSessionRequest& request);
  [[nodiscard]] json state(const std::string& session_id) const;
  json current_trial(const std::string& session_id, const std::string& token);
  json post_response(const std::string& session_id, const std::string& token, const json& body);
  json break_reply(const std::string& session_id, const std::string& token, const json& body);
  json advance(const std::string& session_id, const std::string& token);
  [[nodiscard]] std::string metrics_csv(const std::string& session_id) const;
  // WAV bytes for a one-time stimulus token; the token is spent.
  std::string take_stimulus(const std::string& stimulus_token);

  [[nodiscard]] std::size_t session_count() const;

 private:
  struct Language;
  struct Entry;

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  std::shared_ptr<Entry> authorize(const std::string& session_id, const std::string& token) const;
  std::shared_ptr<Entry> open_entry(SessionHandle handle, const std::filesystem::path& dir,
                                    std::optional<session::SessionContext> fresh);
  void resume_sessions();
  std::string mint_stimulus_token(const std::filesystem::path& file);

  ServiceConfig config_;
  std::map<std::string, std::unique_ptr<Language>> languages_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex stimuli_mutex_;
  std::map<std::string, std::filesystem::path> stimuli_;
};

// JSON shapes shared with the UI.
[[nodiscard]] json state_to_json(const SessionHandle& handle, const session::SessionContext& context,
                                 const session::SessionState& state);
[[nodiscard]] json outcome_to_json(const session::ResponseOutcome& outcome);
[[nodiscard]] json break_step_to_json(const session::BreakStep& step, session::Phase phase);

[[nodiscard]] std::string random_token();
[[nodiscard]] std::string utc_timestamp();

}  // namespace crm::service
