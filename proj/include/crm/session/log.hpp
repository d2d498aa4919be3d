#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "crm/session/types.hpp"

namespace crm::session {

inline constexpr int kEventLogVersion = 1;
inline constexpr const char* kEventLogSchema = "crm.session-log";

[[nodiscard]] nlohmann::json event_to_json(const Event& event);
[[nodiscard]] Event event_from_json(const nlohmann::json& record);

[[nodiscard]] nlohmann::json config_to_json(const SessionConfig& config);
[[nodiscard]] SessionConfig config_from_json(const nlohmann::json& j);

// First line of every log: schema, version, config and the full trial plan.
[[nodiscard]] nlohmann::json log_header(const SessionContext& context);
[[nodiscard]] SessionContext context_from_header(const nlohmann::json& header);

// Where a live session sends its records.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void append(const Event& event) = 0;
  // Called after every phase change.
  virtual void phase_boundary(const SessionContext& context, const SessionState& state) = 0;
};

class MemorySink : public EventSink {
 public:
  void append(const Event& event) override { events.push_back(event); }
  void phase_boundary(const SessionContext&, const SessionState&) override { ++summaries; }

  std::vector<Event> events;
  int summaries = 0;
};

// <dir>/events.jsonl (append-only, one record per line, flushed per event)
// and <dir>/summary.json (rewritten only at phase boundaries).
class FileEventLog : public EventSink {
 public:
  // Fails with duplicate_session if the directory already holds a log.
  static std::unique_ptr<FileEventLog> create(const std::filesystem::path& dir,
                                              const SessionContext& context);
  // Reopens an existing log for further appends.
  static std::unique_ptr<FileEventLog> reopen(const std::filesystem::path& dir);

  void append(const Event& event) override;
  void phase_boundary(const SessionContext& context, const SessionState& state) override;

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] int summary_writes() const { return summary_writes_; }

 private:
  explicit FileEventLog(std::filesystem::path dir);
  std::filesystem::path dir_;
  std::ofstream out_;
  int summary_writes_ = 0;
};

struct LoadedLog {
  SessionContext context;
  std::vector<Event> events;
};

[[nodiscard]] LoadedLog read_event_log(const std::filesystem::path& events_jsonl);
[[nodiscard]] std::filesystem::path events_path(const std::filesystem::path& dir);
[[nodiscard]] std::filesystem::path summary_path(const std::filesystem::path& dir);

[[nodiscard]] nlohmann::json session_summary(const SessionContext& context, const SessionState& state);

}  // namespace crm::session
