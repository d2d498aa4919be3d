#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crm/stimulus/corpus.hpp"

namespace crm::session {

using stimulus::Keywords;

enum class SessionErrorKind {
  invalid_config,
  missing_manifest,
  duplicate_session,
  wrong_phase,
  duplicate_submission,
  illegal_keyword,
  invalid_reply,
  incomplete_session,
  corrupt_log,
  io,
};

class SessionError : public std::runtime_error {
 public:
  SessionError(SessionErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] SessionErrorKind kind() const { return kind_; }

 private:
  SessionErrorKind kind_;
};

[[nodiscard]] std::string_view to_string(SessionErrorKind k);

enum class InterfaceKind { plain, embodied };
enum class Phase { intro, training, data_collection, break_time, done };

[[nodiscard]] std::string_view to_string(InterfaceKind k);
[[nodiscard]] std::string_view to_string(Phase p);
[[nodiscard]] std::optional<InterfaceKind> parse_interface(std::string_view s);
[[nodiscard]] std::optional<Phase> parse_phase(std::string_view s);

struct FeedbackLatencies {
  double nod_s = 2.5;
  double shake_s = 3.2;

  friend bool operator==(const FeedbackLatencies&, const FeedbackLatencies&) = default;
};

struct SessionConfig {
  std::string session_id;
  std::string participant_id;
  InterfaceKind interface = InterfaceKind::plain;
  std::string language = "en";
  std::uint64_t seed = 0;
  // A break is offered after each of these data-collection trials.
  std::vector<int> break_after{31, 61};
  FeedbackLatencies latencies;
  double highlight_s = 0.75;
  double break_wait_s = 10.0;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

// Throws SessionError(invalid_config).
void validate_config(const SessionConfig& config, int data_trials);

// Everything fixed at session start: the config and the trial plan.
struct SessionContext {
  SessionConfig config;
  stimulus::Manifest manifest;

  [[nodiscard]] int training_trials() const { return static_cast<int>(manifest.training.size()); }
  [[nodiscard]] int data_trials() const { return static_cast<int>(manifest.experiment.size()); }
  [[nodiscard]] const stimulus::TrialSpec& trial(Phase phase, int index) const;
};

// ---------------------------------------------------------------------------
// Event log records.

enum class FeedbackKind { none, nod, shake, highlight };
enum class BreakStage { take_break, stretch, ready, pause };

[[nodiscard]] std::string_view to_string(FeedbackKind k);
[[nodiscard]] std::string_view to_string(BreakStage s);
[[nodiscard]] std::optional<FeedbackKind> parse_feedback(std::string_view s);
[[nodiscard]] std::optional<BreakStage> parse_break_stage(std::string_view s);

// "yes" or "no"; anything else is SessionError(invalid_reply).
[[nodiscard]] bool parse_reply(std::string_view reply);

namespace events {

struct AgentIntroduction {};
struct StartScreen {};
struct PhaseChanged {
  Phase from = Phase::intro;
  Phase to = Phase::intro;
};
struct TrialPresented {
  Phase phase = Phase::training;
  int index = 0;
};
struct ResponseLogged {
  Phase phase = Phase::training;
  int index = 0;
  Keywords response;
  bool correct = false;
  std::string request_id;
};
struct Feedback {
  FeedbackKind kind = FeedbackKind::none;
  double duration_s = 0.0;
  std::optional<Keywords> highlight;
};
struct TrainingComplete {};
struct BreakOffered {
  int after_trial = 0;
};
struct BreakPrompt {
  BreakStage stage = BreakStage::take_break;
};
struct BreakReply {
  BreakStage stage = BreakStage::take_break;
  bool yes = false;
};
struct BreakWait {
  double seconds = 0.0;
};
struct StretchRoutine {};
struct BreakEnded {};

}  // namespace events

using EventPayload =
    std::variant<events::AgentIntroduction, events::StartScreen, events::PhaseChanged,
                 events::TrialPresented, events::ResponseLogged, events::Feedback,
                 events::TrainingComplete, events::BreakOffered, events::BreakPrompt,
                 events::BreakReply, events::BreakWait, events::StretchRoutine, events::BreakEnded>;

struct Event {
  std::uint64_t seq = 0;
  double time_s = 0.0;
  EventPayload payload;
};

[[nodiscard]] std::string_view event_type(const EventPayload& payload);

// ---------------------------------------------------------------------------
// Reconstructible state.

struct TrialOutcome {
  Phase phase = Phase::training;
  int index = 0;
  Keywords truth;
  Keywords response;
  bool correct = false;
  double onset_s = 0.0;
  double response_s = 0.0;
  std::string request_id;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct SessionState {
  Phase phase = Phase::intro;
  bool introduced = false;
  int training_presented = 0;
  int training_answered = 0;
  int training_correct = 0;
  int data_presented = 0;
  int data_answered = 0;
  int data_correct = 0;
  bool awaiting_response = false;
  double pending_onset_s = 0.0;
  bool awaiting_confirmation = false;
  std::optional<BreakStage> break_stage;
  int breaks_taken = 0;
  int break_waits = 0;
  std::vector<TrialOutcome> outcomes;
  std::uint64_t next_seq = 0;
  double last_time_s = 0.0;

  [[nodiscard]] const TrialOutcome* find_request(std::string_view request_id) const;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Pure reducer. Throws SessionError(corrupt_log) on an event the state cannot
// accept (out-of-order sequence, time running backwards, illegal transition).
[[nodiscard]] SessionState apply(const SessionContext& context, SessionState state, const Event& event);
[[nodiscard]] SessionState replay(const SessionContext& context, const std::vector<Event>& events);

}  // namespace crm::session
