#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "crm/session/log.hpp"
#include "crm/session/types.hpp"

namespace crm::session {

class Clock {
 public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual double now() const = 0;
  // Lets simulated time pass; a wall clock ignores it.
  virtual void advance(double seconds) = 0;
};

class SimulatedClock : public Clock {
 public:
  explicit SimulatedClock(double start_s = 0.0) : t_(start_s) {}
  [[nodiscard]] double now() const override { return t_; }
  void advance(double seconds) override { t_ += seconds; }

 private:
  double t_;
};

// Seconds since the Unix epoch.
class WallClock : public Clock {
 public:
  [[nodiscard]] double now() const override;
  void advance(double) override {}
};

// The embodied agent's repertoire. Each call returns how long the action
// keeps the agent busy.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual double speak(const std::string& text) = 0;
  virtual double nod() = 0;
  virtual double shake() = 0;
  virtual double eye_color(const std::string& color) = 0;
  virtual double stretch() = 0;
};

struct AgentLatencies {
  double nod_s = 2.5;
  double shake_s = 3.2;
  double speak_s = 2.0;
  double stretch_s = 30.0;
};

class SimulatedAgent : public Agent {
 public:
  explicit SimulatedAgent(AgentLatencies latencies = {}) : latencies_(latencies) {}
  double speak(const std::string& text) override;
  double nod() override;
  double shake() override;
  double eye_color(const std::string& color) override;
  double stretch() override;

  std::vector<std::string> actions;

 private:
  AgentLatencies latencies_;
};

class LoggingAgent : public Agent {
 public:
  explicit LoggingAgent(std::ostream& out) : out_(out) {}
  double speak(const std::string& text) override;
  double nod() override;
  double shake() override;
  double eye_color(const std::string& color) override;
  double stretch() override;

 private:
  std::ostream& out_;
};

struct TrialDescriptor {
  Phase phase = Phase::training;
  int index = 0;
  int total = 0;
  int answered = 0;
  const stimulus::TrialSpec* spec = nullptr;
};

enum class Transition { awaiting_confirmation, break_offer, done };

using TrialStep = std::variant<TrialDescriptor, Transition>;

enum class NextStep { next_trial, awaiting_confirmation, break_offer, done };
[[nodiscard]] std::string_view to_string(NextStep n);
[[nodiscard]] std::string_view to_string(Transition t);

struct FeedbackDirective {
  FeedbackKind kind = FeedbackKind::none;
  double duration_s = 0.0;
  std::optional<Keywords> highlight;
};

struct ResponseOutcome {
  Phase phase = Phase::training;
  int index = 0;
  bool correct = false;
  FeedbackDirective feedback;
  NextStep next = NextStep::next_trial;
  bool replayed = false;  // an earlier submission with the same request id
};

struct BreakStep {
  std::optional<BreakStage> prompt;  // empty once the break is over
  double waited_s = 0.0;
  bool stretched = false;
};

// One live session: validates commands, emits events to the sink and folds
// them into the state with the same reducer replay uses.
class Session {
 public:
  Session(SessionContext context, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent = nullptr);

  // Continues a session from a loaded log (no intro re-emitted).
  static Session resume(LoadedLog log, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent = nullptr);

  [[nodiscard]] const SessionContext& context() const { return context_; }
  [[nodiscard]] const SessionState& state() const { return state_; }
  [[nodiscard]] EventSink& sink() { return *sink_; }

  // intro -> training, and training -> data collection once confirmed.
  void advance();
  // Presents the next trial, or re-serves the one awaiting a response.
  TrialStep next_trial();
  [[nodiscard]] std::optional<TrialDescriptor> current_trial() const;
  ResponseOutcome submit_response(const Keywords& response, const std::string& request_id = {});
  BreakStep break_reply(bool yes);

 private:
  Session(SessionContext context, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent, bool);
  void emit(EventPayload payload);
  void occupy(double seconds);
  bool embodied() const { return context_.config.interface == InterfaceKind::embodied; }
  ResponseOutcome outcome_for(const TrialOutcome& o) const;
  NextStep next_step_after(Phase phase, int index) const;
  void end_break();

  SessionContext context_;
  std::unique_ptr<EventSink> sink_;
  Clock* clock_;
  Agent* agent_;
  SessionState state_;
};

// ---------------------------------------------------------------------------
// Metrics.

struct CellScore {
  int cell = 0;
  stimulus::TmrCondition tmr = stimulus::TmrCondition::baseline();
  voice::VoiceCondition voice;
  int trials = 0;
  int correct = 0;
  double percent_correct = 0.0;

  friend bool operator==(const CellScore&, const CellScore&) = default;
};

struct SessionMetrics {
  std::string participant_id;
  InterfaceKind interface = InterfaceKind::plain;
  // First data-collection stimulus onset to last data-collection response.
  double duration_min = 0.0;
  double mean_inter_response_s = 0.0;
  int responses = 0;
  int correct = 0;
  std::vector<CellScore> cells;  // includes the baseline cell

  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;
};

// Throws SessionError(incomplete_session) unless data collection finished.
[[nodiscard]] SessionMetrics session_metrics(const SessionContext& context, const SessionState& state);
[[nodiscard]] SessionMetrics session_metrics(const LoadedLog& log);

// participant,interface,tmr,delta_f0,delta_vtl,percent_correct,duration_min;
// the baseline cell is left out.
[[nodiscard]] std::string metrics_to_csv(std::span<const SessionMetrics> sessions);

// ---------------------------------------------------------------------------
// Simulated participant.

struct ParticipantModel {
  double p_correct = 0.9;
  double min_response_s = 1.0;
  double max_response_s = 3.0;
  double p_yes = 0.5;  // for every break question
  std::uint64_t seed = 1;
};

// Runs a complete session against a simulated clock (and simulated agent for
// the embodied interface). With an empty `dir` events stay in memory.
struct SimulationResult {
  SessionState state;
  SessionMetrics metrics;
  std::vector<Event> events;
};

[[nodiscard]] SimulationResult simulate_session(const SessionContext& context, const ParticipantModel& model,
                                                const std::filesystem::path& dir = {});

}  // namespace crm::session
