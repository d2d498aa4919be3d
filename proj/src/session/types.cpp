#include <algorithm>
#include <array>

#include "crm/session/types.hpp"

namespace crm::session {
namespace {

template <typename E, std::size_t N>
std::optional<E> parse_name(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Phase, std::string_view>, 5> kPhases{{
    {Phase::intro, "intro"},
    {Phase::training, "training"},
    {Phase::data_collection, "data_collection"},
    {Phase::break_time, "break"},
    {Phase::done, "done"},
}};
constexpr std::array<std::pair<InterfaceKind, std::string_view>, 2> kInterfaces{{
    {InterfaceKind::plain, "plain"},
    {InterfaceKind::embodied, "embodied"},
}};
constexpr std::array<std::pair<FeedbackKind, std::string_view>, 4> kFeedback{{
    {FeedbackKind::none, "none"},
    {FeedbackKind::nod, "nod"},
    {FeedbackKind::shake, "shake"},
    {FeedbackKind::highlight, "highlight"},
}};
constexpr std::array<std::pair<BreakStage, std::string_view>, 4> kStages{{
    {BreakStage::take_break, "take_break"},
    {BreakStage::stretch, "stretch"},
    {BreakStage::ready, "ready"},
    {BreakStage::pause, "pause"},
}};
constexpr std::array<std::pair<SessionErrorKind, std::string_view>, 10> kErrors{{
    {SessionErrorKind::invalid_config, "invalid_config"},
    {SessionErrorKind::missing_manifest, "missing_manifest"},
    {SessionErrorKind::duplicate_session, "duplicate_session"},
    {SessionErrorKind::wrong_phase, "wrong_phase"},
    {SessionErrorKind::duplicate_submission, "duplicate_submission"},
    {SessionErrorKind::illegal_keyword, "illegal_keyword"},
    {SessionErrorKind::invalid_reply, "invalid_reply"},
    {SessionErrorKind::incomplete_session, "incomplete_session"},
    {SessionErrorKind::corrupt_log, "corrupt_log"},
    {SessionErrorKind::io, "io"},
}};

}  // namespace

std::string_view to_string(SessionErrorKind k) { return name_of(k, kErrors); }
std::string_view to_string(InterfaceKind k) { return name_of(k, kInterfaces); }
std::string_view to_string(Phase p) { return name_of(p, kPhases); }
std::string_view to_string(FeedbackKind k) { return name_of(k, kFeedback); }
std::string_view to_string(BreakStage s) { return name_of(s, kStages); }
std::optional<InterfaceKind> parse_interface(std::string_view s) { return parse_name(s, kInterfaces); }
std::optional<Phase> parse_phase(std::string_view s) { return parse_name(s, kPhases); }
std::optional<FeedbackKind> parse_feedback(std::string_view s) { return parse_name(s, kFeedback); }
std::optional<BreakStage> parse_break_stage(std::string_view s) { return parse_name(s, kStages); }

bool parse_reply(std::string_view reply) {
  if (reply == "yes") return true;
  if (reply == "no") return false;
  throw SessionError(SessionErrorKind::invalid_reply, "break reply must be 'yes' or 'no'");
}

void validate_config(const SessionConfig& c, int data_trials) {
  auto fail = [](const std::string& what) { throw SessionError(SessionErrorKind::invalid_config, what); };
  if (c.session_id.empty()) fail("session id is empty");
  if (c.participant_id.empty()) fail("participant id is empty");
  for (std::size_t i = 0; i < c.break_after.size(); ++i) {
    if (c.break_after[i] < 1 || c.break_after[i] > data_trials) {
      fail("break index " + std::to_string(c.break_after[i]) + " outside 1.." + std::to_string(data_trials));
    }
    if (i > 0 && c.break_after[i] <= c.break_after[i - 1]) fail("break indices must be strictly increasing");
  }
  if (!(c.latencies.nod_s >= 0.0) || !(c.latencies.shake_s >= 0.0) || !(c.highlight_s >= 0.0) ||
      !(c.break_wait_s >= 0.0)) {
    fail("durations must be non-negative");
  }
}

const stimulus::TrialSpec& SessionContext::trial(Phase phase, int index) const {
  const auto& list = phase == Phase::training ? manifest.training : manifest.experiment;
  if (index < 1 || index > static_cast<int>(list.size())) {
    throw SessionError(SessionErrorKind::corrupt_log, "trial index " + std::to_string(index) + " out of range");
  }
  return list[static_cast<std::size_t>(index - 1)];
}

std::string_view event_type(const EventPayload& payload) {
  return std::visit(
      [](const auto& e) -> std::string_view {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, events::AgentIntroduction>) return "agent_introduction";
        if constexpr (std::is_same_v<T, events::StartScreen>) return "start_screen";
        if constexpr (std::is_same_v<T, events::PhaseChanged>) return "phase_changed";
        if constexpr (std::is_same_v<T, events::TrialPresented>) return "trial_presented";
        if constexpr (std::is_same_v<T, events::ResponseLogged>) return "response";
        if constexpr (std::is_same_v<T, events::Feedback>) return "feedback";
        if constexpr (std::is_same_v<T, events::TrainingComplete>) return "training_complete";
        if constexpr (std::is_same_v<T, events::BreakOffered>) return "break_offered";
        if constexpr (std::is_same_v<T, events::BreakPrompt>) return "break_prompt";
        if constexpr (std::is_same_v<T, events::BreakReply>) return "break_reply";
        if constexpr (std::is_same_v<T, events::BreakWait>) return "break_wait";
        if constexpr (std::is_same_v<T, events::StretchRoutine>) return "stretch_routine";
        if constexpr (std::is_same_v<T, events::BreakEnded>) return "break_ended";
      },
      payload);
}

const TrialOutcome* SessionState::find_request(std::string_view request_id) const {
  if (request_id.empty()) return nullptr;
  for (const auto& o : outcomes) {
    if (o.request_id == request_id) return &o;
  }
  return nullptr;
}

}  // namespace crm::session
