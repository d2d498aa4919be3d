#include <algorithm>

#include "crm/session/types.hpp"

namespace crm::session {
namespace {

[[noreturn]] void corrupt(const std::string& what) { throw SessionError(SessionErrorKind::corrupt_log, what); }

void require(bool ok, const char* what) {
  if (!ok) corrupt(what);
}

bool legal_transition(const SessionContext& ctx, const SessionState& s, Phase from, Phase to) {
  if (from != s.phase) return false;
  switch (to) {
    case Phase::training:
      return from == Phase::intro;
    case Phase::data_collection:
      return (from == Phase::training && s.awaiting_confirmation) ||
             (from == Phase::break_time && !s.break_stage);
    case Phase::break_time:
      return from == Phase::data_collection && !s.awaiting_response;
    case Phase::done:
      return from == Phase::data_collection && s.data_answered == ctx.data_trials();
    case Phase::intro:
      return false;
  }
  return false;
}

struct Reducer {
  const SessionContext& ctx;
  SessionState& s;
  double t;

  void operator()(const events::AgentIntroduction&) { introduce(); }
  void operator()(const events::StartScreen&) { introduce(); }

  void introduce() {
    require(!s.introduced && s.phase == Phase::intro, "introduction out of place");
    s.introduced = true;
  }

  void operator()(const events::PhaseChanged& e) {
    require(s.introduced, "phase change before introduction");
    require(legal_transition(ctx, s, e.from, e.to), "illegal phase transition");
    if (e.from == Phase::training) s.awaiting_confirmation = false;
    s.phase = e.to;
  }

  void operator()(const events::TrialPresented& e) {
    require(e.phase == s.phase, "trial presented outside its phase");
    require(!s.awaiting_response, "trial presented while another awaits a response");
    if (e.phase == Phase::training) {
      require(!s.awaiting_confirmation, "training trial after training completed");
      require(e.index == s.training_presented + 1 && e.index <= ctx.training_trials(), "training index");
      s.training_presented = e.index;
    } else {
      require(e.phase == Phase::data_collection, "trial presented outside its phase");
      require(e.index == s.data_presented + 1 && e.index <= ctx.data_trials(), "data trial index");
      s.data_presented = e.index;
    }
    s.awaiting_response = true;
    s.pending_onset_s = t;
  }

  void operator()(const events::ResponseLogged& e) {
    require(s.awaiting_response && e.phase == s.phase, "response without a pending trial");
    const bool training = e.phase == Phase::training;
    require(e.index == (training ? s.training_presented : s.data_presented), "response index");
    require(stimulus::is_valid_number(e.response.number), "illegal response number");
    const auto& truth = ctx.trial(e.phase, e.index).target;
    const bool correct = truth == e.response;
    require(correct == e.correct, "logged score disagrees with the trial plan");
    s.outcomes.push_back(TrialOutcome{e.phase, e.index, truth, e.response, correct, s.pending_onset_s, t,
                                      e.request_id});
    s.awaiting_response = false;
    if (training) {
      ++s.training_answered;
      s.training_correct += correct;
    } else {
      ++s.data_answered;
      s.data_correct += correct;
    }
  }

  void operator()(const events::Feedback&) {
    require(!s.outcomes.empty() && !s.awaiting_response, "feedback without a response");
  }

  void operator()(const events::TrainingComplete&) {
    require(s.phase == Phase::training && s.training_answered == ctx.training_trials(),
            "training completed early");
    s.awaiting_confirmation = true;
  }

  void operator()(const events::BreakOffered& e) {
    require(s.phase == Phase::data_collection && e.after_trial == s.data_answered, "break offered out of place");
    ++s.breaks_taken;
  }

  void operator()(const events::BreakPrompt& e) {
    require(s.phase == Phase::break_time && !s.break_stage, "break prompt out of place");
    s.break_stage = e.stage;
  }

  void operator()(const events::BreakReply& e) {
    require(s.phase == Phase::break_time && s.break_stage == e.stage, "break reply without a prompt");
    s.break_stage.reset();
  }

  void operator()(const events::BreakWait&) {
    require(s.phase == Phase::break_time, "break wait outside a break");
    ++s.break_waits;
  }

  void operator()(const events::StretchRoutine&) {
    require(s.phase == Phase::break_time, "stretch outside a break");
  }

  void operator()(const events::BreakEnded&) {
    require(s.phase == Phase::break_time && !s.break_stage, "break ended with a question open");
  }
};

}  // namespace

SessionState apply(const SessionContext& context, SessionState state, const Event& event) {
  if (event.seq != state.next_seq) {
    corrupt("event sequence " + std::to_string(event.seq) + ", expected " + std::to_string(state.next_seq));
  }
  if (event.time_s < state.last_time_s) corrupt("event time runs backwards");
  std::visit(Reducer{context, state, event.time_s}, event.payload);
  ++state.next_seq;
  state.last_time_s = event.time_s;
  return state;
}

SessionState replay(const SessionContext& context, const std::vector<Event>& events) {
  SessionState state;
  for (const auto& e : events) state = apply(context, std::move(state), e);
  return state;
}

}  // namespace crm::session
