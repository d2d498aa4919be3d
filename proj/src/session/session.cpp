#include <algorithm>
#include <chrono>
#include <ostream>

#include "crm/session/session.hpp"

namespace crm::session {

double WallClock::now() const {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

double SimulatedAgent::speak(const std::string& text) {
  actions.push_back("speak:" + text);
  return latencies_.speak_s;
}
double SimulatedAgent::nod() {
  actions.emplace_back("nod");
  return latencies_.nod_s;
}
double SimulatedAgent::shake() {
  actions.emplace_back("shake");
  return latencies_.shake_s;
}
double SimulatedAgent::eye_color(const std::string& color) {
  actions.push_back("eyes:" + color);
  return 0.0;
}
double SimulatedAgent::stretch() {
  actions.emplace_back("stretch");
  return latencies_.stretch_s;
}

double LoggingAgent::speak(const std::string& text) {
  out_ << "[agent] speak: " << text << '\n';
  return 0.0;
}
double LoggingAgent::nod() {
  out_ << "[agent] nod\n";
  return 0.0;
}
double LoggingAgent::shake() {
  out_ << "[agent] shake\n";
  return 0.0;
}
double LoggingAgent::eye_color(const std::string& color) {
  out_ << "[agent] eyes " << color << '\n';
  return 0.0;
}
double LoggingAgent::stretch() {
  out_ << "[agent] stretch routine\n";
  return 0.0;
}

std::string_view to_string(NextStep n) {
  switch (n) {
    case NextStep::next_trial: return "next_trial";
    case NextStep::awaiting_confirmation: return "awaiting_confirmation";
    case NextStep::break_offer: return "break_offer";
    case NextStep::done: return "done";
  }
  return "?";
}

std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::awaiting_confirmation: return "awaiting_confirmation";
    case Transition::break_offer: return "break_offer";
    case Transition::done: return "done";
  }
  return "?";
}

namespace {

[[noreturn]] void wrong_phase(const std::string& what, Phase phase) {
  throw SessionError(SessionErrorKind::wrong_phase, what + " not allowed in phase " + std::string(to_string(phase)));
}

void check_context(const SessionContext& ctx) {
  if (ctx.manifest.training.empty() || ctx.manifest.experiment.empty()) {
    throw SessionError(SessionErrorKind::missing_manifest, "session needs a trial manifest");
  }
  validate_config(ctx.config, ctx.data_trials());
}

}  // namespace

Session::Session(SessionContext context, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent, bool)
    : context_(std::move(context)), sink_(std::move(sink)), clock_(&clock), agent_(agent) {
  check_context(context_);
}

Session::Session(SessionContext context, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent)
    : Session(std::move(context), std::move(sink), clock, agent, true) {
  if (embodied()) {
    emit(events::AgentIntroduction{});
    occupy(agent_ ? agent_->speak("introduction") : 0.0);
  } else {
    emit(events::StartScreen{});
  }
  sink_->phase_boundary(context_, state_);
}

Session Session::resume(LoadedLog log, std::unique_ptr<EventSink> sink, Clock& clock, Agent* agent) {
  Session s(std::move(log.context), std::move(sink), clock, agent, true);
  s.state_ = replay(s.context_, log.events);
  return s;
}

void Session::emit(EventPayload payload) {
  Event e{state_.next_seq, std::max(clock_->now(), state_.last_time_s), std::move(payload)};
  SessionState next = apply(context_, state_, e);
  sink_->append(e);
  state_ = std::move(next);
  if (std::holds_alternative<events::PhaseChanged>(e.payload)) sink_->phase_boundary(context_, state_);
}

void Session::occupy(double seconds) {
  if (seconds > 0.0) clock_->advance(seconds);
}

void Session::advance() {
  if (state_.phase == Phase::intro) {
    emit(events::PhaseChanged{Phase::intro, Phase::training});
    return;
  }
  if (state_.phase == Phase::training && state_.awaiting_confirmation) {
    emit(events::PhaseChanged{Phase::training, Phase::data_collection});
    return;
  }
  wrong_phase("advance", state_.phase);
}

std::optional<TrialDescriptor> Session::current_trial() const {
  if (!state_.awaiting_response) return std::nullopt;
  const bool training = state_.phase == Phase::training;
  TrialDescriptor d;
  d.phase = state_.phase;
  d.index = training ? state_.training_presented : state_.data_presented;
  d.total = training ? context_.training_trials() : context_.data_trials();
  d.answered = training ? state_.training_answered : state_.data_answered;
  d.spec = &context_.trial(d.phase, d.index);
  return d;
}

TrialStep Session::next_trial() {
  switch (state_.phase) {
    case Phase::intro:
      wrong_phase("next_trial", state_.phase);
    case Phase::break_time:
      return Transition::break_offer;
    case Phase::done:
      return Transition::done;
    case Phase::training:
      if (state_.awaiting_confirmation) return Transition::awaiting_confirmation;
      break;
    case Phase::data_collection:
      break;
  }
  if (auto current = current_trial()) return *current;
  const bool training = state_.phase == Phase::training;
  const int index = (training ? state_.training_presented : state_.data_presented) + 1;
  if (embodied() && agent_) agent_->eye_color("green");
  emit(events::TrialPresented{state_.phase, index});
  return *current_trial();
}

NextStep Session::next_step_after(Phase phase, int index) const {
  if (phase == Phase::training) {
    return index == context_.training_trials() ? NextStep::awaiting_confirmation : NextStep::next_trial;
  }
  if (index == context_.data_trials()) return NextStep::done;
  const auto& b = context_.config.break_after;
  return std::find(b.begin(), b.end(), index) != b.end() ? NextStep::break_offer : NextStep::next_trial;
}

ResponseOutcome Session::outcome_for(const TrialOutcome& o) const {
  ResponseOutcome r;
  r.phase = o.phase;
  r.index = o.index;
  r.correct = o.correct;
  if (embodied()) {
    r.feedback.kind = o.correct ? FeedbackKind::nod : FeedbackKind::shake;
    r.feedback.duration_s = o.correct ? context_.config.latencies.nod_s : context_.config.latencies.shake_s;
  } else if (!o.correct) {
    r.feedback.kind = FeedbackKind::highlight;
    r.feedback.duration_s = context_.config.highlight_s;
    r.feedback.highlight = o.truth;
  }
  r.next = next_step_after(o.phase, o.index);
  return r;
}

ResponseOutcome Session::submit_response(const Keywords& response, const std::string& request_id) {
  if (const auto* earlier = state_.find_request(request_id)) {
    auto r = outcome_for(*earlier);
    r.replayed = true;
    return r;
  }
  if (state_.phase != Phase::training && state_.phase != Phase::data_collection) {
    wrong_phase("submit_response", state_.phase);
  }
  if (!state_.awaiting_response) {
    throw SessionError(SessionErrorKind::duplicate_submission, "no trial is awaiting a response");
  }
  if (!stimulus::is_valid_number(response.number)) {
    throw SessionError(SessionErrorKind::illegal_keyword, "illegal number " + std::to_string(response.number));
  }
  const auto trial = *current_trial();
  const bool correct = trial.spec->target == response;
  emit(events::ResponseLogged{trial.phase, trial.index, response, correct, request_id});
  const auto outcome = outcome_for(state_.outcomes.back());

  if (outcome.feedback.kind != FeedbackKind::none) {
    emit(events::Feedback{outcome.feedback.kind, outcome.feedback.duration_s, outcome.feedback.highlight});
    if (embodied() && agent_) {
      if (correct) {
        agent_->nod();
      } else {
        agent_->shake();
      }
    }
    occupy(outcome.feedback.duration_s);
  }

  switch (outcome.next) {
    case NextStep::awaiting_confirmation:
      emit(events::TrainingComplete{});
      if (embodied() && agent_) occupy(agent_->speak("touch my head when you are ready"));
      break;
    case NextStep::done:
      emit(events::PhaseChanged{Phase::data_collection, Phase::done});
      if (embodied() && agent_) occupy(agent_->speak("thank you"));
      break;
    case NextStep::break_offer:
      emit(events::BreakOffered{trial.index});
      emit(events::PhaseChanged{Phase::data_collection, Phase::break_time});
      emit(events::BreakPrompt{embodied() ? BreakStage::take_break : BreakStage::pause});
      if (embodied() && agent_) occupy(agent_->speak("would you like to take a break?"));
      break;
    case NextStep::next_trial:
      break;
  }
  return outcome;
}

void Session::end_break() {
  emit(events::BreakEnded{});
  emit(events::PhaseChanged{Phase::break_time, Phase::data_collection});
}

BreakStep Session::break_reply(bool yes) {
  if (state_.phase != Phase::break_time || !state_.break_stage) wrong_phase("break_reply", state_.phase);
  const BreakStage stage = *state_.break_stage;
  emit(events::BreakReply{stage, yes});
  BreakStep step;
  auto wait = [&] {
    emit(events::BreakWait{context_.config.break_wait_s});
    occupy(context_.config.break_wait_s);
    step.waited_s += context_.config.break_wait_s;
  };
  auto prompt = [&](BreakStage next, const char* line) {
    emit(events::BreakPrompt{next});
    if (agent_) occupy(agent_->speak(line));
    step.prompt = next;
  };
  switch (stage) {
    case BreakStage::pause:
      end_break();
      break;
    case BreakStage::take_break:
      if (yes) {
        prompt(BreakStage::stretch, "would you like to stretch with me?");
      } else {
        end_break();
      }
      break;
    case BreakStage::stretch:
      if (yes) {
        emit(events::StretchRoutine{});
        if (agent_) occupy(agent_->stretch());
        step.stretched = true;
      } else {
        wait();
      }
      prompt(BreakStage::ready, "are you ready to continue?");
      break;
    case BreakStage::ready:
      if (!yes) wait();
      end_break();
      break;
  }
  return step;
}

}  // namespace crm::session
