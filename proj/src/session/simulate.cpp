#include <algorithm>
#include <random>

#include "crm/random.hpp"
#include "crm/session/session.hpp"

namespace crm::session {

SimulationResult simulate_session(const SessionContext& context, const ParticipantModel& model,
                                  const std::filesystem::path& dir) {
  SimulatedClock clock(0.0);
  SimulatedAgent agent(AgentLatencies{context.config.latencies.nod_s, context.config.latencies.shake_s});
  std::unique_ptr<EventSink> sink;
  MemorySink* memory = nullptr;
  if (dir.empty()) {
    auto m = std::make_unique<MemorySink>();
    memory = m.get();
    sink = std::move(m);
  } else {
    sink = FileEventLog::create(dir, context);
  }
  Agent* agent_ptr = context.config.interface == InterfaceKind::embodied ? &agent : nullptr;
  Session session(context, std::move(sink), clock, agent_ptr);

  Rng rng(derive_seed(model.seed, 0x7061'7274ULL));
  std::uniform_real_distribution<double> rt(model.min_response_s, model.max_response_s);
  std::bernoulli_distribution right(model.p_correct);
  std::bernoulli_distribution yes(model.p_yes);
  const auto pairs = stimulus::all_keyword_pairs();
  std::uniform_int_distribution<std::size_t> other(0, pairs.size() - 2);

  session.advance();
  int requests = 0;
  for (bool running = true; running;) {
    const auto step = session.next_trial();
    if (const auto* trial = std::get_if<TrialDescriptor>(&step)) {
      clock.advance(rt(rng));
      Keywords answer = trial->spec->target;
      if (!right(rng)) {
        // Uniform over the 47 wrong pairs.
        const auto truth = static_cast<std::size_t>(std::find(pairs.begin(), pairs.end(), answer) - pairs.begin());
        std::size_t k = other(rng);
        if (k >= truth) ++k;
        answer = pairs[k];
      }
      session.submit_response(answer, "r" + std::to_string(++requests));
      continue;
    }
    switch (std::get<Transition>(step)) {
      case Transition::awaiting_confirmation:
        clock.advance(1.0);
        session.advance();
        break;
      case Transition::break_offer:
        while (session.state().break_stage) {
          clock.advance(1.0);
          session.break_reply(yes(rng));
        }
        break;
      case Transition::done:
        running = false;
        break;
    }
  }

  SimulationResult result;
  result.state = session.state();
  result.metrics = session_metrics(session.context(), session.state());
  result.events = memory ? memory->events : read_event_log(events_path(dir)).events;
  return result;
}

}  // namespace crm::session
