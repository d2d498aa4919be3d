#include <cstdio>
#include <map>
#include <sstream>

#include "crm/session/session.hpp"

namespace crm::session {

SessionMetrics session_metrics(const SessionContext& ctx, const SessionState& state) {
  if (state.phase != Phase::done || state.data_answered != ctx.data_trials()) {
    throw SessionError(SessionErrorKind::incomplete_session, "data collection has not finished");
  }
  SessionMetrics m;
  m.participant_id = ctx.config.participant_id;
  m.interface = ctx.config.interface;

  std::map<int, CellScore> cells;
  for (const auto& t : ctx.manifest.experiment) {
    auto& c = cells[t.cell];
    c.cell = t.cell;
    c.tmr = t.tmr;
    c.voice = t.voice;
  }
  std::vector<const TrialOutcome*> data;
  for (const auto& o : state.outcomes) {
    if (o.phase != Phase::data_collection) continue;
    data.push_back(&o);
    auto& c = cells.at(ctx.trial(o.phase, o.index).cell);
    ++c.trials;
    c.correct += o.correct;
  }
  for (auto& [id, c] : cells) {
    c.percent_correct = c.trials ? 100.0 * c.correct / c.trials : 0.0;
    m.cells.push_back(c);
  }
  m.responses = static_cast<int>(data.size());
  m.correct = state.data_correct;
  m.duration_min = (data.back()->response_s - data.front()->onset_s) / 60.0;
  if (data.size() > 1) {
    m.mean_inter_response_s =
        (data.back()->response_s - data.front()->response_s) / static_cast<double>(data.size() - 1);
  }
  return m;
}

SessionMetrics session_metrics(const LoadedLog& log) {
  return session_metrics(log.context, replay(log.context, log.events));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string num(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string metrics_to_csv(std::span<const SessionMetrics> sessions) {
  std::ostringstream out;
  out << "participant,interface,tmr,delta_f0,delta_vtl,percent_correct,duration_min\n";
  for (const auto& m : sessions) {
    for (const auto& c : m.cells) {
      if (c.tmr.is_baseline()) continue;
      out << csv_field(m.participant_id) << ',' << to_string(m.interface) << ',' << num(c.tmr.value_db(), "%g")
          << ',' << num(c.voice.delta_f0_st, "%g") << ',' << num(c.voice.delta_vtl_st, "%g") << ','
          << num(c.percent_correct, "%.6f") << ',' << num(m.duration_min, "%.6f") << '\n';
    }
  }
  return out.str();
}

}  // namespace crm::session
