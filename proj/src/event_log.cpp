#include "latentswipe/event_log.hpp"

#include "latentswipe/errors.hpp"

#include <cstring>
#include <fstream>

namespace latentswipe {

namespace {

using nlohmann::json;

json coords_json(const LatentPoint& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

LatentPoint coords_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool same_bits(const LatentPoint& a, const LatentPoint& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

SessionEvent shown_event(std::string_view id, std::size_t iteration, const ShownPoint& p, std::uint64_t cursor) {
  SessionEvent e;
  e.session_id = id;
  e.iteration = iteration;
  e.event_kind = "shown";
  e.coords = p.coords;
  e.arm = p.arm;
  e.rng_cursor = cursor;
  e.timestamp_ms = p.timestamp_ms;
  return e;
}

}  // namespace

json config_to_json(const SessionConfig& c) {
  return {{"strategy", to_string(c.strategy)},
          {"d", c.d},
          {"d_prime", c.d_prime},
          {"max_comparisons", c.max_comparisons},
          {"seed", c.seed},
          {"acquisition", {{"kind", to_string(c.acquisition.kind)}, {"beta", c.acquisition.beta}}},
          {"box_constant", c.box_constant},
          {"bandit_alpha", c.bandit_alpha},
          {"pivot", to_string(c.pivot)},
          {"restarts", c.restarts},
          {"laplace",
           {{"likelihood_noise", c.laplace.likelihood_noise},
            {"newton_tol", c.laplace.newton_tol},
            {"max_newton_iters", c.laplace.max_newton_iters},
            {"jitter_initial", c.laplace.jitter_initial},
            {"jitter_max", c.laplace.jitter_max},
            {"hyperparameter_refit_every", c.laplace.hyperparameter_refit_every}}}};
}

SessionConfig config_from_json(const json& j) {
  SessionConfig c;
  c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  c.d = j.at("d").get<std::size_t>();
  c.d_prime = j.at("d_prime").get<std::size_t>();
  c.max_comparisons = j.at("max_comparisons").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.acquisition.kind = acquisition_kind_from_string(j.at("acquisition").at("kind").get<std::string>());
  c.acquisition.beta = j.at("acquisition").at("beta").get<double>();
  c.box_constant = j.at("box_constant").get<double>();
  c.bandit_alpha = j.at("bandit_alpha").get<double>();
  c.pivot = pivot_from_string(j.at("pivot").get<std::string>());
  c.restarts = j.at("restarts").get<int>();
  const json& l = j.at("laplace");
  c.laplace.likelihood_noise = l.at("likelihood_noise").get<double>();
  c.laplace.newton_tol = l.at("newton_tol").get<double>();
  c.laplace.max_newton_iters = l.at("max_newton_iters").get<int>();
  c.laplace.jitter_initial = l.at("jitter_initial").get<double>();
  c.laplace.jitter_max = l.at("jitter_max").get<double>();
  c.laplace.hyperparameter_refit_every = l.at("hyperparameter_refit_every").get<int>();
  return c;
}

std::string format_event(const SessionEvent& e) {
  json j = {{"session_id", e.session_id},
            {"iteration", e.iteration},
            {"event_kind", e.event_kind},
            {"coords", e.coords ? coords_json(*e.coords) : json(nullptr)},
            {"arm", e.arm ? json(*e.arm) : json(nullptr)},
            {"current_won", e.current_won ? json(*e.current_won) : json(nullptr)},
            {"decision_time_ms", e.decision_time_ms ? json(*e.decision_time_ms) : json(nullptr)},
            {"rng_cursor", e.rng_cursor},
            {"timestamp_ms", e.timestamp_ms}};
  if (e.config) j["config"] = config_to_json(*e.config);
  return j.dump();
}

SessionEvent parse_event(std::string_view line) {
  try {
    const json j = json::parse(line);
    SessionEvent e;
    e.session_id = j.at("session_id").get<std::string>();
    e.iteration = j.at("iteration").get<std::size_t>();
    e.event_kind = j.at("event_kind").get<std::string>();
    if (!j.at("coords").is_null()) e.coords = coords_from(j.at("coords"));
    if (!j.at("arm").is_null()) e.arm = j.at("arm").get<std::size_t>();
    if (!j.at("current_won").is_null()) e.current_won = j.at("current_won").get<bool>();
    if (!j.at("decision_time_ms").is_null()) e.decision_time_ms = j.at("decision_time_ms").get<double>();
    e.rng_cursor = j.at("rng_cursor").get<std::uint64_t>();
    if (j.contains("timestamp_ms")) e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    if (j.contains("config")) e.config = config_from_json(j.at("config"));
    return e;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("bad event line: ") + ex.what());
  } catch (const Error& ex) {
    throw FormatError(std::string("bad event config: ") + ex.what());
  }
}

std::vector<SessionEvent> start_events(std::string_view session_id, const Session& session) {
  if (session.shown().size() < 2) throw Error("start_events: session has no initial pair");
  SessionEvent start;
  start.session_id = session_id;
  start.event_kind = "start";
  start.config = session.config();
  start.timestamp_ms = session.shown()[0].timestamp_ms;
  const std::size_t d_prime = session.config().d_prime;
  return {start, shown_event(session_id, 0, session.shown()[0], d_prime),
          shown_event(session_id, 0, session.shown()[1], 2 * d_prime)};
}

std::vector<SessionEvent> feedback_events(std::string_view session_id, const Session& session) {
  if (session.history().empty()) throw Error("feedback_events: no feedback recorded");
  const ComparisonRecord& rec = session.history().back();
  SessionEvent fb;
  fb.session_id = session_id;
  fb.iteration = rec.iteration;
  fb.event_kind = "feedback";
  fb.coords = rec.current;
  fb.arm = rec.arm;
  fb.current_won = rec.current_won;
  fb.decision_time_ms = rec.decision_time_ms;
  fb.rng_cursor = session.rng_cursor();
  fb.timestamp_ms = session.shown().back().timestamp_ms;
  std::vector<SessionEvent> out{fb};
  if (session.finished()) {
    SessionEvent fin;
    fin.session_id = session_id;
    fin.iteration = rec.iteration;
    fin.event_kind = "finished";
    fin.coords = session.final_choice();
    fin.rng_cursor = session.rng_cursor();
    fin.timestamp_ms = fb.timestamp_ms;
    out.push_back(std::move(fin));
  } else {
    out.push_back(shown_event(session_id, rec.iteration, session.shown().back(), session.rng_cursor()));
  }
  return out;
}

Session replay_session(std::span<const SessionEvent> events, std::shared_ptr<const SubspaceMap> subspace) {
  if (events.empty() || events.front().event_kind != "start" || !events.front().config)
    throw ReplayMismatch("event log does not begin with a start event");
  Session session(*events.front().config, std::move(subspace));
  std::size_t shown_seen = 0;
  for (std::size_t i = 1; i < events.size(); ++i) {
    const SessionEvent& e = events[i];
    if (e.event_kind == "shown") {
      if (shown_seen >= session.shown().size())
        throw ReplayMismatch("shown event without a preceding feedback at line " + std::to_string(i + 1));
      if (!e.coords || !same_bits(*e.coords, session.shown()[shown_seen].coords))
        throw ReplayMismatch("shown point differs at iteration " + std::to_string(e.iteration));
      if (shown_seen + 1 == session.shown().size() && e.rng_cursor != session.rng_cursor())
        throw ReplayMismatch("rng cursor differs at iteration " + std::to_string(e.iteration));
      ++shown_seen;
    } else if (e.event_kind == "feedback") {
      if (!e.current_won) throw ReplayMismatch("feedback event without current_won");
      if (e.iteration != session.iteration() + 1)
        throw ReplayMismatch("feedback iteration " + std::to_string(e.iteration) + " out of order");
      session.submit_feedback(*e.current_won, e.decision_time_ms);
    } else if (e.event_kind == "finished") {
      if (!session.finished() || !e.coords || !same_bits(*e.coords, session.final_choice()))
        throw ReplayMismatch("finished event does not match replayed session");
    } else {
      throw ReplayMismatch("unknown event kind '" + e.event_kind + "'");
    }
  }
  return session;
}

std::vector<SessionEvent> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event log " + path.string());
  std::vector<SessionEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_event(line));
  }
  return out;
}

void append_event_log(const std::filesystem::path& path, std::span<const SessionEvent> events) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open event log " + path.string());
  for (const auto& e : events) out << format_event(e) << '\n';
  out.flush();
  if (!out) throw Error("failed writing event log " + path.string());
}

}  // namespace latentswipe
