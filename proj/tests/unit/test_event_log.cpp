#include "latentswipe/errors.hpp"
#include "latentswipe/event_log.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "oracles.hpp"

using namespace latentswipe;

namespace {

std::shared_ptr<const SubspaceMap> make_map() {
  Vector variance(3);
  variance << 4.0, 2.0, 1.0;
  return std::make_shared<const SubspaceMap>(Vector::Zero(6), Matrix::Identity(3, 6), variance);
}

SessionConfig config(Strategy s, std::size_t budget = 10) {
  SessionConfig c;
  c.strategy = s;
  c.d = 6;
  c.d_prime = 3;
  c.seed = 21;
  c.max_comparisons = budget;
  return c;
}

// Runs a session to completion, collecting its log.
std::vector<SessionEvent> full_log(const SessionConfig& c, Session* out = nullptr) {
  Session s(c, make_map());
  auto log = start_events("abc", s);
  int k = 0;
  while (!s.finished()) {
    ++k;
    s.submit_feedback(k % 3 != 0, 250.0 + k);
    for (auto& e : feedback_events("abc", s)) log.push_back(std::move(e));
  }
  if (out) *out = s;
  return log;
}

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("config json round trip") {
  SessionConfig c = config(Strategy::simple_bo);
  c.acquisition = {AcquisitionKind::expected_improvement, 1.5};
  c.pivot = Pivot::latest;
  c.laplace.likelihood_noise = 0.2;
  CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("event lines round trip bit-exactly") {
  const auto log = full_log(config(Strategy::bandit_bo));
  for (const auto& e : log) {
    const SessionEvent back = parse_event(format_event(e));
    CHECK(back.session_id == e.session_id);
    CHECK(back.iteration == e.iteration);
    CHECK(back.event_kind == e.event_kind);
    CHECK(back.arm == e.arm);
    CHECK(back.current_won == e.current_won);
    CHECK(back.decision_time_ms == e.decision_time_ms);
    CHECK(back.rng_cursor == e.rng_cursor);
    CHECK(back.timestamp_ms == e.timestamp_ms);
    CHECK(back.config.has_value() == e.config.has_value());
    REQUIRE(back.coords.has_value() == e.coords.has_value());
    if (e.coords) CHECK(same_bits(*back.coords, *e.coords));
  }
}

TEST_CASE("log layout") {
  const auto log = full_log(config(Strategy::random, 3));
  // start, 2 shown, then (feedback, shown) x2 and (feedback, finished).
  REQUIRE(log.size() == 9);
  CHECK(log[0].event_kind == "start");
  CHECK(log[1].event_kind == "shown");
  CHECK(log[2].rng_cursor == 6);
  CHECK(log[3].event_kind == "feedback");
  CHECK(log[3].iteration == 1);
  CHECK(log[4].event_kind == "shown");
  CHECK(log[7].event_kind == "feedback");
  CHECK(log[8].event_kind == "finished");
}

TEST_CASE("replay reproduces the session for every strategy") {
  for (Strategy st : {Strategy::bandit_bo, Strategy::simple_bo, Strategy::random}) {
    Session original(config(st), make_map());
    const auto log = full_log(config(st), &original);
    const Session replayed = replay_session(log, make_map());
    REQUIRE(replayed.shown().size() == original.shown().size());
    for (std::size_t i = 0; i < original.shown().size(); ++i)
      CHECK(same_bits(replayed.shown()[i].coords, original.shown()[i].coords));
    CHECK(replayed.rng_cursor() == original.rng_cursor());
    CHECK(replayed.bandit() == original.bandit());
    CHECK(same_bits(replayed.final_choice(), original.final_choice()));
  }
}

TEST_CASE("replay of a prefix continues like the original") {
  Session original(config(Strategy::bandit_bo), make_map());
  const auto log = full_log(config(Strategy::bandit_bo), &original);
  // Cut after the 4th feedback's shown event: 3 + 2*4 lines.
  const std::vector<SessionEvent> prefix(log.begin(), log.begin() + 11);
  Session resumed = replay_session(prefix, make_map());
  CHECK(resumed.iteration() == 4);
  int k = 4;
  while (!resumed.finished()) {
    ++k;
    resumed.submit_feedback(k % 3 != 0, 250.0 + k);
  }
  for (std::size_t i = 0; i < original.shown().size(); ++i)
    CHECK(same_bits(resumed.shown()[i].coords, original.shown()[i].coords));
}

TEST_CASE("trailing feedback without its shown event is applied") {
  auto log = full_log(config(Strategy::simple_bo));
  const std::vector<SessionEvent> cut(log.begin(), log.begin() + 4);
  const Session s = replay_session(cut, make_map());
  CHECK(s.iteration() == 1);
  CHECK(s.shown().size() == 3);
}

TEST_CASE("tampered logs are rejected") {
  const auto log = full_log(config(Strategy::bandit_bo));
  SUBCASE("shown point changed") {
    auto bad = log;
    (*bad[4].coords)[0] = std::nextafter((*bad[4].coords)[0], 1e9);
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
  SUBCASE("rng cursor changed") {
    auto bad = log;
    bad[2].rng_cursor += 1;
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
  SUBCASE("different seed") {
    auto bad = log;
    bad[0].config->seed += 1;
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
  SUBCASE("missing start") {
    const std::vector<SessionEvent> bad(log.begin() + 1, log.end());
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
  SUBCASE("feedback out of order") {
    auto bad = log;
    bad[3].iteration = 2;
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
  SUBCASE("wrong final choice") {
    auto bad = log;
    (*bad.back().coords)[1] += 1.0;
    CHECK_THROWS_AS(replay_session(bad, make_map()), ReplayMismatch);
  }
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_event("{"), FormatError);
  CHECK_THROWS_AS(parse_event("{\"session_id\": 1}"), FormatError);
  const auto log = full_log(config(Strategy::random, 1));
  auto j = nlohmann::json::parse(format_event(log[0]));
  j["config"]["strategy"] = "greedy";
  CHECK_THROWS_AS(parse_event(j.dump()), FormatError);
}

TEST_CASE("append and read a log file") {
  const auto dir = oracle::temp_dir("eventlog");
  const auto path = dir / "s.jsonl";
  const auto log = full_log(config(Strategy::bandit_bo, 4));
  append_event_log(path, std::span(log).subspan(0, 3));
  append_event_log(path, std::span(log).subspan(3));
  const auto back = read_event_log(path);
  REQUIRE(back.size() == log.size());
  CHECK(replay_session(back, make_map()).finished());
  CHECK_THROWS_AS(read_event_log(dir / "missing.jsonl"), Error);
}
