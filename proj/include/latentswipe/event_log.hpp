#pragma once

#include "latentswipe/engine.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace latentswipe {

// One line of a session event log. Kinds:
//   start     config of the run (iteration 0)
//   shown     a point displayed to the user; iteration = feedbacks so far
//   feedback  a swipe; iteration = 1-based feedback number
//   finished  budget used up; coords = final choice
struct SessionEvent {
  std::string session_id;
  std::size_t iteration = 0;
  std::string event_kind;
  std::optional<LatentPoint> coords;
  std::optional<std::size_t> arm;
  std::optional<bool> current_won;
  std::optional<double> decision_time_ms;
  std::uint64_t rng_cursor = 0;
  std::int64_t timestamp_ms = 0;
  std::optional<SessionConfig> config;
};

nlohmann::json config_to_json(const SessionConfig& config);
SessionConfig config_from_json(const nlohmann::json& j);

std::string format_event(const SessionEvent& event);
SessionEvent parse_event(std::string_view line);

// Events describing a freshly started session (start + two shown).
std::vector<SessionEvent> start_events(std::string_view session_id, const Session& session);
// Events for the most recent feedback: feedback, then shown or finished.
std::vector<SessionEvent> feedback_events(std::string_view session_id, const Session& session);

// Rebuilds a session by re-applying every logged feedback. Each logged
// shown point and RNG cursor must match the recomputed one bit for bit,
// otherwise ReplayMismatch is thrown. A trailing feedback whose shown
// event is missing is still applied.
Session replay_session(std::span<const SessionEvent> events, std::shared_ptr<const SubspaceMap> subspace);

std::vector<SessionEvent> read_event_log(const std::filesystem::path& path);
// Appends and flushes.
void append_event_log(const std::filesystem::path& path, std::span<const SessionEvent> events);

}  // namespace latentswipe
