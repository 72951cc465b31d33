#include "latentswipe/service.hpp"

#include "latentswipe/errors.hpp"
#include "latentswipe/image.hpp"

#include <httplib.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace latentswipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::int64_t wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ServiceReply error_reply(int status, const std::string& message) { return {status, {{"error", message}}, {}}; }

std::string random_hex(std::mt19937_64& rng) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void write_atomically(const fs::path& path, const std::string& bytes) {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp = path.string() + ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json coords_json(const LatentPoint& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  return true;
}

bool non_negative_integer(const json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

SessionConfig parse_create_request(const json& req, std::size_t latent_dim, std::mt19937_64& seed_rng) {
  if (!req.is_object()) throw ConfigMismatch("request body must be a JSON object");
  SessionConfig c;
  if (!req.contains("strategy") || !req.at("strategy").is_string()) throw ConfigMismatch("strategy is required");
  c.strategy = strategy_from_string(req.at("strategy").get<std::string>());
  if (!req.contains("d_prime") || !req.at("d_prime").is_number_integer())
    throw ConfigMismatch("d_prime must be an integer");
  const auto d_prime = req.at("d_prime").get<std::int64_t>();
  if (d_prime < 1 || static_cast<std::uint64_t>(d_prime) > latent_dim)
    throw ConfigMismatch("d_prime must be in [1, " + std::to_string(latent_dim) + "]");
  c.d = latent_dim;
  c.d_prime = static_cast<std::size_t>(d_prime);
  if (req.contains("seed") && !req.at("seed").is_null()) {
    if (!non_negative_integer(req.at("seed"))) throw ConfigMismatch("seed must be a non-negative integer");
    c.seed = req.at("seed").get<std::uint64_t>();
  } else {
    // Kept below 2^53 so JavaScript clients can echo it back exactly.
    c.seed = seed_rng() >> 11;
  }
  if (req.contains("budget") && !req.at("budget").is_null()) {
    if (!req.at("budget").is_number_integer() || req.at("budget").get<std::int64_t>() < 1)
      throw ConfigMismatch("budget must be a positive integer");
    c.max_comparisons = req.at("budget").get<std::size_t>();
  }
  if (req.contains("pivot") && !req.at("pivot").is_null()) {
    if (!req.at("pivot").is_string()) throw ConfigMismatch("pivot must be a string");
    c.pivot = pivot_from_string(req.at("pivot").get<std::string>());
  }
  if (req.contains("acquisition") && !req.at("acquisition").is_null()) {
    if (!req.at("acquisition").is_string()) throw ConfigMismatch("acquisition must be a string");
    try {
      c.acquisition.kind = acquisition_kind_from_string(req.at("acquisition").get<std::string>());
    } catch (const Error& e) {
      throw ConfigMismatch(e.what());
    }
  }
  c.validate();
  return c;
}

}  // namespace

struct SessionService::Entry {
  explicit Entry(Session s) : session(std::move(s)) {}
  std::mutex mutex;  // serialises feedback
  Session session;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
  std::size_t log_lines = 0;
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const json> snapshot;
};

SessionService::SessionService(std::shared_ptr<const Generator> generator, ServiceOptions options)
    : generator_(std::move(generator)),
      options_(std::move(options)),
      render_slots_(std::max<std::ptrdiff_t>(1, std::min<std::ptrdiff_t>(1024, options_.render_concurrency))) {
  if (!generator_) throw Error("session service needs a generator");
  latent_dim_ = generator_->descriptor().latent_dim;
  fs::create_directories(options_.data_dir / "sessions");
  fs::create_directories(options_.data_dir / "subspaces");
  fs::create_directories(options_.data_dir / "images");
  load_existing();
}

SessionService::~SessionService() = default;

std::string SessionService::image_id_for(const LatentSample& latent) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(latent.data(), static_cast<std::size_t>(latent.size()) * sizeof(double))));
  return buf;
}

fs::path SessionService::log_path(const std::string& id) const { return options_.data_dir / "sessions" / (id + ".jsonl"); }

std::shared_ptr<const SubspaceMap> SessionService::subspace_for(std::size_t d_prime) {
  std::lock_guard lock(subspace_mutex_);
  if (auto it = subspaces_.find(d_prime); it != subspaces_.end()) return it->second;
  const fs::path path = options_.data_dir / "subspaces" / ("d" + std::to_string(d_prime) + ".txt");
  std::shared_ptr<const SubspaceMap> map;
  if (fs::exists(path)) {
    map = std::make_shared<const SubspaceMap>(SubspaceMap::from_string(read_file(path)));
    if (map->d() != latent_dim_ || map->d_prime() != d_prime)
      throw Error("stored subspace " + path.string() + " does not match the generator");
  } else {
    const auto population = generator_->sample_latents(options_.pca_population, options_.pca_seed);
    map = std::make_shared<const SubspaceMap>(fit_subspace(population, d_prime));
    write_atomically(path, map->to_string());
  }
  subspaces_[d_prime] = map;
  return map;
}

std::string SessionService::render_image(const LatentSample& latent) {
  const std::string id = image_id_for(latent);
  {
    std::shared_lock lock(images_mutex_);
    if (images_.contains(id)) return id;
  }
  const fs::path path = options_.data_dir / "images" / (id + ".png");
  std::vector<std::uint8_t> png;
  if (fs::exists(path)) {
    const std::string bytes = read_file(path);
    png.assign(bytes.begin(), bytes.end());
  } else {
    render_slots_.acquire();
    try {
      png = generator_->render_png(latent);
    } catch (...) {
      render_slots_.release();
      throw;
    }
    render_slots_.release();
    write_atomically(path, std::string(png.begin(), png.end()));
  }
  std::unique_lock lock(images_mutex_);
  images_.emplace(id, std::make_shared<const std::vector<std::uint8_t>>(std::move(png)));
  return id;
}

std::string SessionService::image_url(const LatentPoint& coords, const SubspaceMap& map) const {
  return "/v1/images/" + image_id_for(map.inverse(coords));
}

json SessionService::make_snapshot(const std::string& id, const Entry& entry) const {
  const Session& s = entry.session;
  const SessionConfig& c = s.config();
  const SubspaceMap& map = s.subspace();
  json history = json::array();
  for (const auto& rec : s.history()) {
    history.push_back({{"iteration", rec.iteration},
                       {"current_won", rec.current_won},
                       {"arm", rec.arm ? json(*rec.arm) : json(nullptr)},
                       {"decision_time_ms", rec.decision_time_ms ? json(*rec.decision_time_ms) : json(nullptr)}});
  }
  json snap = {{"session_id", id},
               {"status", s.finished() ? "finished" : "active"},
               {"iteration", s.iteration()},
               {"budget", c.max_comparisons},
               {"strategy", to_string(c.strategy)},
               {"d_prime", c.d_prime},
               {"seed", c.seed},
               {"pivot", to_string(c.pivot)},
               {"acquisition", to_string(c.acquisition.kind)},
               {"created_at", entry.created_at},
               {"updated_at", entry.updated_at},
               {"event_log_offset", entry.log_lines},
               {"previous", {{"coords", coords_json(s.previous())}, {"image_url", image_url(s.previous(), map)}}},
               {"current",
                {{"coords", coords_json(s.current())},
                 {"image_url", image_url(s.current(), map)},
                 {"arm", s.current_arm() ? json(*s.current_arm()) : json(nullptr)}}},
               {"history", std::move(history)}};
  if (c.strategy == Strategy::bandit_bo) {
    json pulls = json::array(), mean = json::array();
    for (const auto& arm : s.bandit().stats()) {
      pulls.push_back(arm.pulls);
      mean.push_back(arm.mean_reward());
    }
    snap["bandit"] = {{"t", s.bandit().t()}, {"pulls", pulls}, {"mean_reward", mean}};
  }
  if (s.finished()) {
    snap["final_coords"] = coords_json(s.final_choice());
    snap["final_image_url"] = image_url(s.final_choice(), map);
  }
  return snap;
}

void SessionService::publish(const std::string& id, Entry& entry) {
  auto snap = std::make_shared<const json>(make_snapshot(id, entry));
  std::lock_guard lock(entry.snapshot_mutex);
  entry.snapshot = std::move(snap);
}

ServiceReply SessionService::create_session(const json& request) {
  SessionConfig config;
  std::string id;
  {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    try {
      config = parse_create_request(request, latent_dim_, rng);
    } catch (const ConfigMismatch& e) {
      return error_reply(400, e.what());
    } catch (const json::exception& e) {
      return error_reply(400, e.what());
    }
    id = random_hex(rng);
  }
  try {
    auto map = subspace_for(config.d_prime);
    Session session(config, map);
    render_image(map->inverse(session.previous()));
    render_image(map->inverse(session.current()));

    auto entry = std::make_shared<Entry>(std::move(session));
    entry->created_at = entry->updated_at = wall_ms();
    auto events = start_events(id, entry->session);
    for (auto& e : events) e.timestamp_ms = entry->created_at;
    {
      std::unique_lock lock(sessions_mutex_);
      while (sessions_.contains(id) || fs::exists(log_path(id))) {
        static thread_local std::mt19937_64 rng{std::random_device{}()};
        id = random_hex(rng);
        for (auto& e : events) e.session_id = id;
      }
      append_event_log(log_path(id), events);
      entry->log_lines = events.size();
      publish(id, *entry);
      sessions_.emplace(id, entry);
    }
    const json snap = *entry->snapshot;
    return {201,
            {{"session_id", id},
             {"seed", config.seed},
             {"iteration", 0},
             {"budget", config.max_comparisons},
             {"image_url_previous", snap["previous"]["image_url"]},
             {"image_url_current", snap["current"]["image_url"]}},
            {}};
  } catch (const ExternalUnavailable& e) {
    return error_reply(503, std::string("generator unavailable: ") + e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

ServiceReply SessionService::submit_feedback(const std::string& session_id, const json& request) {
  std::shared_ptr<Entry> entry;
  {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return error_reply(404, "unknown session " + session_id);
    entry = it->second;
  }
  if (!request.is_object() || !request.contains("current_won") || !request.at("current_won").is_boolean())
    return error_reply(400, "current_won must be a boolean");
  std::optional<double> decision_time;
  if (request.contains("decision_time_ms") && !request.at("decision_time_ms").is_null()) {
    if (!request.at("decision_time_ms").is_number() || request.at("decision_time_ms").get<double>() < 0.0)
      return error_reply(400, "decision_time_ms must be a non-negative number");
    decision_time = request.at("decision_time_ms").get<double>();
  }
  std::optional<std::size_t> iteration;
  if (request.contains("iteration") && !request.at("iteration").is_null()) {
    if (!non_negative_integer(request.at("iteration"))) return error_reply(400, "iteration must be a non-negative integer");
    iteration = request.at("iteration").get<std::size_t>();
  }

  std::unique_lock lock(entry->mutex, std::try_to_lock);
  if (!lock.owns_lock()) return error_reply(409, "another feedback for this session is being processed");
  if (entry->session.finished()) return error_reply(409, "session is finished");
  if (iteration && *iteration != entry->session.iteration())
    return error_reply(409, "stale iteration " + std::to_string(*iteration) + ", session is at " +
                                std::to_string(entry->session.iteration()));

  try {
    // Work on a copy so a failed render leaves the session untouched.
    Session next_state = entry->session;
    next_state.submit_feedback(request.at("current_won").get<bool>(), decision_time);
    const SubspaceMap& map = next_state.subspace();
    const LatentPoint shown = next_state.finished() ? next_state.final_choice() : next_state.current();
    const std::string image = render_image(map.inverse(shown));

    auto events = feedback_events(session_id, next_state);
    const std::int64_t now = wall_ms();
    for (auto& e : events) e.timestamp_ms = now;
    append_event_log(log_path(session_id), events);

    entry->session = std::move(next_state);
    entry->updated_at = now;
    entry->log_lines += events.size();
    publish(session_id, *entry);
    const Session& s = entry->session;
    if (s.finished() || s.iteration() % std::max<std::size_t>(1, options_.snapshot_every) == 0) {
      write_atomically(options_.data_dir / "sessions" / (session_id + ".snapshot.json"), entry->snapshot->dump());
    }

    json body = {{"session_id", session_id}, {"iteration", s.iteration()}, {"finished", s.finished()}};
    if (s.finished())
      body["final_image_url"] = "/v1/images/" + image;
    else
      body["next_image_url"] = "/v1/images/" + image;
    return {200, std::move(body), {}};
  } catch (const ExternalUnavailable& e) {
    return error_reply(503, std::string("generator unavailable: ") + e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

ServiceReply SessionService::snapshot(const std::string& session_id) const {
  std::shared_ptr<Entry> entry;
  {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return error_reply(404, "unknown session " + session_id);
    entry = it->second;
  }
  std::lock_guard lock(entry->snapshot_mutex);
  return {200, *entry->snapshot, {}};
}

ServiceReply SessionService::image(const std::string& image_id) const {
  {
    std::shared_lock lock(images_mutex_);
    if (auto it = images_.find(image_id); it != images_.end()) return {200, {}, *it->second};
  }
  if (image_id.size() != 16 || image_id.find_first_not_of("0123456789abcdef") != std::string::npos)
    return error_reply(404, "unknown image");
  const fs::path path = options_.data_dir / "images" / (image_id + ".png");
  if (!fs::exists(path)) return error_reply(404, "unknown image");
  const std::string bytes = read_file(path);
  return {200, {}, std::vector<std::uint8_t>(bytes.begin(), bytes.end())};
}

std::optional<Session> SessionService::session_state(const std::string& session_id) const {
  std::shared_ptr<Entry> entry;
  {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return std::nullopt;
    entry = it->second;
  }
  std::lock_guard lock(entry->mutex);
  return entry->session;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

void SessionService::load_existing() {
  for (const auto& file : fs::directory_iterator(options_.data_dir / "sessions")) {
    if (file.path().extension() != ".jsonl") continue;
    const std::string id = file.path().stem().string();
    try {
      std::string text = read_file(file.path());
      // A crash can leave half a line at the end; drop it before appending again.
      const auto last_newline = text.find_last_of('\n');
      const std::size_t keep = last_newline == std::string::npos ? 0 : last_newline + 1;
      if (keep != text.size()) {
        fs::resize_file(file.path(), keep);
        text.resize(keep);
      }
      std::vector<SessionEvent> events;
      std::istringstream lines(text);
      std::string line;
      while (std::getline(lines, line))
        if (!line.empty()) events.push_back(parse_event(line));
      if (events.empty() || !events.front().config) throw ReplayMismatch("log has no start event");
      for (const auto& e : events)
        if (e.session_id != id) throw ReplayMismatch("event for session " + e.session_id + " in log of " + id);
      const SessionConfig& config = *events.front().config;
      if (config.d != latent_dim_) throw ReplayMismatch("log was written for a different generator");
      auto entry = std::make_shared<Entry>(replay_session(events, subspace_for(config.d_prime)));
      entry->created_at = events.front().timestamp_ms;
      entry->updated_at = events.back().timestamp_ms;
      entry->log_lines = events.size();
      // A crash between feedback and shown leaves the log one event short.
      if (events.back().event_kind == "feedback") {
        const Session& s = entry->session;
        const LatentPoint shown = s.finished() ? s.final_choice() : s.current();
        render_image(s.subspace().inverse(shown));
        std::vector<SessionEvent> tail = feedback_events(id, s);
        tail.erase(tail.begin());
        for (auto& e : tail) e.timestamp_ms = entry->updated_at;
        append_event_log(file.path(), tail);
        entry->log_lines += tail.size();
      }
      publish(id, *entry);
      sessions_.emplace(id, std::move(entry));
    } catch (const std::exception& e) {
      replay_failures_[id] = e.what();
      std::cerr << "latentswipe: could not restore session " << id << ": " << e.what() << '\n';
    }
  }
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ServiceReply& reply) {
    res.status = reply.status;
    if (!reply.png.empty()) {
      res.set_header("Cache-Control", "public, max-age=31536000, immutable");
      res.set_content(reinterpret_cast<const char*>(reply.png.data()), reply.png.size(), "image/png");
    } else {
      res.set_content(reply.body.dump(), "application/json");
    }
  };
  auto parse_body = [](const httplib::Request& req) -> std::optional<json> {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server.Post("/v1/sessions", [this, send, parse_body](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    send(res, body ? create_session(*body) : error_reply(400, "body is not valid JSON"));
  });
  server.Post(R"(/v1/sessions/([^/]+)/feedback)",
              [this, send, parse_body](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                if (!valid_session_id(id)) return send(res, error_reply(404, "unknown session"));
                auto body = parse_body(req);
                send(res, body ? submit_feedback(id, *body) : error_reply(400, "body is not valid JSON"));
              });
  server.Get(R"(/v1/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, snapshot(req.matches[1]));
  });
  server.Get(R"(/v1/images/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, image(req.matches[1]));
  });
}

}  // namespace latentswipe
