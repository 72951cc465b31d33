#pragma once

#include "latentswipe/engine.hpp"
#include "latentswipe/event_log.hpp"
#include "latentswipe/genkit.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace latentswipe {

struct ServiceOptions {
  std::filesystem::path data_dir = "latentswipe-data";
  int render_concurrency = 4;
  // Write <id>.snapshot.json after this many feedbacks (and on finish).
  std::size_t snapshot_every = 10;
  std::size_t pca_population = kDefaultPcaPopulation;
  std::uint64_t pca_seed = 20240101;
};

// Status code plus JSON body, or PNG bytes for images.
struct ServiceReply {
  int status = 200;
  nlohmann::json body;
  std::vector<std::uint8_t> png;
};

// Swipe-session service. Every session keeps an append-only event log in
// <data_dir>/sessions/<id>.jsonl; constructing a service on an existing
// directory replays those logs, so a restarted process resumes every
// session where it stopped. Subspaces are persisted per d' in
// <data_dir>/subspaces and rendered PNGs in <data_dir>/images.
class SessionService {
 public:
  SessionService(std::shared_ptr<const Generator> generator, ServiceOptions options);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  // POST /v1/sessions
  ServiceReply create_session(const nlohmann::json& request);
  // POST /v1/sessions/{id}/feedback
  ServiceReply submit_feedback(const std::string& session_id, const nlohmann::json& request);
  // GET /v1/sessions/{id}
  ServiceReply snapshot(const std::string& session_id) const;
  // GET /v1/images/{id}
  ServiceReply image(const std::string& image_id) const;

  // Engine state of a live session, copied under its lock.
  std::optional<Session> session_state(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  // Sessions whose log could not be replayed on startup, with the reason.
  const std::map<std::string, std::string>& replay_failures() const { return replay_failures_; }

  void mount(httplib::Server& server);

  static std::string image_id_for(const LatentSample& latent);

 private:
  struct Entry;

  std::shared_ptr<const SubspaceMap> subspace_for(std::size_t d_prime);
  std::string render_image(const LatentSample& latent);
  std::string image_url(const LatentPoint& coords, const SubspaceMap& map) const;
  nlohmann::json make_snapshot(const std::string& id, const Entry& entry) const;
  void publish(const std::string& id, Entry& entry);
  void load_existing();
  std::filesystem::path log_path(const std::string& id) const;

  std::shared_ptr<const Generator> generator_;
  ServiceOptions options_;
  std::size_t latent_dim_;

  std::mutex subspace_mutex_;
  std::map<std::size_t, std::shared_ptr<const SubspaceMap>> subspaces_;

  mutable std::shared_mutex images_mutex_;
  std::map<std::string, std::shared_ptr<const std::vector<std::uint8_t>>> images_;
  std::counting_semaphore<1024> render_slots_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<std::string, std::string> replay_failures_;
};

}  // namespace latentswipe
