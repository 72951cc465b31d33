#include "latentswipe/errors.hpp"
#include "latentswipe/genkit.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace latentswipe {

namespace {

using nlohmann::json;

struct InFlightGuard {
  std::counting_semaphore<64>& sem;
  explicit InFlightGuard(std::counting_semaphore<64>& s) : sem(s) { sem.acquire(); }
  ~InFlightGuard() { sem.release(); }
};

std::unique_ptr<httplib::Client> make_client(const std::string& base_url, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());
  return client;
}

[[noreturn]] void raise(const std::string& what, httplib::Error err) {
  if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
    throw ExternalTimeout(what + ": " + httplib::to_string(err));
  throw ExternalUnavailable(what + ": " + httplib::to_string(err));
}

json latent_json(const LatentSample& w) {
  return std::vector<double>(w.data(), w.data() + w.size());
}

Vector to_vector(const json& arr) {
  const auto v = arr.get<std::vector<double>>();
  return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ExternalGenerator::ExternalGenerator(std::string base_url, ExternalOptions options)
    : base_url_(std::move(base_url)), options_(options), in_flight_(std::clamp(options.max_in_flight, 1, 64)) {}

ExternalGenerator::~ExternalGenerator() = default;

std::string ExternalGenerator::get(const std::string& path) const {
  InFlightGuard guard(in_flight_);
  auto client = make_client(base_url_, options_.timeout);
  auto res = client->Get(path);
  if (!res) raise("GET " + path, res.error());
  if (res->status != 200) throw ExternalUnavailable("GET " + path + " returned " + std::to_string(res->status));
  return res->body;
}

std::string ExternalGenerator::post(const std::string& path, const std::string& body) const {
  InFlightGuard guard(in_flight_);
  auto client = make_client(base_url_, options_.timeout);
  auto res = client->Post(path, body, "application/json");
  if (!res) raise("POST " + path, res.error());
  if (res->status != 200) throw ExternalUnavailable("POST " + path + " returned " + std::to_string(res->status));
  return res->body;
}

GeneratorDescriptor ExternalGenerator::descriptor() const {
  try {
    const json j = json::parse(get("/v1/descriptor"));
    return {j.at("d").get<std::size_t>(), j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>(),
            GeneratorKind::external};
  } catch (const json::exception& e) {
    throw ExternalUnavailable(std::string("malformed descriptor: ") + e.what());
  }
}

std::vector<LatentSample> ExternalGenerator::sample_latents(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw Error("sample_latents needs n >= 1");
  const std::string body = post("/v1/sample", json{{"n", n}, {"seed", seed}}.dump());
  try {
    const json j = json::parse(body);
    std::vector<LatentSample> out;
    for (const auto& row : j.at("latents")) out.push_back(to_vector(row));
    if (out.size() != n) throw ExternalUnavailable("remote returned a partial latent batch");
    return out;
  } catch (const json::exception& e) {
    throw ExternalUnavailable(std::string("malformed sample response: ") + e.what());
  }
}

std::vector<std::uint8_t> ExternalGenerator::render_png(const LatentSample& w) const {
  if (!w.allFinite()) throw DimensionMismatch("latent contains non-finite entries");
  const std::string body = post("/v1/render", json{{"latent", latent_json(w)}}.dump());
  return {body.begin(), body.end()};
}

ImageBuffer ExternalGenerator::render(const LatentSample& w) const { return decode_png(render_png(w)); }

Vector ExternalGenerator::embed(const LatentSample& w) const {
  const std::string body = post("/v1/embed", json{{"latent", latent_json(w)}}.dump());
  try {
    return to_vector(json::parse(body).at("embedding"));
  } catch (const json::exception& e) {
    throw ExternalUnavailable(std::string("malformed embed response: ") + e.what());
  }
}

Vector ExternalGenerator::embed_image(const ImageBuffer& image) const {
  const std::string body = post("/v1/embed", json{{"png_base64", base64_encode(encode_png(image))}}.dump());
  try {
    return to_vector(json::parse(body).at("embedding"));
  } catch (const json::exception& e) {
    throw ExternalUnavailable(std::string("malformed embed response: ") + e.what());
  }
}

}  // namespace latentswipe
