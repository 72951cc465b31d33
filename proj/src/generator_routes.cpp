#include "latentswipe/generator_routes.hpp"

#include "latentswipe/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace latentswipe {

namespace {

using nlohmann::json;

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

LatentSample parse_latent(const json& j) {
  const auto v = j.at("latent").get<std::vector<double>>();
  return Vector::Map(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const json::exception& e) {
    reply_error(res, 400, e.what());
  } catch (const DimensionMismatch& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

void mount_generator_routes(httplib::Server& server, const Generator& gen) {
  server.Get("/v1/descriptor", [&gen](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const auto d = gen.descriptor();
      res.set_content(json{{"d", d.latent_dim}, {"height", d.height}, {"width", d.width}}.dump(),
                      "application/json");
    });
  });
  server.Post("/v1/render", [&gen](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto png = gen.render_png(parse_latent(json::parse(req.body)));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });
  server.Post("/v1/embed", [&gen](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      Vector e;
      if (body.contains("latent")) {
        e = gen.embed(parse_latent(body));
      } else if (body.contains("png_base64")) {
        e = gen.embed_image(decode_png(base64_decode(body.at("png_base64").get<std::string>())));
      } else {
        reply_error(res, 400, "expected 'latent' or 'png_base64'");
        return;
      }
      res.set_content(json{{"embedding", std::vector<double>(e.data(), e.data() + e.size())}}.dump(),
                      "application/json");
    });
  });
  server.Post("/v1/sample", [&gen](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const auto latents = gen.sample_latents(body.at("n").get<std::size_t>(), body.at("seed").get<std::uint64_t>());
      json rows = json::array();
      for (const auto& w : latents) rows.push_back(std::vector<double>(w.data(), w.data() + w.size()));
      res.set_content(json{{"latents", rows}}.dump(), "application/json");
    });
  });
}

}  // namespace latentswipe
