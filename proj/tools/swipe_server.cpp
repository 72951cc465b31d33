// HTTP swipe-session service.

#include "latentswipe/errors.hpp"
#include "latentswipe/genkit.hpp"
#include "latentswipe/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>

using namespace latentswipe;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

bool split_listen(const std::string& listen, std::string& host, int& port) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return false;
  host = listen.substr(0, colon);
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    return false;
  }
  return port > 0 && port < 65536;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latentswipe session server"};
  std::string listen = "127.0.0.1:8080";
  std::string generator_kind = "procedural";
  std::string external_url;
  ServiceOptions options;
  std::size_t latent_dim = 64;
  std::size_t image_size = 256;
  std::string data_dir = options.data_dir.string();

  app.add_option("--listen", listen, "host:port")->envname("LATENTSWIPE_LISTEN");
  app.add_option("--generator", generator_kind, "procedural or external")
      ->envname("LATENTSWIPE_GENERATOR")
      ->check(CLI::IsMember({"procedural", "external"}));
  app.add_option("--external-url", external_url, "base URL of an external generator")
      ->envname("LATENTSWIPE_EXTERNAL_URL");
  app.add_option("--data-dir", data_dir, "event logs, subspaces and images")->envname("LATENTSWIPE_DATA_DIR");
  app.add_option("--render-concurrency", options.render_concurrency, "parallel render calls")
      ->envname("LATENTSWIPE_RENDER_CONCURRENCY")
      ->check(CLI::Range(1, 1024));
  app.add_option("--latent-dim", latent_dim, "procedural latent size")->check(CLI::PositiveNumber);
  app.add_option("--image-size", image_size, "procedural image side in pixels")->check(CLI::Range(32, 4096));
  CLI11_PARSE(app, argc, argv);

  std::string host;
  int port = 0;
  if (!split_listen(listen, host, port)) {
    std::fprintf(stderr, "swipe-server: --listen must look like host:port\n");
    return 2;
  }
  options.data_dir = data_dir;

  try {
    std::shared_ptr<const Generator> gen;
    if (generator_kind == "external") {
      if (external_url.empty()) throw latentswipe::Error("--external-url is required with --generator external");
      gen = std::make_shared<ExternalGenerator>(external_url);
    } else {
      gen = std::make_shared<ProceduralGenerator>(latent_dim, image_size);
    }
    SessionService service(gen, options);
    for (const auto& [id, why] : service.replay_failures())
      std::fprintf(stderr, "swipe-server: session %s not restored: %s\n", id.c_str(), why.c_str());

    httplib::Server server;
    service.mount(server);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::printf("swipe-server listening on %s:%d (%zu sessions restored)\n", host.c_str(), port,
                service.session_ids().size());
    std::fflush(stdout);
    if (!server.listen(host, port)) {
      std::fprintf(stderr, "swipe-server: cannot listen on %s\n", listen.c_str());
      return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "swipe-server: %s\n", e.what());
    return 1;
  }
  return 0;
}
