// Serves the procedural generator over the external generator protocol.

#include "latentswipe/generator_routes.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdio>

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procedural generator server"};
  std::string host = "127.0.0.1";
  int port = 8090;
  std::size_t latent_dim = 64;
  std::size_t image_size = 256;
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "bind port")->check(CLI::Range(1, 65535));
  app.add_option("--latent-dim", latent_dim, "latent size")->check(CLI::PositiveNumber);
  app.add_option("--image-size", image_size, "image side in pixels")->check(CLI::Range(32, 4096));
  CLI11_PARSE(app, argc, argv);

  latentswipe::ProceduralGenerator gen(latent_dim, image_size);
  httplib::Server server;
  latentswipe::mount_generator_routes(server, gen);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("gen-server listening on %s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "gen-server: cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}
