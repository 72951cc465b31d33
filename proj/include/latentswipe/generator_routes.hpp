#pragma once

#include "latentswipe/genkit.hpp"

namespace httplib {
class Server;
}

namespace latentswipe {

// Serves `gen` over the /v1 generator protocol understood by
// ExternalGenerator. `gen` must outlive the server.
void mount_generator_routes(httplib::Server& server, const Generator& gen);

}  // namespace latentswipe
