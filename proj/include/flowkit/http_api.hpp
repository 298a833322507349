#pragma once

#include <httplib.h>

#include "flowkit/runtime.hpp"

namespace flowkit {

/// Registers the JSON endpoints on `server`. The runtime must outlive it.
void install_routes(httplib::Server& server, Runtime& runtime);

}  // namespace flowkit
