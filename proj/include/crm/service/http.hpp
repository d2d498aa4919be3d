#pragma once

#include <httplib.h>

#include "crm/service/service.hpp"

namespace crm::service {

// Registers the /v1 routes on `server`. Mutating routes read the session
// token from "Authorization: Bearer <token>".
void install_routes(httplib::Server& server, SessionService& service);

[[nodiscard]] std::string bearer_token(const httplib::Request& request);

}  // namespace crm::service
