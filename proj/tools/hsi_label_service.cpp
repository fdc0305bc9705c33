// HTTP labeling service.
//
//   HSI_DATA_DIR  directory holding <id>.hdr cubes (default: .)
//   HSI_PORT      listen port (default: 8080)
//   HSI_HOST      bind address (default: 127.0.0.1)

#include <cstdlib>
#include <iostream>
#include <string>

#include "hsi/label_service_http.hpp"

int main() {
  auto env = [](const char* k, const char* def) {
    const char* v = std::getenv(k);
    return std::string(v && *v ? v : def);
  };
  const std::string dir = env("HSI_DATA_DIR", ".");
  const std::string host = env("HSI_HOST", "127.0.0.1");
  int port = 0;
  try {
    port = std::stoi(env("HSI_PORT", "8080"));
  } catch (const std::exception&) {
    std::cerr << "error: HSI_PORT is not a number\n";
    return 1;
  }

  try {
    hsi::service::LabelService svc(dir);
    httplib::Server server;
    hsi::service::register_routes(server, svc);
    std::cout << "serving " << dir << " on http://" << host << ":" << port << "\n" << std::flush;
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
      return 2;
    }
  } catch (const hsi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.kind());
  }
  return 0;
}
