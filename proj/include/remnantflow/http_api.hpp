#pragma once

#include <memory>
#include <string>

#include "remnantflow/service.hpp"

namespace httplib {
class Server;
}

namespace rf {

/// HTTP status used for each error kind.
int http_status(ErrorKind kind);

/// JSON HTTP front end for a Service. Errors are returned as
/// {"code", "message", "detail"}.
class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  /// Blocks until stop(). Returns false if the address cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rf
