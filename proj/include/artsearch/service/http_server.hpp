#pragma once

#include <memory>
#include <string>
#include <thread>

#include "artsearch/service/api.hpp"

namespace httplib {
class Server;
}

namespace artsearch::service {

/// Serves an Api over HTTP/1.1 with a fixed worker pool.
class HttpServer {
 public:
  HttpServer(Api& api, std::string host, int port, size_t threads, size_t max_body_bytes);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }

 private:
  void bind();

  Api& api_;
  std::string host_;
  int port_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace artsearch::service
