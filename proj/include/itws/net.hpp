#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "itws/error.hpp"

namespace itws::net {

struct Endpoint {
  std::string host;
  uint16_t port = 0;

  std::string url() const;
  // Accepts "http://host:port[/...]" or "host:port".
  static Endpoint parse(std::string_view url);
};

using Headers = std::vector<std::pair<std::string, std::string>>;
const std::string* find_header(const Headers& headers, std::string_view name);  // case-insensitive

// Shared cancellation flag. Copies observe the same flag.
class CancelToken {
 public:
  CancelToken() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
  void cancel() { flag_->store(true, std::memory_order_relaxed); }
  bool cancelled() const { return flag_->load(std::memory_order_relaxed); }

 private:
  std::shared_ptr<std::atomic<bool>> flag_;
};

enum class TransportStatus { Ok, Timeout, ConnectError, ResetOrEof, Cancelled };
const char* to_string(TransportStatus s);

struct HttpReply {
  TransportStatus transport = TransportStatus::ConnectError;
  int status = 0;
  Headers headers;
  std::string body;
  // Interval from the last request byte handed to the kernel until the first
  // response byte arrives. Meaningful only when transport == Ok.
  std::chrono::microseconds response_time{0};
};

struct RequestOptions {
  std::chrono::milliseconds timeout{30000};
  CancelToken cancel;
};

HttpReply http_post(const Endpoint& ep, const std::string& path, std::string_view body,
                    const Headers& extra_headers, const RequestOptions& opts = {});

// ---------------------------------------------------------------------------
// Minimal HTTP/1.1 server: accept loop plus one thread per connection.
// Handlers can poll for peer disconnect, which is how callers observe
// request cancellation mid-processing.
// ---------------------------------------------------------------------------

struct HttpRequest {
  std::string method;
  std::string path;
  Headers headers;
  std::string body;

  // True once the client has closed its end of the connection.
  std::function<bool()> peer_closed;
  // Sleeps for the given duration in small slices, returning early with true
  // if the peer disconnects.
  std::function<bool(std::chrono::milliseconds)> wait_cancellable;
};

struct HttpResponse {
  int status = 200;
  Headers headers;
  std::string body;
};

class HttpServer {
 public:
  using Handler = std::function<HttpResponse(HttpRequest&)>;

  HttpServer() = default;
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void set_handler(Handler handler);

  // Binds and starts accepting. port 0 picks an ephemeral port; the actual
  // port is returned. Throws SpawnError when the bind fails.
  uint16_t start(const std::string& host, uint16_t port);

  // Refuse new connections (the listener closes; in-flight requests finish).
  void pause_accepting();
  // Re-listen on the original host/port.
  void resume_accepting();

  void stop();

  uint16_t port() const { return port_; }
  bool accepting() const { return listen_fd_.load() >= 0; }

 private:
  void accept_loop(int fd);
  void handle_connection(int fd);
  int bind_listener();

  Handler handler_;
  std::string host_;
  uint16_t port_ = 0;
  std::atomic<int> listen_fd_{-1};
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  // Connection threads run detached; stop() blocks until they all drain.
  std::mutex conn_mu_;
  std::condition_variable conn_cv_;
  int active_connections_ = 0;
};

}  // namespace itws::net
