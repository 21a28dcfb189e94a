#include "itws/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>

namespace itws::net {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::chrono::milliseconds kPollSlice{5};
constexpr size_t kMaxHeaderBytes = 64 * 1024;
constexpr size_t kMaxBodyBytes = 64ull * 1024 * 1024;

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

void set_nonblocking(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

struct FdGuard {
  int fd = -1;
  ~FdGuard() {
    if (fd >= 0) ::close(fd);
  }
  int release() {
    int f = fd;
    fd = -1;
    return f;
  }
};

// Waits for the fd to become readable/writable, slicing the wait so the
// cancel token stays responsive. Returns 0 on ready, -1 on timeout/cancel.
int wait_fd(int fd, short events, Clock::time_point deadline, const CancelToken& cancel,
            bool* was_cancelled) {
  while (true) {
    if (cancel.cancelled()) {
      if (was_cancelled) *was_cancelled = true;
      return -1;
    }
    auto now = Clock::now();
    if (now >= deadline) return -1;
    auto remain = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    int slice = static_cast<int>(std::min<int64_t>(remain.count(), kPollSlice.count()));
    pollfd pfd{fd, events, 0};
    int rc = ::poll(&pfd, 1, std::max(slice, 1));
    if (rc > 0) return 0;
    if (rc < 0 && errno != EINTR) return -1;
  }
}

// Parses "HTTP/1.1 200 OK" and header lines from `head`.
bool parse_response_head(std::string_view head, int& status, Headers& headers) {
  size_t eol = head.find("\r\n");
  if (eol == std::string_view::npos) return false;
  std::string_view status_line = head.substr(0, eol);
  size_t sp = status_line.find(' ');
  if (sp == std::string_view::npos) return false;
  std::string_view code = status_line.substr(sp + 1, 3);
  auto [p, ec] = std::from_chars(code.data(), code.data() + code.size(), status);
  if (ec != std::errc()) return false;
  size_t pos = eol + 2;
  while (pos < head.size()) {
    size_t le = head.find("\r\n", pos);
    if (le == std::string_view::npos) le = head.size();
    std::string_view line = head.substr(pos, le - pos);
    size_t colon = line.find(':');
    if (colon != std::string_view::npos) {
      std::string_view name = line.substr(0, colon);
      std::string_view value = line.substr(colon + 1);
      while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
        value.remove_prefix(1);
      headers.emplace_back(std::string(name), std::string(value));
    }
    pos = le + 2;
  }
  return true;
}

}  // namespace

const char* to_string(TransportStatus s) {
  switch (s) {
    case TransportStatus::Ok: return "ok";
    case TransportStatus::Timeout: return "timeout";
    case TransportStatus::ConnectError: return "connect-error";
    case TransportStatus::ResetOrEof: return "reset-or-eof";
    case TransportStatus::Cancelled: return "cancelled";
  }
  return "?";
}

std::string Endpoint::url() const { return "http://" + host + ":" + std::to_string(port); }

Endpoint Endpoint::parse(std::string_view url) {
  std::string_view rest = url;
  constexpr std::string_view kScheme = "http://";
  if (rest.substr(0, kScheme.size()) == kScheme) rest.remove_prefix(kScheme.size());
  size_t slash = rest.find('/');
  if (slash != std::string_view::npos) rest = rest.substr(0, slash);
  size_t colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon + 1 >= rest.size())
    throw Error(ErrorCode::InvalidParameter, "endpoint needs host:port: " + std::string(url));
  Endpoint ep;
  ep.host = std::string(rest.substr(0, colon));
  int port = 0;
  auto pv = rest.substr(colon + 1);
  auto [p, ec] = std::from_chars(pv.data(), pv.data() + pv.size(), port);
  if (ec != std::errc() || port <= 0 || port > 65535)
    throw Error(ErrorCode::InvalidParameter, "bad port in endpoint: " + std::string(url));
  ep.port = static_cast<uint16_t>(port);
  if (ep.host.empty())
    throw Error(ErrorCode::InvalidParameter, "empty host in endpoint: " + std::string(url));
  return ep;
}

const std::string* find_header(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers)
    if (iequals(k, name)) return &v;
  return nullptr;
}

HttpReply http_post(const Endpoint& ep, const std::string& path, std::string_view body,
                    const Headers& extra_headers, const RequestOptions& opts) {
  HttpReply reply;
  const auto deadline = Clock::now() + opts.timeout;
  bool cancelled = false;

  FdGuard sock{::socket(AF_INET, SOCK_STREAM, 0)};
  if (sock.fd < 0) return reply;
  set_nonblocking(sock.fd);
  set_nodelay(sock.fd);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    reply.transport = TransportStatus::ConnectError;
    return reply;
  }

  int rc = ::connect(sock.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc < 0 && errno != EINPROGRESS) {
    reply.transport = TransportStatus::ConnectError;
    return reply;
  }
  if (rc < 0) {
    if (wait_fd(sock.fd, POLLOUT, deadline, opts.cancel, &cancelled) != 0) {
      reply.transport = cancelled ? TransportStatus::Cancelled : TransportStatus::Timeout;
      return reply;
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      reply.transport = TransportStatus::ConnectError;
      return reply;
    }
  }

  std::string request;
  request.reserve(body.size() + 256);
  request += "POST " + (path.empty() ? std::string("/") : path) + " HTTP/1.1\r\n";
  request += "Host: " + ep.host + ":" + std::to_string(ep.port) + "\r\n";
  request += "Content-Type: application/soap+xml; charset=utf-8\r\n";
  request += "Content-Length: " + std::to_string(body.size()) + "\r\n";
  request += "Connection: close\r\n";
  for (const auto& [k, v] : extra_headers) request += k + ": " + v + "\r\n";
  request += "\r\n";
  request.append(body);

  size_t sent = 0;
  while (sent < request.size()) {
    ssize_t n = ::send(sock.fd, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      if (wait_fd(sock.fd, POLLOUT, deadline, opts.cancel, &cancelled) != 0) {
        reply.transport = cancelled ? TransportStatus::Cancelled : TransportStatus::Timeout;
        return reply;
      }
      continue;
    }
    reply.transport = TransportStatus::ResetOrEof;
    return reply;
  }

  // Response time runs from here: the final request byte has been handed off.
  const auto sent_at = Clock::now();

  std::string data;
  char buf[16 * 1024];
  bool first_byte_seen = false;
  Clock::time_point first_byte_at;
  size_t header_end = std::string::npos;
  size_t content_length = std::string::npos;
  int status = 0;
  Headers headers;

  while (true) {
    ssize_t n = ::recv(sock.fd, buf, sizeof(buf), 0);
    if (n > 0) {
      if (!first_byte_seen) {
        first_byte_at = Clock::now();
        first_byte_seen = true;
      }
      data.append(buf, static_cast<size_t>(n));
      if (header_end == std::string::npos) {
        header_end = data.find("\r\n\r\n");
        if (header_end != std::string::npos) {
          if (!parse_response_head(std::string_view(data).substr(0, header_end), status,
                                   headers)) {
            reply.transport = TransportStatus::ResetOrEof;
            return reply;
          }
          if (const std::string* cl = find_header(headers, "Content-Length")) {
            content_length = std::stoul(*cl);
          }
        }
      }
      if (header_end != std::string::npos && content_length != std::string::npos &&
          data.size() >= header_end + 4 + content_length) {
        break;  // full body received
      }
      continue;
    }
    if (n == 0) {
      // Orderly close: body is whatever arrived (close-delimited).
      if (header_end == std::string::npos) {
        reply.transport = TransportStatus::ResetOrEof;
        return reply;
      }
      break;
    }
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      if (wait_fd(sock.fd, POLLIN, deadline, opts.cancel, &cancelled) != 0) {
        reply.transport = cancelled ? TransportStatus::Cancelled : TransportStatus::Timeout;
        return reply;
      }
      continue;
    }
    if (errno == EINTR) continue;
    reply.transport = TransportStatus::ResetOrEof;
    return reply;
  }

  reply.transport = TransportStatus::Ok;
  reply.status = status;
  reply.headers = std::move(headers);
  reply.body = data.substr(header_end + 4);
  if (content_length != std::string::npos && reply.body.size() > content_length)
    reply.body.resize(content_length);
  reply.response_time =
      std::chrono::duration_cast<std::chrono::microseconds>(first_byte_at - sent_at);
  return reply;
}

// --- server ------------------------------------------------------------------

HttpServer::~HttpServer() { stop(); }

void HttpServer::set_handler(Handler handler) { handler_ = std::move(handler); }

int HttpServer::bind_listener() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::SpawnError, "socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw Error(ErrorCode::SpawnError, "bad listen address: " + host_);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw Error(ErrorCode::SpawnError,
                "bind failed on " + host_ + ":" + std::to_string(port_));
  }
  if (::listen(fd, 64) != 0) {
    ::close(fd);
    throw Error(ErrorCode::SpawnError, "listen failed");
  }
  set_nonblocking(fd);
  if (port_ == 0) {
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }
  return fd;
}

uint16_t HttpServer::start(const std::string& host, uint16_t port) {
  host_ = host;
  port_ = port;
  stopping_ = false;
  int fd = bind_listener();
  listen_fd_ = fd;
  accept_thread_ = std::thread([this, fd] { accept_loop(fd); });
  return port_;
}

void HttpServer::accept_loop(int fd) {
  (void)fd;
  while (!stopping_) {
    int cur = listen_fd_.load();
    if (cur < 0) {  // paused
      std::this_thread::sleep_for(kPollSlice);
      continue;
    }
    pollfd pfd{cur, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(kPollSlice.count()));
    if (rc <= 0) continue;
    int conn = ::accept(cur, nullptr, nullptr);
    if (conn < 0) continue;
    set_nodelay(conn);
    {
      std::lock_guard lock(conn_mu_);
      ++active_connections_;
    }
    std::thread([this, conn] {
      handle_connection(conn);
      std::lock_guard lock(conn_mu_);
      --active_connections_;
      conn_cv_.notify_all();
    }).detach();
  }
}

void HttpServer::handle_connection(int fd) {
  FdGuard guard{fd};
  std::string data;
  char buf[16 * 1024];
  size_t header_end = std::string::npos;
  size_t content_length = 0;

  // Read request head + body. The socket stays nonblocking with a poll guard.
  set_nonblocking(fd);
  auto deadline = Clock::now() + std::chrono::seconds(60);
  CancelToken no_cancel;
  while (true) {
    ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n > 0) {
      data.append(buf, static_cast<size_t>(n));
      if (header_end == std::string::npos) {
        header_end = data.find("\r\n\r\n");
        if (header_end == std::string::npos) {
          if (data.size() > kMaxHeaderBytes) return;
        } else {
          static constexpr std::string_view kCl = "content-length:";
          std::string lowered;
          lowered.reserve(header_end);
          for (size_t i = 0; i < header_end; ++i)
            lowered.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(data[i]))));
          size_t cl_pos = lowered.find(kCl);
          if (cl_pos != std::string::npos) {
            content_length = std::strtoul(data.c_str() + cl_pos + kCl.size(), nullptr, 10);
            if (content_length > kMaxBodyBytes) return;
          }
        }
      }
      if (header_end != std::string::npos &&
          data.size() >= header_end + 4 + content_length)
        break;
      continue;
    }
    if (n == 0) return;  // client went away before a full request arrived
    if (errno == EAGAIN || errno == EWOULDBLOCK) {
      if (wait_fd(fd, POLLIN, deadline, no_cancel, nullptr) != 0) return;
      continue;
    }
    if (errno == EINTR) continue;
    return;
  }

  HttpRequest req;
  {
    std::string_view head(data.data(), header_end);
    size_t eol = head.find("\r\n");
    std::string_view request_line = head.substr(0, eol == std::string_view::npos ? head.size() : eol);
    size_t sp1 = request_line.find(' ');
    size_t sp2 = request_line.find(' ', sp1 + 1);
    if (sp1 == std::string_view::npos) return;
    req.method = std::string(request_line.substr(0, sp1));
    req.path = sp2 == std::string_view::npos
                   ? std::string(request_line.substr(sp1 + 1))
                   : std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
    size_t pos = (eol == std::string_view::npos ? head.size() : eol + 2);
    while (pos < head.size()) {
      size_t le = head.find("\r\n", pos);
      if (le == std::string_view::npos) le = head.size();
      std::string_view line = head.substr(pos, le - pos);
      size_t colon = line.find(':');
      if (colon != std::string_view::npos) {
        std::string_view name = line.substr(0, colon);
        std::string_view value = line.substr(colon + 1);
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t'))
          value.remove_prefix(1);
        req.headers.emplace_back(std::string(name), std::string(value));
      }
      pos = le + 2;
    }
  }
  req.body = data.substr(header_end + 4, content_length);

  req.peer_closed = [fd]() {
    char b;
    ssize_t n = ::recv(fd, &b, 1, MSG_PEEK | MSG_DONTWAIT);
    if (n == 0) return true;                                  // orderly shutdown
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return false;
    if (n < 0) return true;                                   // reset etc.
    return false;                                             // pipelined data
  };
  req.wait_cancellable = [&req](std::chrono::milliseconds d) {
    auto end = Clock::now() + d;
    while (Clock::now() < end) {
      if (req.peer_closed()) return true;
      auto remain =
          std::chrono::duration_cast<std::chrono::milliseconds>(end - Clock::now());
      std::this_thread::sleep_for(std::min(remain, kPollSlice));
    }
    return false;
  };

  HttpResponse res;
  if (handler_) {
    res = handler_(req);
  } else {
    res.status = 404;
  }
  if (res.status == 0) return;  // handler consumed the connection (cancelled)

  const char* reason = res.status == 200   ? "OK"
                       : res.status == 400 ? "Bad Request"
                       : res.status == 404 ? "Not Found"
                       : res.status == 409 ? "Conflict"
                       : res.status == 500 ? "Internal Server Error"
                       : res.status == 502 ? "Bad Gateway"
                       : res.status == 503 ? "Service Unavailable"
                                           : "Status";
  std::string out = "HTTP/1.1 " + std::to_string(res.status) + " " + reason + "\r\n";
  bool have_type = false;
  for (const auto& [k, v] : res.headers) {
    if (iequals(k, "Content-Type")) have_type = true;
    out += k + ": " + v + "\r\n";
  }
  if (!have_type) out += "Content-Type: application/soap+xml; charset=utf-8\r\n";
  out += "Content-Length: " + std::to_string(res.body.size()) + "\r\n";
  out += "Connection: close\r\n\r\n";
  out += res.body;

  size_t sent = 0;
  while (sent < out.size()) {
    ssize_t n = ::send(fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      if (wait_fd(fd, POLLOUT, Clock::now() + std::chrono::seconds(30), no_cancel, nullptr) != 0)
        return;
      continue;
    }
    return;  // client gone
  }
}

void HttpServer::pause_accepting() {
  int fd = listen_fd_.exchange(-1);
  if (fd >= 0) ::close(fd);
}

void HttpServer::resume_accepting() {
  if (listen_fd_.load() >= 0 || stopping_) return;
  listen_fd_ = bind_listener();
}

void HttpServer::stop() {
  if (stopping_.exchange(true)) return;
  pause_accepting();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::unique_lock lock(conn_mu_);
  conn_cv_.wait(lock, [this] { return active_connections_ == 0; });
}

}  // namespace itws::net
