#include "vauth/gateway.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vauth/errors.hpp"
#include "vauth/report_json.hpp"

namespace vauth {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

enum class IoStatus { Ok, Closed, Timeout, Failed };

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1 << 30));
}

IoStatus read_exact(int fd, std::uint8_t* out, std::size_t n, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < n) {
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0) {
      if (errno == EINTR) continue;
      return IoStatus::Failed;
    }
    if (ready == 0) return IoStatus::Timeout;
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) return IoStatus::Closed;
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return IoStatus::Failed;
    }
    got += static_cast<std::size_t>(r);
  }
  return IoStatus::Ok;
}

bool write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

// Splits a frame body at the first newline. False if there is none.
bool split_frame(std::vector<std::uint8_t>& body, Frame& out) {
  const auto nl = std::find(body.begin(), body.end(), std::uint8_t{'\n'});
  if (nl == body.end()) return false;
  out.header.assign(body.begin(), nl);
  out.payload.assign(nl + 1, body.end());
  return true;
}

Frame error_frame(const std::string& code, const std::string& message) {
  return {json{{"type", "error"}, {"code", code}, {"message", message}}.dump(), {}};
}

int connect_to(const std::string& addr) {
  const Endpoint ep = parse_endpoint(addr);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw ConnectError("cannot resolve " + addr + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw ConnectError("cannot connect to " + addr + ": " + last_error);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

struct ChannelBuffer {
  std::vector<double> samples;
  double rate_hz = 0.0;
  bool started = false;
  bool final = false;
};

// Raised inside a session to send an error frame and drop the connection.
struct SessionAbort {
  std::string code;
  std::string message;
};

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  const std::size_t len = frame.header.size() + 1 + frame.payload.size();
  if (len > 0xffffffffu) throw ProtocolError("frame exceeds the 32-bit length field");
  std::vector<std::uint8_t> out;
  out.reserve(4 + len);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>((len >> shift) & 0xff));
  out.insert(out.end(), frame.header.begin(), frame.header.end());
  out.push_back('\n');
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw InvalidConfig("address '" + text + "' is not host:port");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  if (ep.host.size() > 2 && ep.host.front() == '[' && ep.host.back() == ']') ep.host = ep.host.substr(1, ep.host.size() - 2);
  const std::string port = text.substr(colon + 1);
  if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }) || port.size() > 5) {
    throw InvalidConfig("bad port in '" + text + "'");
  }
  const int value = std::stoi(port);
  if (value > 65535) throw InvalidConfig("bad port in '" + text + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

GatewayServer::GatewayServer(ClassifierModel model, GatewayOptions options)
    : model_(std::move(model)), options_(std::move(options)) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  if (running_) return;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(options_.listen.port);
  if (const int rc = ::getaddrinfo(options_.listen.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw ConnectError("cannot resolve " + options_.listen.host + ": " + ::gai_strerror(rc));
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw ConnectError(std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    const std::string err = std::strerror(errno);
    ::freeaddrinfo(res);
    ::close(fd);
    throw ConnectError("cannot listen on " + options_.listen.host + ":" + port + ": " + err);
  }
  ::freeaddrinfo(res);
  sockaddr_storage bound{};
  socklen_t blen = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &blen);
  port_ = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                      : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("gateway listening on {}:{}", options_.listen.host, port_);
}

void GatewayServer::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& w : workers_) {
    if (w.thread.joinable()) w.thread.join();
  }
  workers_.clear();
}

void GatewayServer::reap_finished() {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void GatewayServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    reap_finished();
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    if (active_ >= options_.max_connections) {
      write_all(fd, encode_frame(error_frame("SERVER_BUSY", "too many concurrent sessions")));
      ::close(fd);
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    ++active_;
    std::lock_guard lock(mu_);
    open_fds_.push_back(fd);
    auto& w = workers_.emplace_back();
    w.thread = std::thread([this, fd, &w] {
      handle(fd);
      {
        std::lock_guard inner(mu_);
        open_fds_.erase(std::find(open_fds_.begin(), open_fds_.end(), fd));
      }
      ::close(fd);
      --active_;
      w.done = true;
    });
  }
}

void GatewayServer::handle(int fd) {
  const auto idle = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options_.session_timeout_sec));
  bool keep_alive = true;
  while (keep_alive && running_) {
    ChannelBuffer acc, mic;
    std::string session_id;
    bool include_audio = false;
    bool any_frame = false;
    try {
      while (!(acc.final && mic.final)) {
        const auto deadline = Clock::now() + idle;
        std::uint8_t prefix[4];
        const IoStatus st = read_exact(fd, prefix, 4, deadline);
        if (st == IoStatus::Timeout) {
          if (!any_frame) return;
          throw SessionAbort{"SESSION_TIMEOUT", "no frame within the session timeout"};
        }
        if (st != IoStatus::Ok) return;
        const std::size_t len = be32(prefix);
        if (len > options_.max_frame_bytes) {
          throw SessionAbort{"FRAME_TOO_LARGE", "frame of " + std::to_string(len) + " bytes exceeds the limit"};
        }
        std::vector<std::uint8_t> body(len);
        const IoStatus bst = read_exact(fd, body.data(), len, deadline);
        if (bst == IoStatus::Timeout) throw SessionAbort{"SESSION_TIMEOUT", "frame body did not arrive in time"};
        if (bst != IoStatus::Ok) return;
        any_frame = true;

        Frame frame;
        if (!split_frame(body, frame)) throw SessionAbort{"BAD_FRAME", "frame has no header line"};
        json h;
        std::string channel;
        double rate = 0.0;
        SampleEncoding enc{};
        bool final = false;
        std::string sid;
        try {
          h = json::parse(frame.header);
          sid = h.at("session_id").get<std::string>();
          channel = h.at("channel").get<std::string>();
          rate = h.at("rate_hz").get<double>();
          enc = parse_sample_encoding(h.at("encoding").get<std::string>());
          final = h.at("final").get<bool>();
          if (h.contains("include_audio")) include_audio = h.at("include_audio").get<bool>();
          if (h.contains("keep_alive")) keep_alive = h.at("keep_alive").get<bool>();
        } catch (const json::exception& e) {
          throw SessionAbort{"BAD_FRAME", std::string("bad header: ") + e.what()};
        } catch (const ProtocolError& e) {
          throw SessionAbort{"BAD_FRAME", e.what()};
        }
        if (session_id.empty()) session_id = sid;
        if (sid != session_id) throw SessionAbort{"BAD_FRAME", "session id changed mid-session"};
        if (channel != "acc" && channel != "mic") throw SessionAbort{"BAD_FRAME", "unknown channel '" + channel + "'"};
        if (!(rate > 0.0)) throw SessionAbort{"BAD_FRAME", "rate must be positive"};
        auto& buf = channel == "acc" ? acc : mic;
        if (buf.final) throw SessionAbort{"BAD_FRAME", channel + " channel already complete"};
        if (buf.started && buf.rate_hz != rate) throw SessionAbort{"BAD_FRAME", "rate changed within a channel"};
        std::vector<double> samples;
        try {
          samples = decode_samples(frame.payload, enc);
        } catch (const ProtocolError& e) {
          throw SessionAbort{"BAD_FRAME", e.what()};
        }
        buf.samples.insert(buf.samples.end(), samples.begin(), samples.end());
        buf.rate_hz = rate;
        buf.started = true;
        buf.final = final;
      }

      Frame reply;
      try {
        const auto report = match(SampledSignal(std::move(acc.samples), acc.rate_hz),
                                  SampledSignal(std::move(mic.samples), mic.rate_hz), model_, options_.config);
        reply.header = json{{"type", "report"}, {"session_id", session_id}}.dump();
        const auto text = report_to_json(report, include_audio);
        reply.payload.assign(text.begin(), text.end());
      } catch (const Error& e) {
        reply = error_frame("INPUT_ERROR", e.what());
      }
      ++served_;
      if (!write_all(fd, encode_frame(reply))) return;
    } catch (const SessionAbort& abort) {
      spdlog::debug("session {} aborted: {} ({})", session_id, abort.code, abort.message);
      write_all(fd, encode_frame(error_frame(abort.code, abort.message)));
      return;
    }
  }
}

void serve(const std::string& listen_addr, const std::filesystem::path& model_path, const PipelineConfig& config) {
  GatewayOptions options;
  options.listen = parse_endpoint(listen_addr);
  options.config = config;
  auto model = load_model(model_path);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // worker threads inherit the mask

  GatewayServer server(std::move(model), options);
  server.start();
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  server.stop();
}

GatewayConnection::GatewayConnection(const std::string& addr, double timeout_sec)
    : fd_(connect_to(addr)), timeout_sec_(timeout_sec) {}

GatewayConnection::~GatewayConnection() {
  if (fd_ >= 0) ::close(fd_);
}

void GatewayConnection::send_raw(const std::vector<std::uint8_t>& bytes) {
  if (!write_all(fd_, bytes)) throw ConnectError(std::string("send failed: ") + std::strerror(errno));
}

std::optional<Frame> GatewayConnection::receive() {
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_sec_));
  std::uint8_t prefix[4];
  switch (read_exact(fd_, prefix, 4, deadline)) {
    case IoStatus::Ok:
      break;
    case IoStatus::Closed:
      return std::nullopt;
    case IoStatus::Timeout:
      throw ConnectError("timed out waiting for the server");
    case IoStatus::Failed:
      throw ConnectError(std::string("receive failed: ") + std::strerror(errno));
  }
  const std::size_t len = be32(prefix);
  if (len > kMaxFrameBytes) throw ProtocolError("server frame of " + std::to_string(len) + " bytes");
  std::vector<std::uint8_t> body(len);
  const IoStatus st = read_exact(fd_, body.data(), len, deadline);
  if (st == IoStatus::Timeout) throw ConnectError("timed out reading a server frame");
  if (st != IoStatus::Ok) throw ConnectError("connection dropped inside a frame");
  Frame frame;
  if (!split_frame(body, frame)) throw ProtocolError("server frame has no header line");
  return frame;
}

MatchReport client_match(const std::string& addr, const SampledSignal& acc, const SampledSignal& mic,
                         const ClientOptions& options) {
  GatewayConnection conn(addr, options.timeout_sec);
  const std::string enc(to_string(options.encoding));
  for (const auto& [name, signal] : {std::pair<const char*, const SampledSignal*>{"acc", &acc}, {"mic", &mic}}) {
    Frame f;
    f.header = json{{"session_id", options.session_id},
                    {"channel", name},
                    {"rate_hz", signal->rate_hz()},
                    {"encoding", enc},
                    {"final", true},
                    {"include_audio", options.include_audio},
                    {"keep_alive", false}}
                   .dump();
    f.payload = encode_samples(signal->samples(), options.encoding);
    conn.send(f);
  }
  const auto reply = conn.receive();
  if (!reply) throw ConnectError("server closed the connection without a reply");
  json h;
  try {
    h = json::parse(reply->header);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unparsable reply header: ") + e.what());
  }
  const std::string type = h.value("type", "");
  if (type == "error") {
    throw ProtocolError(h.value("code", std::string("UNKNOWN")) + ": " + h.value("message", std::string()));
  }
  if (type != "report") throw ProtocolError("unexpected reply type '" + type + "'");
  return report_from_json(std::string(reply->payload.begin(), reply->payload.end()));
}

}  // namespace vauth
