#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vauth/config.hpp"
#include "vauth/decision.hpp"
#include "vauth/pipeline.hpp"
#include "vauth/wav.hpp"

// Length-prefixed session protocol. A frame is a u32 big-endian length
// followed by that many bytes: one JSON header line terminated by '\n', then
// the payload. Client frames carry samples:
//   {"session_id", "channel": "acc"|"mic", "rate_hz", "encoding": "pcm16le"|"f32le",
//    "final": bool, optional "include_audio": bool, optional "keep_alive": bool}
// A channel may be split over several frames; it is complete once a frame
// with final = true arrives. The server answers with
//   {"type": "report", "session_id"} + MatchReport JSON payload, or
//   {"type": "error", "code", "message"} with an empty payload.
namespace vauth {

inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

struct Frame {
  std::string header;  // JSON text, no trailing newline
  std::vector<std::uint8_t> payload;
};

/// Serialized frame bytes, length prefix included.
std::vector<std::uint8_t> encode_frame(const Frame& frame);

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port"; throws InvalidConfig on a malformed address.
Endpoint parse_endpoint(const std::string& text);

struct GatewayOptions {
  Endpoint listen;
  PipelineConfig config;
  double session_timeout_sec = 10.0;
  std::size_t max_frame_bytes = kMaxFrameBytes;
  std::size_t max_connections = 64;
};

/// Threaded TCP server, one thread per connection. The model is shared
/// read-only between sessions.
class GatewayServer {
 public:
  GatewayServer(ClassifierModel model, GatewayOptions options);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and starts accepting. Throws ConnectError if the address is unusable.
  void start();
  /// Port actually bound (useful with port 0).
  std::uint16_t port() const { return port_; }
  /// Stops accepting, closes open connections and joins all threads.
  void stop();
  std::size_t sessions_served() const { return served_.load(); }

 private:
  void accept_loop();
  void handle(int fd);
  void reap_finished();

  ClassifierModel model_;
  GatewayOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> served_{0};
  std::atomic<std::size_t> active_{0};
  std::thread acceptor_;
  struct Worker {
    std::thread thread;
    std::atomic<bool> done{false};
  };
  std::mutex mu_;
  std::list<Worker> workers_;
  std::vector<int> open_fds_;
};

/// Loads the model, starts a server and blocks until SIGINT or SIGTERM.
void serve(const std::string& listen_addr, const std::filesystem::path& model_path, const PipelineConfig& config);

struct ClientOptions {
  bool include_audio = false;
  SampleEncoding encoding = SampleEncoding::F32Le;
  double timeout_sec = 30.0;
  std::string session_id = "session";
};

/// Runs one session against a server. Throws ConnectError when the server
/// cannot be reached or the connection drops, ProtocolError when the server
/// answers with an error frame or an unparsable reply.
MatchReport client_match(const std::string& addr, const SampledSignal& acc, const SampledSignal& mic,
                         const ClientOptions& options = {});

/// Low-level client pieces, exposed for protocol tests.
class GatewayConnection {
 public:
  GatewayConnection(const std::string& addr, double timeout_sec);
  ~GatewayConnection();
  GatewayConnection(const GatewayConnection&) = delete;
  GatewayConnection& operator=(const GatewayConnection&) = delete;

  void send_raw(const std::vector<std::uint8_t>& bytes);
  void send(const Frame& frame) { send_raw(encode_frame(frame)); }
  /// Next frame from the server, or nullopt if it closed the connection.
  std::optional<Frame> receive();

 private:
  int fd_ = -1;
  double timeout_sec_;
};

}  // namespace vauth
