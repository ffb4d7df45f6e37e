#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <thread>

#include "support.hpp"
#include "vauth/errors.hpp"
#include "vauth/gateway.hpp"
#include "vauth/report_json.hpp"
#include "vauth/wav.hpp"

using namespace vauth;
using json = nlohmann::json;

namespace {

struct Server {
  explicit Server(GatewayOptions opts = {}) : server(testutil::bank_model(), opts) { server.start(); }
  ~Server() { server.stop(); }
  std::string addr() const { return "127.0.0.1:" + std::to_string(server.port()); }
  GatewayServer server;
};

const std::vector<UtterancePair>& pairs() {
  static const auto bank = [] {
    auto b = synth_phoneme_bank(2);
    for (auto& p : b) {
      p.acc = quantize(p.acc, SampleEncoding::F32Le);
      p.mic = quantize(p.mic, SampleEncoding::F32Le);
    }
    return b;
  }();
  return bank;
}

Frame samples_frame(const std::string& sid, const std::string& channel, const SampledSignal& s, bool final,
                    bool keep_alive = false, std::size_t begin = 0, std::size_t end = SIZE_MAX) {
  Frame f;
  f.header = json{{"session_id", sid}, {"channel", channel}, {"rate_hz", s.rate_hz()}, {"encoding", "f32le"},
                  {"final", final}, {"keep_alive", keep_alive}}
                 .dump();
  end = std::min(end, s.size());
  f.payload = encode_samples(s.samples().subspan(begin, end - begin), SampleEncoding::F32Le);
  return f;
}

json header_of(const Frame& f) { return json::parse(f.header); }

MatchReport report_of(const Frame& f) {
  REQUIRE(header_of(f)["type"] == "report");
  return report_from_json(std::string(f.payload.begin(), f.payload.end()));
}

std::string error_code(GatewayConnection& conn) {
  const auto reply = conn.receive();
  REQUIRE(reply.has_value());
  const auto h = header_of(*reply);
  REQUIRE(h["type"] == "error");
  return h["code"].get<std::string>();
}

MatchReport direct(const UtterancePair& p) { return match(p.acc, p.mic, testutil::bank_model(), PipelineConfig{}); }

}  // namespace

TEST_CASE("frame encoding", "[gateway]") {
  const auto bytes = encode_frame(Frame{"{\"a\":1}", {1, 2, 3}});
  const std::vector<std::uint8_t> expected = {0, 0, 0, 11, '{', '"', 'a', '"', ':', '1', '}', '\n', 1, 2, 3};
  CHECK(bytes == expected);
}

TEST_CASE("endpoint parsing", "[gateway]") {
  const auto e = parse_endpoint("localhost:8080");
  CHECK(e.host == "localhost");
  CHECK(e.port == 8080);
  CHECK_THROWS_AS(parse_endpoint("localhost"), InvalidConfig);
  CHECK_THROWS_AS(parse_endpoint("localhost:port"), InvalidConfig);
  CHECK_THROWS_AS(parse_endpoint("localhost:70000"), InvalidConfig);
  CHECK_THROWS_AS(parse_endpoint(":80"), InvalidConfig);
}

TEST_CASE("unreachable server", "[gateway]") {
  std::string addr;
  {
    Server s;
    addr = s.addr();
  }
  CHECK_THROWS_AS(client_match(addr, pairs()[0].acc, pairs()[0].mic), ConnectError);
}

TEST_CASE("gateway reports equal direct calls", "[gateway]") {
  Server s;
  for (std::size_t i : {0u, 1u, 9u}) {
    const auto& p = pairs()[i];
    const auto want = direct(p);
    ClientOptions opts;
    opts.include_audio = true;
    const auto got = client_match(s.addr(), p.acc, p.mic, opts);
    CHECK(same_outcome(got, want));
    CHECK(got.cleaned_mic == quantize(want.cleaned_mic, SampleEncoding::F32Le));
  }
  // Cross pair
  const auto got = client_match(s.addr(), pairs()[0].acc, pairs()[5].mic);
  CHECK(same_outcome(got, match(pairs()[0].acc, pairs()[5].mic, testutil::bank_model(), PipelineConfig{})));
  CHECK(s.server.sessions_served() == 4);
}

TEST_CASE("channels may arrive in pieces", "[gateway]") {
  Server s;
  const auto& p = pairs()[3];
  GatewayConnection conn(s.addr(), 30.0);
  const std::size_t half = p.mic.size() / 2;
  conn.send(samples_frame("split", "mic", p.mic, false, false, 0, half));
  conn.send(samples_frame("split", "acc", p.acc, true));
  conn.send(samples_frame("split", "mic", p.mic, true, false, half));
  const auto reply = conn.receive();
  REQUIRE(reply.has_value());
  CHECK(header_of(*reply)["session_id"] == "split");
  CHECK(same_outcome(report_of(*reply), direct(p)));
}

TEST_CASE("interleaved sessions stay isolated", "[gateway]") {
  Server s;
  const auto& a = pairs()[1];
  const auto& b = pairs()[2];
  GatewayConnection ca(s.addr(), 30.0), cb(s.addr(), 30.0);
  ca.send(samples_frame("a", "acc", a.acc, true));
  cb.send(samples_frame("b", "acc", b.acc, true));
  cb.send(samples_frame("b", "mic", b.mic, true));
  ca.send(samples_frame("a", "mic", a.mic, true));
  const auto ra = ca.receive();
  const auto rb = cb.receive();
  REQUIRE(ra.has_value());
  REQUIRE(rb.has_value());
  CHECK(same_outcome(report_of(*ra), direct(a)));
  CHECK(same_outcome(report_of(*rb), direct(b)));
}

TEST_CASE("keep-alive runs several sessions on one connection", "[gateway]") {
  Server s;
  GatewayConnection conn(s.addr(), 30.0);
  for (std::size_t i : {4u, 6u}) {
    const auto& p = pairs()[i];
    conn.send(samples_frame("k" + std::to_string(i), "acc", p.acc, true, true));
    conn.send(samples_frame("k" + std::to_string(i), "mic", p.mic, true, true));
    const auto reply = conn.receive();
    REQUIRE(reply.has_value());
    CHECK(same_outcome(report_of(*reply), direct(p)));
  }
  CHECK(s.server.sessions_served() == 2);
}

TEST_CASE("malformed frames", "[gateway]") {
  Server s;
  SECTION("payload not a whole number of floats") {
    GatewayConnection conn(s.addr(), 10.0);
    auto f = samples_frame("x", "acc", pairs()[0].acc, true);
    f.payload.resize(6);
    conn.send(f);
    CHECK(error_code(conn) == "BAD_FRAME");
  }
  SECTION("no header line") {
    GatewayConnection conn(s.addr(), 10.0);
    conn.send_raw({0, 0, 0, 3, 'a', 'b', 'c'});
    CHECK(error_code(conn) == "BAD_FRAME");
  }
  SECTION("header missing fields") {
    GatewayConnection conn(s.addr(), 10.0);
    conn.send(Frame{R"({"session_id":"x","channel":"acc"})", {}});
    CHECK(error_code(conn) == "BAD_FRAME");
  }
  SECTION("unknown channel") {
    GatewayConnection conn(s.addr(), 10.0);
    auto f = samples_frame("x", "acc", pairs()[0].acc, true);
    auto h = header_of(f);
    h["channel"] = "gyro";
    f.header = h.dump();
    conn.send(f);
    CHECK(error_code(conn) == "BAD_FRAME");
  }
  SECTION("input the pipeline refuses") {
    GatewayConnection conn(s.addr(), 10.0);
    const SampledSignal tiny(std::vector<double>(100, 0.1), 16000.0);
    conn.send(samples_frame("x", "acc", tiny, true));
    conn.send(samples_frame("x", "mic", tiny, true));
    CHECK(error_code(conn) == "INPUT_ERROR");
    CHECK_THROWS_AS(client_match(s.addr(), tiny, tiny), ProtocolError);
  }
}

TEST_CASE("oversized frames are refused", "[gateway]") {
  GatewayOptions opts;
  opts.max_frame_bytes = 1024;
  Server s(opts);
  GatewayConnection conn(s.addr(), 10.0);
  conn.send_raw({0, 0, 8, 0});
  CHECK(error_code(conn) == "FRAME_TOO_LARGE");
}

TEST_CASE("idle sessions time out", "[gateway]") {
  GatewayOptions opts;
  opts.session_timeout_sec = 0.3;
  Server s(opts);
  GatewayConnection conn(s.addr(), 10.0);
  conn.send(samples_frame("t", "acc", pairs()[0].acc, true));
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(error_code(conn) == "SESSION_TIMEOUT");
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
  CHECK_FALSE(conn.receive().has_value());
}

TEST_CASE("concurrent clients", "[gateway]") {
  Server s;
  std::vector<std::thread> threads;
  std::vector<int> ok(8, 0);
  for (std::size_t t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      const auto& p = pairs()[t];
      ClientOptions opts;
      opts.session_id = "c" + std::to_string(t);
      ok[t] = same_outcome(client_match(s.addr(), p.acc, p.mic, opts), direct(p)) ? 1 : 0;
    });
  }
  for (auto& th : threads) th.join();
  for (int v : ok) CHECK(v == 1);
}
