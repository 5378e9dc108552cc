#include "clickstorm/bridge.hpp"

#include <netdb.h>
#include <openssl/evp.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <sstream>

#include "json.hpp"

namespace clickstorm {

using nlohmann::json;

namespace wire {

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) {
    throw BridgeError("bad_payload", "base64 length is not a multiple of 4");
  }
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) {
    throw BridgeError("bad_payload", "invalid base64");
  }
  // EVP_DecodeBlock keeps the zero bytes that stand in for '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
}

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) {
    bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  }
  return std::bit_cast<float>(bits);
}

std::vector<std::uint8_t> decode_sized(const std::string& payload, std::size_t expected, const char* what) {
  auto bytes = base64_decode(payload);
  if (bytes.size() != expected) {
    throw BridgeError("bad_payload", std::string(what) + " payload has " + std::to_string(bytes.size()) +
                                         " bytes, expected " + std::to_string(expected));
  }
  return bytes;
}

}  // namespace

std::string encode_f32_map(const ProbMap& map) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(map.size() * 4);
  for (double v : map.data()) {
    append_f32_le(bytes, static_cast<float>(v));
  }
  return base64_encode(bytes);
}

ProbMap decode_f32_map(const std::string& payload, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const auto bytes = decode_sized(payload, n * 4, "map");
  ProbMap out(width, height);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = read_f32_le(&bytes[4 * i]);
  }
  return out;
}

std::string encode_u8_mask(const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    bytes[i] = mask[i] ? 1 : 0;
  }
  return base64_encode(bytes);
}

BinaryMask decode_u8_mask(const std::string& payload, int width, int height) {
  auto bytes = decode_sized(payload, static_cast<std::size_t>(width) * height, "mask");
  return BinaryMask(width, height, std::move(bytes));
}

std::string encode_image(const Image& image) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.rgb().size() * 4);
  for (double v : image.rgb()) {
    append_f32_le(bytes, static_cast<float>(v));
  }
  return base64_encode(bytes);
}

Image decode_image(const std::string& payload, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height * 3;
  const auto bytes = decode_sized(payload, n * 4, "image");
  std::vector<double> rgb(n);
  for (std::size_t i = 0; i < n; ++i) {
    rgb[i] = read_f32_le(&bytes[4 * i]);
  }
  return Image(width, height, std::move(rgb));
}

}  // namespace wire

FdLineChannel::FdLineChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

FdLineChannel::~FdLineChannel() { close_fds(); }

void FdLineChannel::close_fds() {
  if (read_fd_ >= 0) {
    ::close(read_fd_);
  }
  if (write_fd_ >= 0 && write_fd_ != read_fd_) {
    ::close(write_fd_);
  }
  read_fd_ = -1;
  write_fd_ = -1;
}

void FdLineChannel::send_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    // MSG_NOSIGNAL turns a vanished peer into EPIPE instead of a process-killing SIGPIPE.
    ssize_t n = ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) {
      n = ::write(write_fd_, data.data() + off, data.size() - off);
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BridgeError("transport", std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string FdLineChannel::receive_line() {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BridgeError("transport", std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      throw BridgeError("transport", "connection closed by peer");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw BridgeError("transport", "cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw BridgeError("transport", "cannot connect to " + host + ":" + service);
  }
  return std::make_unique<FdLineChannel>(fd, fd);
}

namespace {

class ProcessLineChannel final : public FdLineChannel {
 public:
  ProcessLineChannel(int read_fd, int write_fd, pid_t pid) : FdLineChannel(read_fd, write_fd), pid_(pid) {}
  ~ProcessLineChannel() override {
    close_fds();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_process(const std::vector<std::string>& argv) {
  if (argv.empty()) {
    throw BridgeError("transport", "empty command");
  }
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    throw BridgeError("transport", std::string("pipe failed: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    throw BridgeError("transport", std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> args;
    for (const auto& a : argv) {
      args.push_back(const_cast<char*>(a.c_str()));
    }
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  // A dead server surfaces as a write error instead of SIGPIPE.
  ::signal(SIGPIPE, SIG_IGN);
  return std::make_unique<ProcessLineChannel>(from_child[0], to_child[1], pid);
}

std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint) {
  const std::string tcp = "tcp://";
  const std::string exec = "exec:";
  if (endpoint.rfind(tcp, 0) == 0) {
    const std::string rest = endpoint.substr(tcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw BridgeError("config", "endpoint '" + endpoint + "' lacks a port");
    }
    return connect_tcp(rest.substr(0, colon), std::stoi(rest.substr(colon + 1)));
  }
  if (endpoint.rfind(exec, 0) == 0) {
    std::istringstream in(endpoint.substr(exec.size()));
    std::vector<std::string> argv;
    for (std::string tok; in >> tok;) {
      argv.push_back(tok);
    }
    return spawn_process(argv);
  }
  throw BridgeError("config", "unsupported endpoint '" + endpoint + "'");
}

namespace {

json clicks_json(std::span<const Click> clicks) {
  json arr = json::array();
  for (const auto& c : clicks) {
    arr.push_back({{"x", c.x}, {"y", c.y}, {"sign", c.polarity == Polarity::positive ? 1 : -1}});
  }
  return arr;
}

}  // namespace

BridgeSegmenter::BridgeSegmenter(std::unique_ptr<LineChannel> channel, const Image& image)
    : channel_(std::move(channel)) {
  if (!channel_) {
    throw BridgeError("transport", "null channel");
  }
  ensure_session(image);
}

std::string BridgeSegmenter::roundtrip(const std::string& frame, const char* expected_type) {
  channel_->send_line(frame);
  std::string response = channel_->receive_line();
  json parsed;
  try {
    parsed = json::parse(response);
  } catch (const json::parse_error& e) {
    throw BridgeError("protocol", std::string("malformed response frame: ") + e.what());
  }
  const std::string type = parsed.value("type", "");
  if (type == "error") {
    throw BridgeError(parsed.value("code", "unknown"), parsed.value("message", ""));
  }
  if (type != expected_type) {
    throw BridgeError("protocol", "expected '" + std::string(expected_type) + "' frame, got '" + type + "'");
  }
  return response;
}

void BridgeSegmenter::ensure_session(const Image& image) {
  if (session_image_ == image) {
    return;
  }
  const json init = {{"type", "init"},
                     {"height", image.height()},
                     {"width", image.width()},
                     {"image", wire::encode_image(image)}};
  const json ready = json::parse(roundtrip(init.dump(), "ready"));
  const std::string mode = ready.value("input_mode", "disk_maps");
  if (mode != "disk_maps" && mode != "raw_coordinates") {
    throw BridgeError("protocol", "unknown input_mode '" + mode + "'");
  }
  capabilities_.input_mode = mode == "disk_maps" ? InputMode::disk_maps : InputMode::raw_coordinates;
  capabilities_.supports_gradients = ready.value("supports_gradients", false);
  if (ready.contains("native_resolution") && ready["native_resolution"].is_number_integer()) {
    capabilities_.native_resolution = ready["native_resolution"].get<int>();
  }
  session_image_ = image;
}

ProbMap BridgeSegmenter::predict(const SegmenterRequest& request) {
  ensure_session(request.image);
  json frame = {{"type", "predict"}, {"clicks", clicks_json(request.clicks)}};
  frame["prev_mask"] = request.prev_mask ? json(wire::encode_f32_map(*request.prev_mask)) : json(nullptr);
  const json parsed = json::parse(roundtrip(frame.dump(), "prediction"));
  if (!parsed.contains("map") || !parsed["map"].is_string()) {
    throw BridgeError("protocol", "prediction frame lacks a map");
  }
  ProbMap map = wire::decode_f32_map(parsed["map"].get<std::string>(), request.image.width(), request.image.height());
  for (double v : map.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw BridgeError("bad_payload", "prediction value outside [0, 1]");
    }
  }
  return map;
}

Vec2 BridgeSegmenter::dice_gradient(const SegmenterRequest& request, const BinaryMask& gt, Direction direction,
                                    std::size_t active) {
  ensure_session(request.image);
  const json frame = {{"type", "grad"},
                      {"clicks", clicks_json(request.clicks)},
                      {"gt", wire::encode_u8_mask(gt)},
                      {"direction", to_string(direction)},
                      {"active", active}};
  std::string response;
  try {
    response = roundtrip(frame.dump(), "gradient");
  } catch (const BridgeError& e) {
    throw BridgeError(e.code(), std::string(e.what()) + " (click " + std::to_string(active) + ")");
  }
  const json parsed = json::parse(response);
  const auto& dxy = parsed.at("dxy");
  if (!dxy.is_array() || dxy.size() != 2 || !dxy[0].is_number() || !dxy[1].is_number()) {
    throw BridgeError("protocol", "gradient frame needs dxy:[gx,gy]");
  }
  const Vec2 g{dxy[0].get<double>(), dxy[1].get<double>()};
  if (!std::isfinite(g.x) || !std::isfinite(g.y)) {
    throw BridgeError("nonfinite_gradient", "click " + std::to_string(active));
  }
  return g;
}

}  // namespace clickstorm
