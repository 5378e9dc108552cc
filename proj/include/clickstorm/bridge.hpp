#pragma once

#include <memory>
#include <string>
#include <vector>

#include "clickstorm/segmenter.hpp"

namespace clickstorm {

// Wire format shared with external model servers. One JSON object per line:
//   -> {"type":"init","height":H,"width":W,"image":b64}
//   <- {"type":"ready","input_mode":"disk_maps"|"raw_coordinates","supports_gradients":bool}
//   -> {"type":"predict","clicks":[{"x":f,"y":f,"sign":1|-1}],"prev_mask":b64|null}
//   <- {"type":"prediction","map":b64}
//   -> {"type":"grad","clicks":[...],"gt":b64,"direction":"min"|"max","active":i}
//   <- {"type":"gradient","dxy":[gx,gy]}
//   <- {"type":"error","code":str,"message":str}
// Maps and the image are row-major little-endian float32 (the image interleaves RGB);
// ground-truth masks are one byte per pixel (0 or 1). Payloads are base64.
namespace wire {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string encode_f32_map(const ProbMap& map);
ProbMap decode_f32_map(const std::string& payload, int width, int height);
std::string encode_u8_mask(const BinaryMask& mask);
BinaryMask decode_u8_mask(const std::string& payload, int width, int height);
std::string encode_image(const Image& image);
Image decode_image(const std::string& payload, int width, int height);

}  // namespace wire

// Raised for error frames and transport failures.
class BridgeError : public SegmenterError {
 public:
  BridgeError(std::string code, const std::string& message)
      : SegmenterError("bridge error [" + code + "]: " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// A bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(const std::string& line) = 0;
  // Throws BridgeError("transport", ...) on EOF.
  virtual std::string receive_line() = 0;
};

// Owns a pair of file descriptors (may be the same socket).
class FdLineChannel : public LineChannel {
 public:
  FdLineChannel(int read_fd, int write_fd);
  ~FdLineChannel() override;
  FdLineChannel(const FdLineChannel&) = delete;
  FdLineChannel& operator=(const FdLineChannel&) = delete;

  void send_line(const std::string& line) override;
  std::string receive_line() override;

 protected:
  void close_fds();

 private:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port);
// Spawns `argv` and talks to it over its stdin/stdout.
std::unique_ptr<LineChannel> spawn_process(const std::vector<std::string>& argv);
// "tcp://host:port" or "exec:<command and args, whitespace separated>".
std::unique_ptr<LineChannel> open_endpoint(const std::string& endpoint);

// Segmenter served by an external process. One in-flight request at a time; the session is
// re-initialized whenever a request carries a different image.
class BridgeSegmenter final : public Segmenter {
 public:
  BridgeSegmenter(std::unique_ptr<LineChannel> channel, const Image& image);

  SegmenterCapabilities capabilities() const override { return capabilities_; }
  ProbMap predict(const SegmenterRequest& request) override;
  Vec2 dice_gradient(const SegmenterRequest& request, const BinaryMask& gt, Direction direction,
                     std::size_t active) override;

 private:
  void ensure_session(const Image& image);
  // Sends one frame and returns the raw response line; error frames become BridgeError.
  std::string roundtrip(const std::string& frame, const char* expected_type);

  std::unique_ptr<LineChannel> channel_;
  Image session_image_;
  SegmenterCapabilities capabilities_;
};

}  // namespace clickstorm
