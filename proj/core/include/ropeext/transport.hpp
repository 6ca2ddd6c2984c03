// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <sys/types.h>

namespace ropeext {

enum class ReadStatus { kFrame, kIdle, kClosed };

/// Bidirectional line-framed byte stream.
class FrameChannel {
 public:
  virtual ~FrameChannel() = default;

  /// Writes one complete frame (including its '\n'). Throws Error(kDisconnected)
  /// when the peer is gone.
  virtual void send(std::string_view frame) = 0;

  /// Waits up to `wait` for one frame. On kFrame, `frame` holds the line
  /// without its terminator. Throws FrameError for over-long lines.
  virtual ReadStatus receive(std::string& frame, std::chrono::milliseconds wait) = 0;
};

/// Where an evaluator lives: a command spawned with its stdio as the channel,
/// or a TCP address.
struct Endpoint {
  enum class Kind { kSubprocess, kTcp };
  Kind kind = Kind::kSubprocess;
  std::string command;  // run through /bin/sh -c
  std::string host;
  std::uint16_t port = 0;

  /// "tcp://host:port" or "tcp:host:port" select TCP; anything else (optionally
  /// prefixed "exec:") is a shell command.
  static Endpoint parse(std::string_view spec);
};

/// Line reader/writer over a pair of file descriptors (which may be the same).
class FdChannel : public FrameChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool is_socket);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void send(std::string_view frame) override;
  ReadStatus receive(std::string& frame, std::chrono::milliseconds wait) override;

 protected:
  void close_write();
  void close_all();

 private:
  bool take_line(std::string& frame);

  int read_fd_;
  int write_fd_;
  bool is_socket_;
  bool eof_ = false;
  std::string buffer_;
};

class SubprocessChannel final : public FdChannel {
 public:
  static std::unique_ptr<SubprocessChannel> spawn(const std::string& command);
  ~SubprocessChannel() override;

 private:
  SubprocessChannel(int read_fd, int write_fd, pid_t pid);
  pid_t pid_;
};

std::unique_ptr<FrameChannel> connect_tcp(const std::string& host, std::uint16_t port);
std::unique_ptr<FrameChannel> open_channel(const Endpoint& endpoint);

}  // namespace ropeext
