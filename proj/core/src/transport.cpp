// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/transport.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ropeext/error.hpp"
#include "ropeext/protocol.hpp"

namespace ropeext {

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Endpoint Endpoint::parse(std::string_view spec) {
  Endpoint ep;
  std::string_view rest;
  if (spec.starts_with("tcp://")) {
    rest = spec.substr(6);
  } else if (spec.starts_with("tcp:")) {
    rest = spec.substr(4);
  } else {
    if (spec.starts_with("exec:")) spec.remove_prefix(5);
    if (spec.empty()) throw Error(ErrorCode::kInvalidArgument, "empty evaluator command");
    ep.kind = Kind::kSubprocess;
    ep.command = std::string(spec);
    return ep;
  }
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::kInvalidArgument, "tcp endpoint must be host:port");
  }
  ep.kind = Kind::kTcp;
  ep.host = std::string(rest.substr(0, colon));
  const std::string port(rest.substr(colon + 1));
  try {
    const int p = std::stoi(port);
    if (p < 1 || p > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(p);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kInvalidArgument, "bad tcp port '" + port + "'");
  }
  return ep;
}

FdChannel::FdChannel(int read_fd, int write_fd, bool is_socket)
    : read_fd_(read_fd), write_fd_(write_fd), is_socket_(is_socket) {}

FdChannel::~FdChannel() { close_all(); }

void FdChannel::close_write() {
  if (write_fd_ < 0) return;
  if (is_socket_) {
    ::shutdown(write_fd_, SHUT_WR);
  } else {
    ::close(write_fd_);
  }
  if (write_fd_ != read_fd_) write_fd_ = -1;
}

void FdChannel::close_all() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  read_fd_ = write_fd_ = -1;
}

void FdChannel::send(std::string_view frame) {
  if (write_fd_ < 0) throw Error(ErrorCode::kDisconnected, "channel closed");
  while (!frame.empty()) {
    const ssize_t n = is_socket_ ? ::send(write_fd_, frame.data(), frame.size(), MSG_NOSIGNAL)
                                 : ::write(write_fd_, frame.data(), frame.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kDisconnected, "write failed: " + errno_text());
    }
    frame.remove_prefix(static_cast<std::size_t>(n));
  }
}

bool FdChannel::take_line(std::string& frame) {
  const auto nl = buffer_.find('\n');
  if (nl == std::string::npos) {
    if (buffer_.size() > kMaxFrameBytes) {
      buffer_.clear();
      throw FrameError("incoming frame exceeds 64 MiB", kMaxFrameBytes);
    }
    return false;
  }
  frame.assign(buffer_, 0, nl);
  buffer_.erase(0, nl + 1);
  return true;
}

ReadStatus FdChannel::receive(std::string& frame, std::chrono::milliseconds wait) {
  if (take_line(frame)) return ReadStatus::kFrame;
  if (eof_ || read_fd_ < 0) return ReadStatus::kClosed;
  pollfd pfd{read_fd_, POLLIN, 0};
  const int ready = ::poll(&pfd, 1, static_cast<int>(wait.count()));
  if (ready < 0) {
    if (errno == EINTR) return ReadStatus::kIdle;
    throw Error(ErrorCode::kDisconnected, "poll failed: " + errno_text());
  }
  if (ready == 0) return ReadStatus::kIdle;
  char chunk[65536];
  const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN) return ReadStatus::kIdle;
    eof_ = true;
    return ReadStatus::kClosed;
  }
  if (n == 0) {
    eof_ = true;
    return ReadStatus::kClosed;
  }
  buffer_.append(chunk, static_cast<std::size_t>(n));
  return take_line(frame) ? ReadStatus::kFrame : ReadStatus::kIdle;
}

SubprocessChannel::SubprocessChannel(int read_fd, int write_fd, pid_t pid)
    : FdChannel(read_fd, write_fd, false), pid_(pid) {}

std::unique_ptr<SubprocessChannel> SubprocessChannel::spawn(const std::string& command) {
  // A dead evaluator must surface as a write error, not kill this process.
  std::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kIoError, "pipe failed: " + errno_text());
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::kIoError, "pipe failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw Error(ErrorCode::kIoError, "fork failed: " + errno_text());
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::unique_ptr<SubprocessChannel>(
      new SubprocessChannel(from_child[0], to_child[1], pid));
}

SubprocessChannel::~SubprocessChannel() {
  close_write();  // EOF on the child's stdin asks it to exit
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      close_all();
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
  close_all();
}

std::unique_ptr<FrameChannel> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::kDisconnected, "cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw Error(ErrorCode::kDisconnected, "cannot connect to " + host + ":" + service);
  }
  return std::make_unique<FdChannel>(fd, fd, true);
}

std::unique_ptr<FrameChannel> open_channel(const Endpoint& endpoint) {
  if (endpoint.kind == Endpoint::Kind::kTcp) return connect_tcp(endpoint.host, endpoint.port);
  return SubprocessChannel::spawn(endpoint.command);
}

}  // namespace ropeext
