// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "ropeext/transport.hpp"

namespace ropeext::testing {

/// In-process FrameChannel. Every frame the client sends is handed to the
/// handler, which may push any number of reply frames (in any order, now or
/// later via inject()).
class LoopbackChannel final : public FrameChannel {
 public:
  struct Shared {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> inbox;  // frames waiting for the client
    std::vector<std::string> sent;  // frames the client wrote
    bool closed = false;
  };
  using Handler = std::function<void(const std::string& frame, Shared& shared)>;

  explicit LoopbackChannel(Handler handler);

  void send(std::string_view frame) override;
  ReadStatus receive(std::string& frame, std::chrono::milliseconds wait) override;

  std::shared_ptr<Shared> shared() const { return shared_; }

  static void inject(Shared& shared, std::string frame);
  static void close(Shared& shared);

 private:
  Handler handler_;
  std::shared_ptr<Shared> shared_;
};

}  // namespace ropeext::testing
