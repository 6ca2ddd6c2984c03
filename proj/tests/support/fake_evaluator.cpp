// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal evaluator process for transport tests.
//
//   fake_evaluator sum          fitness = sum of lambdas
//   fake_evaluator error        every request gets an error frame
//   fake_evaluator crash N      answers N requests, then exits
//   fake_evaluator garbage      answers with a line that is not JSON
//   fake_evaluator silent       reads requests, never answers

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <string>

#include "ropeext/protocol.hpp"

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "sum";
  int remaining = argc > 2 ? std::atoi(argv[2]) : -1;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (mode == "crash" && remaining-- == 0) return 3;
    ropeext::EvalRequest req;
    try {
      req = ropeext::decode_request(line);
    } catch (const ropeext::Error& e) {
      std::cout << ropeext::encode_response(ropeext::make_error_response("", e.what())) << std::flush;
      continue;
    }
    if (mode == "silent") continue;
    if (mode == "garbage") {
      std::cout << "this is not json\n" << std::flush;
      continue;
    }
    if (mode == "error") {
      std::cout << ropeext::encode_response(
                       ropeext::make_error_response(req.request_id, "model failed to load"))
                << std::flush;
      continue;
    }
    const double sum = std::accumulate(req.lambdas.begin(), req.lambdas.end(), 0.0);
    std::cout << ropeext::encode_response(ropeext::make_response(req.request_id, {sum}))
              << std::flush;
  }
  return 0;
}
