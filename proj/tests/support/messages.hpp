// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

#include "ropeext/protocol.hpp"
#include "ropeext/rng.hpp"

namespace ropeext::testing {

/// Any finite double, including subnormals and extreme exponents.
double random_double(Rng& rng);

/// Valid UTF-8 mixing ASCII, JSON metacharacters, control bytes and
/// multi-byte sequences.
std::string random_text(Rng& rng, std::size_t max_pieces);

NeedleSample random_sample(Rng& rng);
EvalRequest random_request(Rng& rng);
/// Error responses carry fitness 0, which is what decoding a null fitness yields.
EvalResponse random_response(Rng& rng);

}  // namespace ropeext::testing
