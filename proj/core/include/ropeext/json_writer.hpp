// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ropeext {

/// %.17g formatting: enough digits for any double to parse back to the same bits.
std::string format_double(double value);

/// Minimal compact JSON emitter. Floating-point values are always written with
/// 17 significant digits, which every file and wire format in this project
/// requires. Keys are emitted in call order.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);

  JsonWriter& value(std::string_view s);
  JsonWriter& value(const char* s) { return value(std::string_view(s)); }
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(bool v);
  JsonWriter& null();
  JsonWriter& array(std::span<const double> values);

  /// Appends an already-serialised JSON value verbatim.
  JsonWriter& raw(std::string_view json);

  const std::string& str() const noexcept { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void separate();
  void append_escaped(std::string_view s);

  std::string out_;
  // One flag per open container: true once it has at least one element.
  std::vector<bool> has_items_;
  bool after_key_ = false;
};

}  // namespace ropeext
