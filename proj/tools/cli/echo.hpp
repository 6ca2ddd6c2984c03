// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ropeext::cli {

enum class Format { kText, kJson, kCsv };

Format parse_format(std::string_view s);

/// The resolved settings of one run, printed before any result so that the
/// invocation can be reproduced exactly.
class Echo {
 public:
  explicit Echo(std::string command) : command_(std::move(command)) {}

  Echo& add(std::string key, std::string_view value);
  Echo& add(std::string key, const char* value) { return add(std::move(key), std::string_view(value)); }
  Echo& add(std::string key, double value);
  Echo& add(std::string key, std::int64_t value);
  Echo& add(std::string key, int value) { return add(std::move(key), static_cast<std::int64_t>(value)); }
  Echo& add(std::string key, std::uint64_t value);
  Echo& add(std::string key, bool value);

  /// text: one "# ..." line on `out`; json: one object line on `out`;
  /// csv: the text line on `err` so stdout stays parseable.
  void print(Format format, std::ostream& out, std::ostream& err) const;

 private:
  struct Item {
    std::string key;
    std::string text;
    std::string json;
  };
  std::string command_;
  std::vector<Item> items_;
};

}  // namespace ropeext::cli
