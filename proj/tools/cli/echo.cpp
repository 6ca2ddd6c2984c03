// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "echo.hpp"

#include "ropeext/error.hpp"
#include "ropeext/json_writer.hpp"

namespace ropeext::cli {

Format parse_format(std::string_view s) {
  if (s == "text") return Format::kText;
  if (s == "json") return Format::kJson;
  if (s == "csv") return Format::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown format '" + std::string(s) + "'");
}

Echo& Echo::add(std::string key, std::string_view value) {
  JsonWriter w;
  w.value(value);
  items_.push_back({std::move(key), std::string(value), w.take()});
  return *this;
}

Echo& Echo::add(std::string key, double value) {
  const std::string v = format_double(value);
  items_.push_back({std::move(key), v, v});
  return *this;
}

Echo& Echo::add(std::string key, std::int64_t value) {
  const std::string v = std::to_string(value);
  items_.push_back({std::move(key), v, v});
  return *this;
}

Echo& Echo::add(std::string key, std::uint64_t value) {
  const std::string v = std::to_string(value);
  items_.push_back({std::move(key), v, v});
  return *this;
}

Echo& Echo::add(std::string key, bool value) {
  const std::string v = value ? "true" : "false";
  items_.push_back({std::move(key), v, v});
  return *this;
}

void Echo::print(Format format, std::ostream& out, std::ostream& err) const {
  if (format == Format::kJson) {
    JsonWriter w;
    w.begin_object().key("command").value(command_).key("resolved").begin_object();
    for (const auto& item : items_) w.key(item.key).raw(item.json);
    w.end_object().end_object();
    out << w.str() << '\n';
    return;
  }
  std::ostream& os = format == Format::kCsv ? err : out;
  os << "# ropeext " << command_;
  for (const auto& item : items_) os << ' ' << item.key << '=' << item.text;
  os << '\n';
}

}  // namespace ropeext::cli
