// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ropeext/rng.hpp"

namespace ropeext {

struct Needle {
  std::string key_word;  // adjective-noun, e.g. "numerous-kite"
  int magic_number = 0;  // seven digits

  /// Throws Error(kInvalidArgument) when the key word or number is malformed.
  void validate() const;
  friend bool operator==(const Needle&, const Needle&) = default;
};

using Span = std::pair<std::int64_t, std::int64_t>;  // half-open [first, second)

struct NeedleSample {
  std::string full_text;
  Needle needle;
  Span answer_char_span;
  std::int64_t token_len = 0;
  Span answer_token_span;
  std::string tokenizer_id;

  friend bool operator==(const NeedleSample&, const NeedleSample&) = default;
};

/// Text <-> token-id capability. decode(encode(s)) must reproduce s for the
/// texts a corpus is built from.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::int32_t> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const std::int32_t> ids) const = 0;
  virtual std::string id() const = 0;
};

/// Deterministic reversible toy tokenizer: a token is a run of leading
/// whitespace plus either one digit or a run of non-space, non-digit
/// characters. Digits are split one per token, as most LLM tokenizers do.
/// Ids are interned on first sight; the table is shared across threads.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::int32_t> encode(std::string_view text) const override;
  std::string decode(std::span<const std::int32_t> ids) const override;
  std::string id() const override { return "whitespace-digits-v1"; }

 private:
  std::int32_t intern(std::string_view piece) const;

  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, std::int32_t> ids_;
  mutable std::vector<std::string> pieces_;
};

namespace needle_template {
inline constexpr std::string_view kPreamble =
    "A special magic number is hidden within the following text. Make sure to memorize it. "
    "I will quiz you about the number afterwards.";
std::string needle_sentence(const Needle& n);
std::string question(const Needle& n);
std::string answer_stem(const Needle& n);
}  // namespace needle_template

std::span<const std::string_view> adjectives();
std::span<const std::string_view> nouns();

/// Allowed shortfall of token_len below the requested length.
inline constexpr std::int64_t kTokenSlack = 16;

Needle make_needle(Rng& rng);

/// preamble, needle sentence, truncated book body, question, answer stem and
/// the magic digits, totalling target_tokens under `tokenizer`.
NeedleSample synthesize_sample(std::string_view book_text, std::int64_t target_tokens,
                               const Tokenizer& tokenizer, Rng& rng);

/// One sample per book, cycling through books; books that are too short are
/// skipped with a warning on stderr. Each sample draws from its own stream
/// split off `rng`, and needles are distinct across the corpus.
std::vector<NeedleSample> build_corpus(std::span<const std::string> books, int n_samples,
                                       std::int64_t target_tokens, const Tokenizer& tokenizer,
                                       Rng& rng);

std::string sample_to_json(const NeedleSample& sample);
NeedleSample sample_from_json(std::string_view json);
void write_corpus(std::span<const NeedleSample> corpus, const std::filesystem::path& path);
std::vector<NeedleSample> read_corpus(const std::filesystem::path& path);

/// Reads every regular file in `dir` (sorted by name) as UTF-8 text.
std::vector<std::string> load_books(const std::filesystem::path& dir);

}  // namespace ropeext
