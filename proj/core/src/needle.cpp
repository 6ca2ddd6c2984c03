// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/needle.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ropeext/error.hpp"
#include "ropeext/json_writer.hpp"

namespace ropeext {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_lower_word(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

}  // namespace

void Needle::validate() const {
  const auto dash = key_word.find('-');
  if (dash == std::string::npos ||
      !is_lower_word(std::string_view(key_word).substr(0, dash)) ||
      !is_lower_word(std::string_view(key_word).substr(dash + 1))) {
    throw Error(ErrorCode::kInvalidArgument, "key word '" + key_word + "' is not adjective-noun");
  }
  if (magic_number < 1000000 || magic_number > 9999999) {
    throw Error(ErrorCode::kInvalidArgument, "magic number must have seven digits");
  }
}

std::vector<std::int32_t> WhitespaceTokenizer::encode(std::string_view text) const {
  std::vector<std::int32_t> ids;
  std::size_t p = 0;
  while (p < text.size()) {
    std::size_t q = p;
    while (q < text.size() && is_space(text[q])) ++q;
    if (q < text.size()) {
      if (is_digit(text[q])) {
        ++q;
      } else {
        while (q < text.size() && !is_space(text[q]) && !is_digit(text[q])) ++q;
      }
    }
    ids.push_back(intern(text.substr(p, q - p)));
    p = q;
  }
  return ids;
}

std::string WhitespaceTokenizer::decode(std::span<const std::int32_t> ids) const {
  std::lock_guard lock(mu_);
  std::string out;
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown token id " + std::to_string(id));
    }
    out += pieces_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::int32_t WhitespaceTokenizer::intern(std::string_view piece) const {
  std::lock_guard lock(mu_);
  auto [it, inserted] = ids_.try_emplace(std::string(piece), static_cast<std::int32_t>(pieces_.size()));
  if (inserted) pieces_.emplace_back(piece);
  return it->second;
}

namespace needle_template {

std::string needle_sentence(const Needle& n) {
  return "One of the special magic numbers for " + n.key_word + " is: " +
         std::to_string(n.magic_number) + ".";
}

std::string question(const Needle& n) {
  return "What is the special magic number for " + n.key_word + " mentioned in the provided text?";
}

std::string answer_stem(const Needle& n) {
  return "The special magic number for " + n.key_word + " mentioned in the provided text is";
}

}  // namespace needle_template

Needle make_needle(Rng& rng) {
  const auto adj = adjectives();
  const auto noun = nouns();
  Needle n;
  n.key_word = std::string(adj[rng.below(adj.size())]) + "-" + std::string(noun[rng.below(noun.size())]);
  n.magic_number = 1000000 + static_cast<int>(rng.below(9000000));
  return n;
}

NeedleSample synthesize_sample(std::string_view book_text, std::int64_t target_tokens,
                               const Tokenizer& tokenizer, Rng& rng) {
  using namespace needle_template;
  const std::vector<std::int32_t> body_ids = tokenizer.encode(book_text);

  constexpr int kNeedleDraws = 16;
  for (int draw = 0; draw < kNeedleDraws; ++draw) {
    const Needle needle = make_needle(rng);
    const std::string sentence = needle_sentence(needle);
    if (book_text.find(sentence) != std::string_view::npos) continue;

    const std::string head = std::string(kPreamble) + "\n" + sentence;
    const std::string tail = "\n" + question(needle) + " " + answer_stem(needle);
    const std::string digits = std::to_string(needle.magic_number);

    const auto overhead =
        static_cast<std::int64_t>(tokenizer.encode(head + tail + " " + digits).size());
    std::int64_t take = target_tokens - overhead;
    if (take < 1) {
      throw Error(ErrorCode::kSourceTooShort,
                  "the templates alone take " + std::to_string(overhead) +
                      " tokens, more than the target " + std::to_string(target_tokens));
    }
    if (static_cast<std::int64_t>(body_ids.size()) < take) {
      throw Error(ErrorCode::kSourceTooShort,
                  "book has " + std::to_string(body_ids.size()) + " tokens, need " +
                      std::to_string(take) + " for target " +
                      std::to_string(target_tokens));
    }

    // Only the body is trimmed; re-measure because tokenizers may merge across
    // the joins.
    std::string text;
    std::string prefix;
    std::int64_t n_tokens = 0;
    for (int round = 0; round < 64; ++round) {
      const std::string body = tokenizer.decode(std::span(body_ids).first(static_cast<std::size_t>(take)));
      prefix = head + " " + std::string(trim(body)) + tail;
      text = prefix + " " + digits;
      n_tokens = static_cast<std::int64_t>(tokenizer.encode(text).size());
      if (n_tokens > target_tokens) {
        take -= n_tokens - target_tokens;
      } else if (n_tokens < target_tokens - kTokenSlack &&
                 take < static_cast<std::int64_t>(body_ids.size())) {
        take = std::min<std::int64_t>(take + (target_tokens - n_tokens),
                                      static_cast<std::int64_t>(body_ids.size()));
      } else {
        break;
      }
      if (take < 1) break;
    }
    if (take < 1 || n_tokens > target_tokens || n_tokens < target_tokens - kTokenSlack) {
      throw Error(ErrorCode::kSourceTooShort, "could not fit the body to the target length");
    }
    if (count_occurrences(text, sentence) != 1) continue;

    NeedleSample sample;
    sample.needle = needle;
    sample.token_len = n_tokens;
    sample.answer_char_span = {static_cast<std::int64_t>(prefix.size() + 1),
                               static_cast<std::int64_t>(text.size())};
    const std::vector<std::int32_t> ids = tokenizer.encode(text);
    const auto prefix_len = static_cast<std::int64_t>(tokenizer.encode(prefix).size());
    sample.answer_token_span = {prefix_len, n_tokens};
    const std::string answer = tokenizer.decode(
        std::span(ids).subspan(static_cast<std::size_t>(prefix_len)));
    if (trim(answer) != digits) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tokenizer " + tokenizer.id() + " merges the answer digits with the stem");
    }
    sample.full_text = std::move(text);
    sample.tokenizer_id = tokenizer.id();
    return sample;
  }
  throw Error(ErrorCode::kInvalidArgument, "could not place a unique needle in the book");
}

std::vector<NeedleSample> build_corpus(std::span<const std::string> books, int n_samples,
                                       std::int64_t target_tokens, const Tokenizer& tokenizer,
                                       Rng& rng) {
  std::vector<NeedleSample> corpus;
  if (n_samples <= 0) return corpus;
  if (books.empty()) throw Error(ErrorCode::kSourceTooShort, "no books supplied");

  std::vector<bool> unusable(books.size(), false);
  std::set<std::pair<std::string, int>> used;
  std::size_t book = 0;
  while (static_cast<int>(corpus.size()) < n_samples) {
    if (std::all_of(unusable.begin(), unusable.end(), [](bool b) { return b; })) {
      throw Error(ErrorCode::kSourceTooShort,
                  "only " + std::to_string(corpus.size()) + " of " + std::to_string(n_samples) +
                      " samples could be built");
    }
    const std::size_t b = book++ % books.size();
    if (unusable[b]) continue;
    Rng stream(rng.split());
    try {
      NeedleSample sample = synthesize_sample(books[b], target_tokens, tokenizer, stream);
      while (!used.emplace(sample.needle.key_word, sample.needle.magic_number).second) {
        sample = synthesize_sample(books[b], target_tokens, tokenizer, stream);
      }
      corpus.push_back(std::move(sample));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSourceTooShort) throw;
      std::cerr << "warning: skipping book " << b << ": " << e.what() << '\n';
      unusable[b] = true;
    }
  }
  return corpus;
}

std::string sample_to_json(const NeedleSample& s) {
  JsonWriter w;
  w.begin_object()
      .key("text").value(s.full_text)
      .key("key_word").value(s.needle.key_word)
      .key("magic_number").value(std::to_string(s.needle.magic_number))
      .key("answer_char_span").begin_array()
      .value(s.answer_char_span.first).value(s.answer_char_span.second).end_array()
      .key("token_len").value(s.token_len)
      .key("answer_token_span").begin_array()
      .value(s.answer_token_span.first).value(s.answer_token_span.second).end_array()
      .key("tokenizer_id").value(s.tokenizer_id)
      .end_object();
  return w.take();
}

NeedleSample sample_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    NeedleSample s;
    s.full_text = doc.at("text").get<std::string>();
    s.needle.key_word = doc.at("key_word").get<std::string>();
    s.needle.magic_number = std::stoi(doc.at("magic_number").get<std::string>());
    const auto cs = doc.at("answer_char_span").get<std::vector<std::int64_t>>();
    const auto ts = doc.at("answer_token_span").get<std::vector<std::int64_t>>();
    if (cs.size() != 2 || ts.size() != 2) {
      throw Error(ErrorCode::kInvalidArgument, "spans must have two elements");
    }
    s.answer_char_span = {cs[0], cs[1]};
    s.answer_token_span = {ts[0], ts[1]};
    s.token_len = doc.at("token_len").get<std::int64_t>();
    s.tokenizer_id = doc.at("tokenizer_id").get<std::string>();
    s.needle.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad corpus line: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad magic number: ") + e.what());
  }
}

void write_corpus(std::span<const NeedleSample> corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  for (const auto& s : corpus) out << sample_to_json(s) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<NeedleSample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<NeedleSample> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) corpus.push_back(sample_from_json(line));
  }
  return corpus;
}

std::vector<std::string> load_books(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIoError, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no text files in " + dir.string());
  }
  std::vector<std::string> books;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + f.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    books.push_back(ss.str());
  }
  return books;
}

}  // namespace ropeext
