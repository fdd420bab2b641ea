#include "caer/model/tokenizer.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <zlib.h>

#include "caer/error.hpp"
#include "caer/util/hash.hpp"

namespace caer::model {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80; }

std::string clean(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  }
  return out;
}

void append_utf8(std::string& s, std::uint32_t cp) {
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw Error(ErrorCode::io, fmt::format("cannot open {}", path.string()));
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error(ErrorCode::io, fmt::format("cannot decompress {}", path.string()));
  return out;
}

}  // namespace

std::vector<std::string> pretokenize(std::string_view s) {
  static constexpr std::string_view kContractions[] = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '\'') {
      bool matched = false;
      for (auto k : kContractions) {
        if (s.substr(i, k.size()) == k) {
          out.emplace_back(k);
          i += k.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    std::size_t j = i + 1;
    if (is_letter(c)) {
      while (j < s.size() && is_letter(static_cast<unsigned char>(s[j]))) ++j;
    } else if (!is_digit(c)) {
      while (j < s.size()) {
        const auto d = static_cast<unsigned char>(s[j]);
        if (is_space(d) || is_letter(d) || is_digit(d)) break;
        ++j;
      }
    }
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

HashTokenizer::HashTokenizer(int vocab_size) : vocab_(vocab_size) {
  if (vocab_ < 8) throw Error(ErrorCode::config, "hash tokenizer vocabulary too small");
}

std::vector<int> HashTokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : pretokenize(clean(text))) {
    ids.push_back(1 + static_cast<int>(fnv1a64(tok) % static_cast<std::uint64_t>(vocab_ - 3)));
  }
  return ids;
}

BpeTokenizer::BpeTokenizer(const std::filesystem::path& merges_gz) {
  // Printable bytes map to themselves; the rest to code points from 256 up.
  byte_encoder_.resize(256);
  std::vector<int> order;
  std::vector<bool> printable(256, false);
  for (int b = '!'; b <= '~'; ++b) printable[b] = true;
  for (int b = 0xA1; b <= 0xAC; ++b) printable[b] = true;
  for (int b = 0xAE; b <= 0xFF; ++b) printable[b] = true;
  for (int b = 0; b < 256; ++b)
    if (printable[b]) order.push_back(b);
  int extra = 0;
  for (int b = 0; b < 256; ++b) {
    std::string s;
    append_utf8(s, printable[b] ? static_cast<std::uint32_t>(b) : static_cast<std::uint32_t>(256 + extra++));
    byte_encoder_[b] = s;
  }
  for (int b = 0; b < 256; ++b)
    if (!printable[b]) order.push_back(b);

  const std::string text = read_gzip(merges_gz);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  constexpr std::size_t kMerges = 49152 - 256 - 2;
  if (lines.size() < kMerges + 1) throw Error(ErrorCode::io, fmt::format("{}: too few merges", merges_gz.string()));

  std::vector<std::string> vocab;
  vocab.reserve(49408);
  for (int b : order) vocab.push_back(byte_encoder_[b]);
  for (int b : order) vocab.push_back(byte_encoder_[b] + "</w>");
  for (std::size_t i = 1; i <= kMerges; ++i) {
    const auto& line = lines[i];
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw Error(ErrorCode::io, fmt::format("{}: bad merge line {}", merges_gz.string(), i));
    ranks_.emplace(line, static_cast<int>(i - 1));
    vocab.push_back(line.substr(0, sp) + line.substr(sp + 1));
  }
  vocab.emplace_back("<start_of_text>");
  vocab.emplace_back("<end_of_text>");
  for (std::size_t i = 0; i < vocab.size(); ++i) encoder_.emplace(vocab[i], static_cast<int>(i));
  sot_ = static_cast<int>(vocab.size()) - 2;
  eot_ = static_cast<int>(vocab.size()) - 1;
}

std::vector<std::string> BpeTokenizer::bpe(const std::string& token) const {
  // token is a sequence of UTF-8 characters; split into characters first.
  std::vector<std::string> word;
  for (std::size_t i = 0; i < token.size();) {
    std::size_t len = 1;
    const auto c = static_cast<unsigned char>(token[i]);
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    word.push_back(token.substr(i, len));
    i += len;
  }
  word.back() += "</w>";

  while (word.size() > 1) {
    int best = std::numeric_limits<int>::max();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      auto it = ranks_.find(word[i] + " " + word[i + 1]);
      if (it != ranks_.end() && it->second < best) {
        best = it->second;
        best_i = i;
      }
    }
    if (best == std::numeric_limits<int>::max()) break;
    const std::string first = word[best_i];
    const std::string second = word[best_i + 1];
    std::vector<std::string> merged;
    for (std::size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == first && word[i + 1] == second) {
        merged.push_back(first + second);
        i += 2;
      } else {
        merged.push_back(word[i]);
        ++i;
      }
    }
    word = std::move(merged);
  }
  return word;
}

std::vector<int> BpeTokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : pretokenize(clean(text))) {
    std::string mapped;
    for (unsigned char b : tok) mapped += byte_encoder_[b];
    for (const auto& piece : bpe(mapped)) ids.push_back(encoder_.at(piece));
  }
  return ids;
}

}  // namespace caer::model
