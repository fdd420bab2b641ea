#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace caer::model {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  // Token ids of the text, without start/end markers.
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual int sot() const = 0;
  virtual int eot() const = 0;
  virtual int vocab_size() const = 0;
};

// Deterministic stand-in: lower-cased words, single digits and punctuation
// runs, each hashed into [1, vocab - 2). sot = vocab - 2, eot = vocab - 1.
class HashTokenizer final : public Tokenizer {
 public:
  explicit HashTokenizer(int vocab_size = 2048);
  std::vector<int> encode(std::string_view text) const override;
  int sot() const override { return vocab_ - 2; }
  int eot() const override { return vocab_ - 1; }
  int vocab_size() const override { return vocab_; }

 private:
  int vocab_;
};

// Byte-level BPE of the CLIP text encoder, read from the gzipped merge list
// (bpe_simple_vocab_16e6.txt.gz). Text is whitespace-collapsed and ASCII
// lower-cased; non-ASCII code points count as letters.
class BpeTokenizer final : public Tokenizer {
 public:
  explicit BpeTokenizer(const std::filesystem::path& merges_gz);
  std::vector<int> encode(std::string_view text) const override;
  int sot() const override { return sot_; }
  int eot() const override { return eot_; }
  int vocab_size() const override { return static_cast<int>(encoder_.size()); }

 private:
  std::vector<std::string> bpe(const std::string& token) const;

  std::vector<std::string> byte_encoder_;  // byte -> UTF-8 of its stand-in char
  std::unordered_map<std::string, int> encoder_;
  std::unordered_map<std::string, int> ranks_;  // "a b" -> merge rank
  int sot_ = 0;
  int eot_ = 0;
};

// Splits text the way the CLIP pattern does: contractions, letter runs,
// single digits, and runs of other non-space characters.
std::vector<std::string> pretokenize(std::string_view lowered);

}  // namespace caer::model
