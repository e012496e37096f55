#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mtkit/common.hpp"

namespace mtkit {

// Token counting / splitting used by the mixer, edit rate and length
// binning. The real training tokenizer is not shipped; whitespace is the
// built-in fallback and anything else plugs in behind this interface.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> split(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const {
    return split(text).size();
  }
  virtual std::string name() const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> split(std::string_view text) const override {
    return split_whitespace(text);
  }
  std::string name() const override { return "whitespace"; }
};

inline const Tokenizer& whitespace_tokenizer() {
  static const WhitespaceTokenizer tok;
  return tok;
}

using TokenId = std::int32_t;

// Encoder/decoder contract for dialog serialization. The two control
// strings must map to single dedicated ids, and the end-of-sequence id is
// the turn-end id.
class TokenizerContract {
 public:
  virtual ~TokenizerContract() = default;

  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(const std::vector<TokenId>& ids) const = 0;

  virtual TokenId turn_start_id() const = 0;  // "<|im_start|>"
  virtual TokenId turn_end_id() const = 0;    // "<|im_end|>"
  TokenId eos_id() const { return turn_end_id(); }

  virtual std::string name() const = 0;
};

// Byte-level tokenizer with two reserved control ids. Exercises the whole
// contract without an external vocabulary: ids 0..255 are raw bytes,
// 256/257 are the turn control tokens.
class ByteTokenizer final : public TokenizerContract {
 public:
  static constexpr TokenId kTurnStart = 256;
  static constexpr TokenId kTurnEnd = 257;

  std::vector<TokenId> encode(std::string_view text) const override {
    std::vector<TokenId> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(static_cast<TokenId>(c));
    return ids;
  }

  std::string decode(const std::vector<TokenId>& ids) const override {
    std::string out;
    out.reserve(ids.size());
    for (TokenId id : ids) {
      if (id == kTurnStart) {
        out += "<|im_start|>";
      } else if (id == kTurnEnd) {
        out += "<|im_end|>";
      } else if (id >= 0 && id < 256) {
        out.push_back(static_cast<char>(id));
      } else {
        throw Error("ByteTokenizer: unknown token id " + std::to_string(id));
      }
    }
    return out;
  }

  TokenId turn_start_id() const override { return kTurnStart; }
  TokenId turn_end_id() const override { return kTurnEnd; }
  std::string name() const override { return "byte"; }
};

}  // namespace mtkit
