#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtkit/records.hpp"
#include "mtkit/tokenizer.hpp"

namespace mtkit {

enum class Role { user, assistant };

inline const char* role_name(Role r) {
  return r == Role::user ? "user" : "assistant";
}

struct Turn {
  Role role;
  std::string content;
};

struct Dialog {
  std::string id;
  std::vector<Turn> turns;
};

// Nonempty, roles alternate starting with user, final turn is assistant.
inline void validate_dialog(const Dialog& d) {
  if (d.turns.empty()) throw Error("dialog is empty");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Role expected = i % 2 == 0 ? Role::user : Role::assistant;
    if (d.turns[i].role != expected)
      throw Error("dialog turn " + std::to_string(i) + " must be " +
                  role_name(expected));
  }
  if (d.turns.back().role != Role::assistant)
    throw Error("dialog must end with an assistant turn");
}

inline constexpr const char* kTurnStartText = "<|im_start|>";
inline constexpr const char* kTurnEndText = "<|im_end|>";

// Renders a dialog as a single string:
//   <|im_start|>ROLE\nCONTENT<|im_end|>\n
// per turn, concatenated in order. The byte layout is pinned by golden
// files; do not change it without regenerating them.
inline std::string serialize_chatml(const Dialog& d) {
  validate_dialog(d);
  std::string out;
  for (const Turn& turn : d.turns) {
    out += kTurnStartText;
    out += role_name(turn.role);
    out += '\n';
    out += turn.content;
    out += kTurnEndText;
    out += '\n';
  }
  return out;
}

struct TokenizedDialog {
  std::string id;
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> loss_mask;  // 1 = loss computed on this token
};

// Tokenizes a dialog with answer-only loss: mask is 1 exactly on assistant
// content tokens and on each assistant turn's end-of-turn token. Control
// tokens, role names, newlines and user content are all masked out.
inline TokenizedDialog tokenize_with_mask(const Dialog& d,
                                          const TokenizerContract& tok) {
  validate_dialog(d);
  TokenizedDialog out;
  out.id = d.id;

  auto emit = [&](const std::vector<TokenId>& ids, std::uint8_t mask) {
    out.token_ids.insert(out.token_ids.end(), ids.begin(), ids.end());
    out.loss_mask.insert(out.loss_mask.end(), ids.size(), mask);
  };
  auto emit_one = [&](TokenId id, std::uint8_t mask) {
    out.token_ids.push_back(id);
    out.loss_mask.push_back(mask);
  };

  const std::vector<TokenId> newline = tok.encode("\n");
  for (const Turn& turn : d.turns) {
    const bool assist = turn.role == Role::assistant;
    const std::vector<TokenId> content = tok.encode(turn.content);
    if (tok.decode(content) != turn.content)
      throw Error("tokenizer failed round-trip on turn content");
    emit_one(tok.turn_start_id(), 0);
    emit(tok.encode(role_name(turn.role)), 0);
    emit(newline, 0);
    emit(content, assist ? 1 : 0);
    emit_one(tok.turn_end_id(), assist ? 1 : 0);
    emit(newline, 0);
  }
  return out;
}

struct PackConfig {
  std::size_t max_seq_len = 2048;
  // Items longer than max_seq_len: drop_with_warning is the only policy.
};

struct PackedSequence {
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> loss_mask;
  std::vector<std::size_t> record_boundaries;  // start index of each item
};

struct PackResult {
  std::vector<PackedSequence> packs;
  std::vector<std::string> dropped;  // ids of items longer than max_seq_len
};

// First-fit sequential packing: items are appended to the open pack while
// the total stays within max_seq_len, otherwise the pack is emitted and a
// new one starts. Items never split across packs; unpacking by boundaries
// reproduces the input stream minus dropped items.
inline PackResult pack_sequences(const std::vector<TokenizedDialog>& items,
                                 const PackConfig& cfg) {
  if (cfg.max_seq_len == 0) throw Error("max_seq_len must be positive");
  PackResult result;
  PackedSequence open;

  auto flush = [&]() {
    if (!open.token_ids.empty()) {
      result.packs.push_back(std::move(open));
      open = PackedSequence{};
    }
  };

  for (const auto& item : items) {
    const std::size_t len = item.token_ids.size();
    if (len > cfg.max_seq_len) {
      result.dropped.push_back(item.id);
      continue;
    }
    if (open.token_ids.size() + len > cfg.max_seq_len) flush();
    open.record_boundaries.push_back(open.token_ids.size());
    open.token_ids.insert(open.token_ids.end(), item.token_ids.begin(),
                          item.token_ids.end());
    open.loss_mask.insert(open.loss_mask.end(), item.loss_mask.begin(),
                          item.loss_mask.end());
  }
  flush();
  return result;
}

// --- Record codecs ----------------------------------------------------------

template <>
struct RecordCodec<Dialog> {
  static constexpr const char* kind_name = "dialog";

  static Dialog parse(const Json& j, const std::set<std::string>* = nullptr) {
    Dialog d;
    if (j.contains("id")) d.id = detail::require_string(j, "id");
    const Json& turns = detail::require_field(j, "turns");
    if (!turns.is_array()) throw Error("field \"turns\" must be an array");
    for (const Json& t : turns) {
      const std::string role = detail::require_string(t, "role");
      Turn turn;
      if (role == "user") {
        turn.role = Role::user;
      } else if (role == "assistant") {
        turn.role = Role::assistant;
      } else {
        throw Error("unknown role \"" + role + "\"");
      }
      turn.content = detail::require_string(t, "content");
      d.turns.push_back(std::move(turn));
    }
    validate_dialog(d);
    return d;
  }

  static Json dump(const Dialog& d) {
    Json turns = Json::array();
    for (const Turn& t : d.turns)
      turns.push_back(Json{{"role", role_name(t.role)}, {"content", t.content}});
    Json j{{"turns", turns}};
    if (!d.id.empty()) j["id"] = d.id;
    return j;
  }
};

template <>
struct RecordCodec<PackedSequence> {
  static constexpr const char* kind_name = "packed";

  static PackedSequence parse(const Json& j,
                              const std::set<std::string>* = nullptr) {
    PackedSequence p;
    for (const Json& v : detail::require_field(j, "token_ids"))
      p.token_ids.push_back(v.get<TokenId>());
    for (const Json& v : detail::require_field(j, "loss_mask"))
      p.loss_mask.push_back(v.get<std::uint8_t>());
    for (const Json& v : detail::require_field(j, "boundaries"))
      p.record_boundaries.push_back(v.get<std::size_t>());
    if (p.loss_mask.size() != p.token_ids.size())
      throw Error("loss_mask length must match token_ids");
    return p;
  }

  static Json dump(const PackedSequence& p) {
    return Json{{"token_ids", p.token_ids},
                {"loss_mask", p.loss_mask},
                {"boundaries", p.record_boundaries}};
  }
};

}  // namespace mtkit
