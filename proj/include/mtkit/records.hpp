#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtkit/common.hpp"

namespace mtkit {

using Json = nlohmann::json;

// The ten training languages. Configs may extend this set; anything else
// is rejected at parse time.
inline const std::set<std::string>& default_languages() {
  static const std::set<std::string> langs = {"en", "de", "fr", "nl", "it",
                                              "es", "pt", "ko", "ru", "zh"};
  return langs;
}

struct LangCode {
  std::string code;

  bool operator==(const LangCode&) const = default;
  auto operator<=>(const LangCode&) const = default;
};

inline LangCode make_lang(std::string_view code,
                          const std::set<std::string>* allowed = nullptr) {
  if (code.size() != 2 || code[0] < 'a' || code[0] > 'z' || code[1] < 'a' ||
      code[1] > 'z') {
    throw Error("invalid language code \"" + std::string(code) +
                "\" (expected 2 lowercase letters)");
  }
  const std::set<std::string>& set = allowed ? *allowed : default_languages();
  if (!set.contains(std::string(code))) {
    throw Error("language \"" + std::string(code) +
                "\" is not in the configured language set");
  }
  return LangCode{std::string(code)};
}

struct Direction {
  LangCode src;
  LangCode tgt;
  // True when the src text was authored in the src language (i.e. the pair
  // is not translationese on the source side).
  bool original_direction = true;

  bool english_paired() const {
    return (src.code == "en") != (tgt.code == "en");
  }
  std::string pair_name() const { return src.code + "-" + tgt.code; }
  // The language whose thresholds apply when filtering parallel data.
  const LangCode& non_english() const {
    return src.code == "en" ? tgt : src;
  }

  bool operator==(const Direction&) const = default;
};

struct MonolingualDoc {
  std::string id;
  LangCode lang;
  std::string text;
  std::optional<double> perplexity;
};

struct ParallelPair {
  std::string id;
  Direction dir;
  std::string src_text;
  std::string tgt_text;
  // Expected keys: "bicleaner", "kiwi22", "xcomet_qe"; all values in [0,1].
  std::map<std::string, double> scores;
};

struct Segment {
  std::string id;
  std::string text;
};

// --- JSON codecs ----------------------------------------------------------
//
// One object per line, field names matching the type's field names. All
// parse helpers throw mtkit::Error with the offending field; the line
// reader rewraps those as ParseError with file and line number.

namespace detail {

inline const Json& require_field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw Error(std::string("missing field \"") + name + "\"");
  return *it;
}

inline std::string require_string(const Json& j, const char* name) {
  const Json& v = require_field(j, name);
  if (!v.is_string())
    throw Error(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

inline bool require_bool(const Json& j, const char* name) {
  const Json& v = require_field(j, name);
  if (!v.is_boolean())
    throw Error(std::string("field \"") + name + "\" must be a boolean");
  return v.get<bool>();
}

inline double require_number(const Json& j, const char* name) {
  const Json& v = require_field(j, name);
  if (!v.is_number())
    throw Error(std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

}  // namespace detail

template <typename T>
struct RecordCodec;

template <>
struct RecordCodec<MonolingualDoc> {
  static constexpr const char* kind_name = "mono";

  static MonolingualDoc parse(const Json& j,
                              const std::set<std::string>* langs = nullptr) {
    MonolingualDoc d;
    d.id = detail::require_string(j, "id");
    d.lang = make_lang(detail::require_string(j, "lang"), langs);
    d.text = detail::require_string(j, "text");
    if (normalize_whitespace(d.text).empty())
      throw Error("field \"text\" is empty after whitespace normalization");
    if (j.contains("perplexity") && !j["perplexity"].is_null()) {
      const double p = detail::require_number(j, "perplexity");
      if (!std::isfinite(p) || p <= 0.0)
        throw Error("field \"perplexity\" must be finite and > 0");
      d.perplexity = p;
    }
    return d;
  }

  static Json dump(const MonolingualDoc& d) {
    Json j{{"id", d.id}, {"lang", d.lang.code}, {"text", d.text}};
    if (d.perplexity) j["perplexity"] = *d.perplexity;
    return j;
  }
};

inline Direction direction_from_json(const Json& j,
                                     const std::set<std::string>* langs =
                                         nullptr) {
  Direction dir;
  dir.src = make_lang(detail::require_string(j, "src"), langs);
  dir.tgt = make_lang(detail::require_string(j, "tgt"), langs);
  dir.original_direction = detail::require_bool(j, "original_direction");
  if (dir.src == dir.tgt)
    throw Error("direction src and tgt must differ (" + dir.src.code + ")");
  return dir;
}

inline Json direction_to_json(const Direction& d) {
  return Json{{"src", d.src.code},
              {"tgt", d.tgt.code},
              {"original_direction", d.original_direction}};
}

template <>
struct RecordCodec<ParallelPair> {
  static constexpr const char* kind_name = "parallel";

  static ParallelPair parse(const Json& j,
                            const std::set<std::string>* langs = nullptr) {
    ParallelPair p;
    p.id = detail::require_string(j, "id");
    p.dir = direction_from_json(detail::require_field(j, "dir"), langs);
    if (!p.dir.english_paired())
      throw Error("parallel pair " + p.dir.pair_name() +
                  " must have exactly one English side");
    p.src_text = detail::require_string(j, "src_text");
    p.tgt_text = detail::require_string(j, "tgt_text");
    if (p.src_text.empty() || p.tgt_text.empty())
      throw Error("src_text and tgt_text must be nonempty");
    if (j.contains("scores")) {
      const Json& s = j["scores"];
      if (!s.is_object()) throw Error("field \"scores\" must be an object");
      for (auto it = s.begin(); it != s.end(); ++it) {
        if (!it.value().is_number())
          throw Error("score \"" + it.key() + "\" must be a number");
        const double v = it.value().get<double>();
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw Error("score \"" + it.key() + "\" = " + std::to_string(v) +
                      " is outside [0,1]");
        p.scores[it.key()] = v;
      }
    }
    return p;
  }

  static Json dump(const ParallelPair& p) {
    Json scores = Json::object();
    for (const auto& [k, v] : p.scores) scores[k] = v;
    return Json{{"id", p.id},
                {"dir", direction_to_json(p.dir)},
                {"src_text", p.src_text},
                {"tgt_text", p.tgt_text},
                {"scores", scores}};
  }
};

template <>
struct RecordCodec<Segment> {
  static constexpr const char* kind_name = "segment";

  static Segment parse(const Json& j, const std::set<std::string>* = nullptr) {
    Segment s;
    s.id = detail::require_string(j, "id");
    s.text = detail::require_string(j, "text");
    return s;
  }

  static Json dump(const Segment& s) {
    return Json{{"id", s.id}, {"text", s.text}};
  }
};

// --- Line-delimited record streams ----------------------------------------

template <typename T>
class JsonlReader {
 public:
  explicit JsonlReader(std::filesystem::path path,
                       const std::set<std::string>* langs = nullptr)
      : path_(std::move(path)), langs_(langs), in_(path_) {
    if (!in_.is_open())
      throw IoError("cannot open " + path_.string() + " for reading");
  }

  // Next record in file order, or nullopt at end of stream. Blank lines
  // are skipped; anything else malformed raises a positioned error.
  std::optional<T> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      try {
        const Json j = Json::parse(line);
        if (!j.is_object()) throw Error("record must be a JSON object");
        return RecordCodec<T>::parse(j, langs_);
      } catch (const Json::parse_error& e) {
        throw ParseError(path_.string(), line_no_, e.what());
      } catch (const Error& e) {
        throw ParseError(path_.string(), line_no_, e.what());
      }
    }
    return std::nullopt;
  }

  std::vector<T> read_all() {
    std::vector<T> out;
    while (auto r = next()) out.push_back(std::move(*r));
    return out;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::filesystem::path path_;
  const std::set<std::string>* langs_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path,
                            const std::set<std::string>* langs = nullptr) {
  return JsonlReader<T>(path, langs).read_all();
}

// Segments additionally require unique ids within one file.
inline std::vector<Segment> read_segments(const std::filesystem::path& path) {
  JsonlReader<Segment> reader(path);
  std::vector<Segment> out;
  std::set<std::string> seen;
  while (auto s = reader.next()) {
    if (!seen.insert(s->id).second)
      throw ParseError(path.string(), reader.line_no(),
                       "duplicate segment id \"" + s->id + "\"");
    out.push_back(std::move(*s));
  }
  return out;
}

template <typename T>
class JsonlWriter {
 public:
  explicit JsonlWriter(std::filesystem::path path)
      : path_(std::move(path)), out_(path_) {
    if (!out_.is_open())
      throw IoError("cannot open " + path_.string() + " for writing");
  }

  void write(const T& record) {
    out_ << RecordCodec<T>::dump(record).dump() << '\n';
    if (!out_) throw IoError("write failed on " + path_.string());
    ++count_;
  }

  void close() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw IoError("flush failed on " + path_.string());
  }

  std::size_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

template <typename T>
std::size_t write_records(const std::vector<T>& records,
                          const std::filesystem::path& path) {
  JsonlWriter<T> writer(path);
  for (const T& r : records) writer.write(r);
  writer.close();
  return writer.count();
}

}  // namespace mtkit
