#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mtkit/common.hpp"
#include "mtkit/records.hpp"

namespace mtkit {

// --- Threshold profile ------------------------------------------------------

struct ThresholdEntry {
  double min_perplexity = 0.0;
  double max_perplexity = 0.0;
  // Parallel-data thresholds are keyed by the non-English side, so the
  // English entry legitimately has none.
  std::optional<double> bicleaner_min;
  std::optional<double> kiwi_min;
};

class ThresholdProfile {
 public:
  void set(const std::string& lang, ThresholdEntry entry) {
    if (entry.min_perplexity >= entry.max_perplexity)
      throw Error("profile [" + lang + "]: min_perplexity must be < max");
    if (entry.min_perplexity < 0.0)
      throw Error("profile [" + lang + "]: thresholds must be nonnegative");
    for (const auto& t : {entry.bicleaner_min, entry.kiwi_min}) {
      if (t && (*t < 0.0 || *t > 1.0))
        throw Error("profile [" + lang + "]: score thresholds must be in [0,1]");
    }
    entries_[lang] = entry;
  }

  const ThresholdEntry& at(const std::string& lang) const {
    auto it = entries_.find(lang);
    if (it == entries_.end())
      throw Error("no threshold profile entry for language \"" + lang + "\"");
    return it->second;
  }

  bool has(const std::string& lang) const { return entries_.contains(lang); }
  const std::map<std::string, ThresholdEntry>& entries() const {
    return entries_;
  }

  // Canonical shipped defaults. Perplexity bounds were calibrated against an
  // external word-level LM, so absolute values will not match the built-in
  // character model; every bound stays configurable through profile files.
  static ThresholdProfile canonical() {
    ThresholdProfile p;
    p.set("en", {50, 516, std::nullopt, std::nullopt});
    p.set("de", {50, 611, 0.5, 0.75});
    p.set("fr", {50, 322, 0.5, 0.75});
    p.set("nl", {50, 649, 0.5, 0.75});
    p.set("es", {50, 275, 0.5, 0.75});
    p.set("pt", {50, 257, 0.5, 0.75});
    p.set("ru", {50, 334, 0.5, 0.75});
    p.set("zh", {50, 2041, 0.0, 0.75});
    p.set("ko", {50, 198, 0.5, 0.75});
    return p;
  }

 private:
  std::map<std::string, ThresholdEntry> entries_;
};

// Key-value profile file with one [lang] section per language:
//
//   [de]
//   min_perplexity = 50
//   max_perplexity = 611
//   bicleaner_min = 0.5
//   kiwi_min = 0.75
inline ThresholdProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw IoError("cannot open profile " + path.string());
  ThresholdProfile profile;
  std::string lang;
  std::map<std::string, double> kv;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (lang.empty()) return;
    ThresholdEntry e;
    auto take = [&](const char* key, bool required) -> std::optional<double> {
      auto it = kv.find(key);
      if (it == kv.end()) {
        if (required)
          throw Error("profile [" + lang + "] missing key \"" + key + "\"");
        return std::nullopt;
      }
      return it->second;
    };
    e.min_perplexity = *take("min_perplexity", true);
    e.max_perplexity = *take("max_perplexity", true);
    e.bicleaner_min = take("bicleaner_min", false);
    e.kiwi_min = take("kiwi_min", false);
    profile.set(lang, e);
    kv.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = normalize_whitespace(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      flush();
      lang = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || lang.empty())
      throw ParseError(path.string(), line_no, "expected \"key = value\"");
    const std::string key = normalize_whitespace(t.substr(0, eq));
    const std::string val = normalize_whitespace(t.substr(eq + 1));
    try {
      kv[key] = std::stod(val);
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_no, "bad number \"" + val + "\"");
    }
  }
  flush();
  return profile;
}

// --- Character n-gram language model ---------------------------------------

// Stand-in for an external word-level LM: character n-grams with add-k
// smoothing over the training alphabet plus one unknown symbol. Any string
// gets a finite positive perplexity.
class CharLM {
 public:
  static constexpr char32_t kBos = 0x110000;
  static constexpr char32_t kUnk = 0x110001;

  CharLM(int order, double smoothing_k)
      : order_(order), smoothing_k_(smoothing_k) {
    if (order < 1) throw Error("CharLM order must be >= 1");
    if (smoothing_k <= 0.0) throw Error("CharLM smoothing must be positive");
  }

  void add_text(std::string_view text) {
    const std::vector<char32_t> cps = utf8::decode(normalize_whitespace(text));
    if (cps.empty()) return;
    for (char32_t c : cps) alphabet_.insert(c);
    std::u32string ctx(static_cast<std::size_t>(order_ - 1), kBos);
    for (char32_t c : cps) {
      auto& entry = contexts_[ctx];
      ++entry.counts[c];
      ++entry.total;
      if (order_ > 1) {
        ctx.erase(ctx.begin());
        ctx.push_back(c);
      }
    }
    trained_ = true;
  }

  bool trained() const { return trained_; }
  int order() const { return order_; }
  double smoothing() const { return smoothing_k_; }
  // Alphabet size including the unknown symbol.
  std::size_t vocab_size() const { return alphabet_.size() + 1; }

  double probability(const std::u32string& context, char32_t next) const {
    const std::u32string ctx = map_context(context);
    const char32_t c = map_symbol(next);
    const double v = static_cast<double>(vocab_size());
    auto it = contexts_.find(ctx);
    if (it == contexts_.end()) return 1.0 / v;
    const auto& entry = it->second;
    auto cit = entry.counts.find(c);
    const double count = cit == entry.counts.end()
                             ? 0.0
                             : static_cast<double>(cit->second);
    return (count + smoothing_k_) /
           (static_cast<double>(entry.total) + smoothing_k_ * v);
  }

  double log_prob(std::string_view text) const {
    const std::vector<char32_t> cps = utf8::decode(normalize_whitespace(text));
    if (cps.empty()) throw Error("cannot score empty text");
    std::u32string ctx(static_cast<std::size_t>(order_ - 1), kBos);
    double lp = 0.0;
    for (char32_t c : cps) {
      lp += std::log(probability(ctx, c));
      if (order_ > 1) {
        ctx.erase(ctx.begin());
        ctx.push_back(map_symbol(c));
      }
    }
    return lp;
  }

  double perplexity(std::string_view text) const {
    const std::size_t n = utf8::decode(normalize_whitespace(text)).size();
    if (n == 0) throw Error("cannot score empty text");
    return std::exp(-log_prob(text) / static_cast<double>(n));
  }

  // All symbols the model can emit (alphabet plus unknown); the probability
  // of these continuations sums to 1 from any context.
  std::vector<char32_t> symbols() const {
    std::vector<char32_t> out(alphabet_.begin(), alphabet_.end());
    out.push_back(kUnk);
    return out;
  }

 private:
  struct ContextEntry {
    std::unordered_map<char32_t, std::uint64_t> counts;
    std::uint64_t total = 0;
  };

  char32_t map_symbol(char32_t c) const {
    return alphabet_.contains(c) || c == kBos ? c : kUnk;
  }

  std::u32string map_context(const std::u32string& context) const {
    std::u32string ctx = context;
    if (ctx.size() + 1 < static_cast<std::size_t>(order_))
      ctx.insert(ctx.begin(),
                 static_cast<std::size_t>(order_ - 1) - ctx.size(), kBos);
    else if (ctx.size() + 1 > static_cast<std::size_t>(order_))
      ctx.erase(ctx.begin(),
                ctx.begin() + static_cast<std::ptrdiff_t>(
                                  ctx.size() - (order_ - 1)));
    for (char32_t& c : ctx) c = map_symbol(c);
    return ctx;
  }

  int order_;
  double smoothing_k_;
  bool trained_ = false;
  std::set<char32_t> alphabet_;
  std::unordered_map<std::u32string, ContextEntry> contexts_;
};

inline CharLM train_char_lm(const std::vector<MonolingualDoc>& corpus,
                            const LangCode& lang, int order = 4,
                            double smoothing_k = 0.1) {
  CharLM lm(order, smoothing_k);
  for (const auto& doc : corpus) {
    if (doc.lang == lang) lm.add_text(doc.text);
  }
  if (!lm.trained())
    throw Error("empty training corpus for language \"" + lang.code + "\"");
  return lm;
}

// --- Filtering --------------------------------------------------------------

template <typename T>
struct FilterResult {
  std::vector<T> kept;
  std::vector<std::pair<T, std::string>> rejected;  // record + reason
};

// Normalizes whitespace once at ingestion and drops exact duplicates of the
// normalized text, keeping first occurrences in order.
inline std::vector<MonolingualDoc> normalize_and_dedup(
    const std::vector<MonolingualDoc>& docs, std::size_t* dropped = nullptr) {
  std::vector<MonolingualDoc> kept;
  std::unordered_set<std::string> seen;
  std::size_t dups = 0;
  for (const auto& doc : docs) {
    MonolingualDoc d = doc;
    d.text = normalize_whitespace(d.text);
    if (seen.insert(d.text).second) {
      kept.push_back(std::move(d));
    } else {
      ++dups;
    }
  }
  if (dropped) *dropped = dups;
  return kept;
}

// Perplexity band filter. A record's own perplexity score wins when present;
// otherwise the language's model computes one. "Below" is strict, so values
// equal to a bound pass.
inline FilterResult<MonolingualDoc> filter_monolingual(
    const std::vector<MonolingualDoc>& docs,
    const std::map<std::string, CharLM>& lms, const ThresholdProfile& profile) {
  FilterResult<MonolingualDoc> result;
  for (const auto& doc : docs) {
    const ThresholdEntry& bounds = profile.at(doc.lang.code);
    double ppl;
    if (doc.perplexity) {
      ppl = *doc.perplexity;
    } else {
      auto it = lms.find(doc.lang.code);
      if (it == lms.end())
        throw Error("doc " + doc.id + ": no perplexity score and no model for \"" +
                    doc.lang.code + "\"");
      ppl = it->second.perplexity(doc.text);
    }
    if (ppl < bounds.min_perplexity) {
      result.rejected.emplace_back(
          doc, "perplexity " + std::to_string(ppl) + " < min " +
                   std::to_string(bounds.min_perplexity));
    } else if (ppl > bounds.max_perplexity) {
      result.rejected.emplace_back(
          doc, "perplexity " + std::to_string(ppl) + " > max " +
                   std::to_string(bounds.max_perplexity));
    } else {
      result.kept.push_back(doc);
    }
  }
  return result;
}

// Quality filter for parallel pairs. Thresholds come from the non-English
// side's profile entry; boundary values are kept.
inline FilterResult<ParallelPair> filter_parallel(
    const std::vector<ParallelPair>& pairs, const ThresholdProfile& profile) {
  FilterResult<ParallelPair> result;
  for (const auto& pair : pairs) {
    const std::string key = pair.dir.non_english().code;
    const ThresholdEntry& bounds = profile.at(key);
    if (!bounds.bicleaner_min || !bounds.kiwi_min)
      throw Error("profile [" + key + "] has no parallel-data thresholds");
    auto score = [&](const char* name) {
      auto it = pair.scores.find(name);
      if (it == pair.scores.end())
        throw Error("pair " + pair.id + ": missing required score \"" + name +
                    "\"");
      return it->second;
    };
    const double bicleaner = score("bicleaner");
    const double kiwi = score("kiwi22");
    std::string reason;
    if (bicleaner < *bounds.bicleaner_min)
      reason = "bicleaner " + std::to_string(bicleaner) + " < " +
               std::to_string(*bounds.bicleaner_min);
    if (kiwi < *bounds.kiwi_min) {
      if (!reason.empty()) reason += "; ";
      reason += "kiwi22 " + std::to_string(kiwi) + " < " +
                std::to_string(*bounds.kiwi_min);
    }
    if (reason.empty()) {
      result.kept.push_back(pair);
    } else {
      result.rejected.emplace_back(pair, reason);
    }
  }
  return result;
}

template <typename T>
std::size_t write_rejected(const std::vector<std::pair<T, std::string>>& recs,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out.is_open()) throw IoError("cannot open " + path.string());
  for (const auto& [record, reason] : recs) {
    Json j = RecordCodec<T>::dump(record);
    j["reason"] = reason;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed on " + path.string());
  return recs.size();
}

// --- Language identification -------------------------------------------------
//
// Rank-order character n-gram profiles (Cavnar-Trenkle). Each language keeps
// its top_k most frequent n-grams ranked by frequency; classification ranks
// the text the same way and sums rank displacements.

class LangIdModel {
 public:
  explicit LangIdModel(int max_n = 3, std::size_t top_k = 300)
      : max_n_(max_n), top_k_(top_k) {}

  void add_training_text(const LangCode& lang, std::string_view text) {
    accumulate(freqs_[lang.code], text);
  }

  void finalize() {
    for (auto& [lang, freq] : freqs_) ranks_[lang] = to_ranks(freq);
    if (ranks_.empty()) throw Error("language-id model has no training data");
  }

  std::pair<LangCode, double> classify(std::string_view text) const {
    if (ranks_.empty()) throw Error("language-id model not finalized");
    if (normalize_whitespace(text).empty())
      throw Error("cannot classify empty text");
    std::map<std::u32string, std::uint64_t> freq;
    accumulate(freq, text);
    const auto text_ranks = to_ranks(freq);
    if (text_ranks.empty()) throw Error("cannot classify empty text");

    std::string best_lang;
    double best_dist = 0.0;
    for (const auto& [lang, profile] : ranks_) {
      double dist = 0.0;
      for (const auto& [gram, rank] : text_ranks) {
        auto it = profile.find(gram);
        if (it == profile.end()) {
          dist += static_cast<double>(top_k_);
        } else {
          dist += std::abs(static_cast<double>(rank) -
                           static_cast<double>(it->second));
        }
      }
      // Lexicographic tie-break keeps the decision deterministic.
      if (best_lang.empty() || dist < best_dist ||
          (dist == best_dist && lang < best_lang)) {
        best_lang = lang;
        best_dist = dist;
      }
    }
    const double max_dist =
        static_cast<double>(text_ranks.size()) * static_cast<double>(top_k_);
    const double confidence =
        max_dist > 0.0 ? std::clamp(1.0 - best_dist / max_dist, 0.0, 1.0) : 0.0;
    return {LangCode{best_lang}, confidence};
  }

  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    for (const auto& [lang, _] : ranks_) out.push_back(lang);
    return out;
  }

 private:
  void accumulate(std::map<std::u32string, std::uint64_t>& freq,
                  std::string_view text) const {
    const std::vector<char32_t> cps = utf8::decode(normalize_whitespace(text));
    for (int n = 1; n <= max_n_; ++n) {
      if (cps.size() < static_cast<std::size_t>(n)) break;
      for (std::size_t i = 0; i + n <= cps.size(); ++i)
        ++freq[std::u32string(cps.begin() + i, cps.begin() + i + n)];
    }
  }

  std::map<std::u32string, std::size_t> to_ranks(
      const std::map<std::u32string, std::uint64_t>& freq) const {
    std::vector<std::pair<std::u32string, std::uint64_t>> items(freq.begin(),
                                                                freq.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    if (items.size() > top_k_) items.resize(top_k_);
    std::map<std::u32string, std::size_t> ranks;
    for (std::size_t i = 0; i < items.size(); ++i) ranks[items[i].first] = i;
    return ranks;
  }

  int max_n_;
  std::size_t top_k_;
  std::map<std::string, std::map<std::u32string, std::uint64_t>> freqs_;
  std::map<std::string, std::map<std::u32string, std::size_t>> ranks_;
};

inline std::pair<LangCode, double> classify_language(std::string_view text,
                                                     const LangIdModel& model) {
  return model.classify(text);
}

}  // namespace mtkit
