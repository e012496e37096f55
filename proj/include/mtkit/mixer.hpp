#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mtkit/records.hpp"
#include "mtkit/rng.hpp"
#include "mtkit/tokenizer.hpp"

namespace mtkit {

struct MixSpec {
  std::uint64_t total_budget = 0;  // tokens
  double parallel_fraction = 1.0 / 3.0;
  std::vector<LangCode> languages;
  std::uint64_t seed = 0;
};

struct MixBucket {
  std::string name;     // "mono:de" or "par:en-de"
  std::uint64_t target = 0;
  std::uint64_t realized = 0;
  std::size_t records = 0;
};

struct MixPlan {
  std::uint64_t total_budget = 0;
  std::uint64_t monolingual_budget = 0;
  std::uint64_t parallel_budget = 0;
  std::vector<MixBucket> monolingual;  // one per language
  std::vector<MixBucket> parallel;     // one per direction
};

// Splits the token budget: (1 - parallel_fraction) over the languages,
// the rest over the 2*(|languages|-1) English-paired directions. Floor
// division with the remainder spread one token at a time keeps the bucket
// targets summing to the budget exactly.
inline MixPlan plan_mix(const MixSpec& spec) {
  if (spec.total_budget == 0) throw Error("mix budget must be positive");
  if (spec.parallel_fraction < 0.0 || spec.parallel_fraction > 1.0)
    throw Error("parallel_fraction must be in [0,1]");
  if (spec.languages.empty()) throw Error("language list is empty");

  MixPlan plan;
  plan.total_budget = spec.total_budget;
  plan.monolingual_budget = static_cast<std::uint64_t>(
      std::llround((1.0 - spec.parallel_fraction) *
                   static_cast<double>(spec.total_budget)));
  plan.parallel_budget = spec.total_budget - plan.monolingual_budget;

  auto split = [](std::uint64_t budget, const std::vector<std::string>& names) {
    std::vector<MixBucket> buckets;
    const std::uint64_t n = names.size();
    for (std::uint64_t i = 0; i < n; ++i) {
      MixBucket b;
      b.name = names[i];
      b.target = budget / n + (i < budget % n ? 1 : 0);
      buckets.push_back(std::move(b));
    }
    return buckets;
  };

  std::vector<std::string> mono_names;
  for (const auto& lang : spec.languages) mono_names.push_back("mono:" + lang.code);
  plan.monolingual = split(plan.monolingual_budget, mono_names);

  if (plan.parallel_budget > 0) {
    bool has_en = false;
    for (const auto& lang : spec.languages) has_en |= lang.code == "en";
    if (!has_en || spec.languages.size() < 2)
      throw Error("parallel mixing needs English plus at least one other language");
    std::vector<std::string> dir_names;
    for (const auto& lang : spec.languages) {
      if (lang.code == "en") continue;
      dir_names.push_back("par:en-" + lang.code);
      dir_names.push_back("par:" + lang.code + "-en");
    }
    plan.parallel = split(plan.parallel_budget, dir_names);
  }
  return plan;
}

using MixedRecord = std::variant<MonolingualDoc, ParallelPair>;

struct MixResult {
  std::vector<MixedRecord> records;
  MixPlan plan;  // with realized counts filled in
};

inline std::uint64_t record_tokens(const MonolingualDoc& d,
                                   const Tokenizer& tok) {
  return tok.count(d.text);
}

// Parallel pairs contribute both sides to the token mass.
inline std::uint64_t record_tokens(const ParallelPair& p,
                                   const Tokenizer& tok) {
  return tok.count(p.src_text) + tok.count(p.tgt_text);
}

// Realizes a plan against per-bucket record pools. Each bucket stops at the
// first record that reaches or crosses its target (that record is kept), so
// overshoot is bounded by one record. The concatenation is then shuffled by
// a seeded permutation.
inline MixResult sample_mix(
    const MixPlan& plan,
    const std::map<std::string, std::vector<MonolingualDoc>>& mono,
    const std::map<std::string, std::vector<ParallelPair>>& parallel,
    const Tokenizer& tok, std::uint64_t seed) {
  MixResult result;
  result.plan = plan;

  auto fill = [&](MixBucket& bucket, const auto& pool_map,
                  const std::string& key) {
    auto it = pool_map.find(key);
    const auto* pool = it == pool_map.end() ? nullptr : &it->second;
    std::size_t i = 0;
    while (bucket.realized < bucket.target) {
      if (!pool || i >= pool->size()) {
        throw Error("bucket " + bucket.name + " exhausted: short by " +
                    std::to_string(bucket.target - bucket.realized) +
                    " tokens");
      }
      const auto& rec = (*pool)[i++];
      bucket.realized += record_tokens(rec, tok);
      ++bucket.records;
      result.records.emplace_back(rec);
    }
  };

  for (auto& bucket : result.plan.monolingual)
    fill(bucket, mono, bucket.name.substr(5));
  for (auto& bucket : result.plan.parallel)
    fill(bucket, parallel, bucket.name.substr(4));

  Rng rng(derive_seed(seed, "mix.shuffle"));
  rng.shuffle(result.records);
  return result;
}

inline Json plan_to_json(const MixPlan& plan) {
  auto buckets = [](const std::vector<MixBucket>& bs) {
    Json arr = Json::array();
    for (const auto& b : bs)
      arr.push_back(Json{{"name", b.name},
                         {"target", b.target},
                         {"realized", b.realized},
                         {"records", b.records}});
    return arr;
  };
  return Json{{"total_budget", plan.total_budget},
              {"monolingual_budget", plan.monolingual_budget},
              {"parallel_budget", plan.parallel_budget},
              {"monolingual", buckets(plan.monolingual)},
              {"parallel", buckets(plan.parallel)}};
}

inline Json mixed_record_to_json(const MixedRecord& rec) {
  if (std::holds_alternative<MonolingualDoc>(rec)) {
    Json j = RecordCodec<MonolingualDoc>::dump(std::get<MonolingualDoc>(rec));
    j["kind"] = "mono";
    return j;
  }
  Json j = RecordCodec<ParallelPair>::dump(std::get<ParallelPair>(rec));
  j["kind"] = "parallel";
  return j;
}

}  // namespace mtkit
