#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "safn/core/hash.hpp"
#include "safn/corpus/manifest.hpp"

namespace safn {

/// S1 single speaker, S2 multi-speaker, S3 speaker adaptation, S4 speaker independent.
enum class Scenario { S1, S2, S3, S4 };

inline std::string to_string(Scenario s) {
  static const char* names[] = {"S1", "S2", "S3", "S4"};
  return names[static_cast<int>(s)];
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "S1") return Scenario::S1;
  if (s == "S2") return Scenario::S2;
  if (s == "S3") return Scenario::S3;
  if (s == "S4") return Scenario::S4;
  throw ConfigError("unknown scenario '" + s + "' (expected S1|S2|S3|S4)");
}

struct ScenarioSpec {
  Scenario kind = Scenario::S1;
  std::string dataset;
  std::optional<std::string> target_speaker;
  std::uint64_t seed = 0;
};

struct SplitAssignment {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> fine_tune;
  std::vector<std::string> test;

  std::size_t total() const { return train.size() + validation.size() + fine_tune.size() + test.size(); }
};

class LeakageError : public DataError {
 public:
  using DataError::DataError;
};

/// Deterministic Fisher-Yates; independent of the standard library's
/// distribution implementations.
template <class Item>
void seeded_shuffle(std::vector<Item>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

namespace detail {

inline std::vector<std::string> shuffled_ids_of(const CorpusManifest& m, const std::string& speaker,
                                                std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto* u : m.of_speaker(speaker)) ids.push_back(u->id);
  std::sort(ids.begin(), ids.end());
  seeded_shuffle(ids, seed ^ fnv1a(speaker));
  return ids;
}

// Moves floor(n * num / den) ids from the back of `ids` into `out`.
inline void take_fraction(std::vector<std::string>& ids, std::size_t total, int num, int den,
                          std::vector<std::string>& out) {
  const std::size_t k = total * static_cast<std::size_t>(num) / static_cast<std::size_t>(den);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(ids.back());
    ids.pop_back();
  }
}

inline void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace detail

inline void validate_scenario(const CorpusManifest& m, const ScenarioSpec& s) {
  if (s.target_speaker && !m.has_speaker(*s.target_speaker))
    throw ConfigError("target speaker " + *s.target_speaker + " is not in manifest " + m.name);
  switch (s.kind) {
    case Scenario::S1:
      if (m.speakers.size() != 1 && !s.target_speaker)
        throw ConfigError("S1 needs a single-speaker corpus or a target speaker (manifest has " +
                          std::to_string(m.speakers.size()) + " speakers)");
      break;
    case Scenario::S2:
      break;
    case Scenario::S3:
    case Scenario::S4:
      if (!s.target_speaker) throw ConfigError(to_string(s.kind) + " requires a target speaker");
      if (m.speakers.size() < 2) throw ConfigError(to_string(s.kind) + " requires at least two speakers");
      break;
  }
}

/// Seeded shuffle per speaker, then proportional cuts. Validation and test
/// (or the 20% held-back share) take floor(n * fraction); the remainder goes to
/// train (or fine_tune for the S3 target speaker).
inline SplitAssignment make_splits(const CorpusManifest& m, const ScenarioSpec& s) {
  validate_scenario(m, s);
  SplitAssignment out;
  auto speakers = m.speakers;
  std::sort(speakers.begin(), speakers.end());
  for (const auto& spk : speakers) {
    const bool is_target = s.target_speaker && *s.target_speaker == spk;
    if (s.kind == Scenario::S1 && s.target_speaker && !is_target) continue;
    auto ids = detail::shuffled_ids_of(m, spk, s.seed);
    const std::size_t n = ids.size();
    switch (s.kind) {
      case Scenario::S1:
      case Scenario::S2:
        detail::take_fraction(ids, n, 1, 10, out.test);
        detail::take_fraction(ids, n, 1, 10, out.validation);
        detail::append(out.train, ids);
        break;
      case Scenario::S3:
        if (is_target) {
          detail::take_fraction(ids, n, 2, 10, out.test);
          detail::append(out.fine_tune, ids);
        } else {
          detail::take_fraction(ids, n, 2, 10, out.validation);
          detail::append(out.train, ids);
        }
        break;
      case Scenario::S4:
        if (is_target) {
          detail::append(out.test, ids);
        } else {
          detail::take_fraction(ids, n, 2, 10, out.validation);
          detail::append(out.train, ids);
        }
        break;
    }
  }
  return out;
}

/// Hard failure when a split violates the scenario's isolation rules: lists
/// must be pairwise disjoint, and for S3/S4 the target speaker may appear
/// only on the fine-tune/test side.
inline void check_no_leakage(const CorpusManifest& m, const ScenarioSpec& s, const SplitAssignment& split) {
  std::map<std::string, std::string> speaker_of;
  for (const auto& u : m.utterances) speaker_of[u.id] = u.speaker_id;
  std::set<std::string> seen;
  auto visit = [&](const std::vector<std::string>& ids, const char* name, bool training_side) {
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw LeakageError("utterance " + id + " assigned to more than one split");
      auto it = speaker_of.find(id);
      if (it == speaker_of.end()) throw LeakageError("split references unknown utterance " + id);
      if (training_side && s.target_speaker && (s.kind == Scenario::S3 || s.kind == Scenario::S4) &&
          it->second == *s.target_speaker)
        throw LeakageError(std::string("target speaker ") + *s.target_speaker + " leaked into the " + name +
                           " split via " + id);
    }
  };
  visit(split.train, "train", true);
  visit(split.validation, "validation", true);
  visit(split.fine_tune, "fine_tune", s.kind == Scenario::S4);
  visit(split.test, "test", false);
}

}  // namespace safn
