#pragma once

// Word-order probing sets built from NLI pairs:
//   constituency  permute the words inside every maximal tagged phrase of
//                 length x in the premise; the label is kept.
//   semantic-role swap the agent (ARG0) and patient (ARG1) spans around the
//                 first qualifying verb of the premise, else of the
//                 hypothesis; entailment pairs become contradictions.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pelab/corpora.hpp"
#include "pelab/tree.hpp"

namespace pelab::shuffler {

enum class Mode { kConstituency, kSemanticRole };

std::string to_string(Mode mode);
// "constituency" or "semantic-role".
Mode parse_mode(const std::string& text);

// Subject/object pronoun pairs. Lookup is case-insensitive; the replacement
// is written in the form stored in the map.
class CaseMap {
 public:
  CaseMap() = default;
  explicit CaseMap(const std::vector<std::pair<std::string, std::string>>& pairs);

  static CaseMap defaults();
  // One "subject object" pair per line; '#' starts a comment.
  static CaseMap load(const std::filesystem::path& path);

  std::optional<std::string> lookup(const std::string& word) const;
  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
  std::map<std::string, std::string> forward_;  // lowercased key -> replacement
};

std::set<std::string> default_aux_verbs();
std::set<std::string> default_phrase_tags();
// One lowercased word per line; '#' starts a comment.
std::set<std::string> load_word_list(const std::filesystem::path& path);

struct ShuffleConfig {
  Mode mode = Mode::kConstituency;
  std::size_t x = 3;
  std::set<std::string> phrase_tags = default_phrase_tags();
  std::uint64_t seed = 42;
  std::set<std::string> aux_verbs = default_aux_verbs();
  CaseMap case_map = CaseMap::defaults();

  void validate() const;
};

// Source of phrase permutations. perm[k] is the index of the input token
// placed at output position k.
class Permuter {
 public:
  virtual ~Permuter() = default;
  virtual std::vector<std::size_t> next(std::size_t length) = 0;
};

// Uniform over the non-identity permutations of the requested length.
class RandomPermuter : public Permuter {
 public:
  explicit RandomPermuter(std::mt19937_64 rng) : rng_(std::move(rng)) {}
  std::vector<std::size_t> next(std::size_t length) override;

 private:
  std::mt19937_64 rng_;
};

// Replays a fixed list; throws ValidationError when exhausted or when the
// next permutation has the wrong length.
class FixedPermuter : public Permuter {
 public:
  explicit FixedPermuter(std::vector<std::vector<std::size_t>> perms);
  std::vector<std::size_t> next(std::size_t length) override;
  std::size_t remaining() const { return queue_.size(); }

 private:
  std::deque<std::vector<std::size_t>> queue_;
};

// Per-sentence generator derived from (seed, index) only, so results do not
// depend on processing order.
std::mt19937_64 sentence_rng(std::uint64_t seed, std::size_t index);

// Spans of constituents whose tag is in `tags` and that cover exactly x
// leaves. Spans nested in another returned span are dropped; the rest come
// back sorted.
std::vector<Span> find_phrases(const ConstituencyTree& tree, std::size_t x,
                               const std::set<std::string>& tags);

// Applies one permutation from `permuter`. Throws ValidationError for spans
// shorter than 2 or an invalid permutation.
std::vector<std::string> shuffle_phrase(std::span<const std::string> tokens, Permuter& permuter);

enum class NliLabel { kEntailment, kNeutral, kContradiction };
std::string to_string(NliLabel label);
NliLabel parse_nli_label(const std::string& text);

struct Provenance {
  Mode mode = Mode::kConstituency;
  std::string side = "premise";  // which sentence was rewritten
  std::vector<Span> spans;       // affected spans, original coordinates
  std::size_t source_line = 0;   // 1-based line of the input pair
  bool needs_review = false;
};

struct NliPair {
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  NliLabel label = NliLabel::kEntailment;
  std::optional<Provenance> provenance;
};

struct ConstituencyResult {
  std::vector<std::string> tokens;
  std::vector<Span> spans;
};

// Shuffles every phrase returned by find_phrases. A phrase made of one
// repeated word is left alone; otherwise permutations are redrawn until the
// phrase changes. Returns nullopt when nothing changed. Throws
// ValidationError when the tree leaves differ from the tokens.
std::optional<ConstituencyResult> constituency_shuffle_tokens(
    const std::vector<std::string>& tokens, const ConstituencyTree& tree,
    const ShuffleConfig& cfg, Permuter& permuter);

std::optional<NliPair> constituency_shuffle(const NliPair& pair, const ConstituencyTree& premise_tree,
                                            const ShuffleConfig& cfg, Permuter& permuter);

struct SrResult {
  std::vector<std::string> tokens;
  std::size_t verb_index = 0;
  Span agent;
  Span patient;
};

// Walks the predicates in order, skipping auxiliaries and predicates without
// both ARG0 and ARG1. For the first remaining one, swaps the two spans and
// case-maps the moved words. Throws ValidationError if those spans overlap.
std::optional<SrResult> shuffle_sr(const SrlFrame& frame, const ShuffleConfig& cfg);

// One NLI JSONL record {"premise": str, "hypothesis": str, "label": str}.
struct NliLine {
  std::size_t line_number = 0;
  std::optional<NliPair> pair;
  std::string error;
};
std::vector<NliLine> parse_nli_jsonl(const std::string& text);
std::vector<NliLine> load_nli_jsonl(const std::filesystem::path& path);

// Inputs aligned by line with the NLI file. Constituency mode reads
// `premise_trees`; semantic-role mode reads the two SRL lists.
struct Annotations {
  std::vector<TreeLine> premise_trees;
  std::vector<std::optional<SrlFrame>> premise_srl;
  std::vector<std::optional<SrlFrame>> hypothesis_srl;
};

struct Skip {
  std::size_t line_number = 0;
  std::string reason;  // short category, counted in BuildStats::reasons
  std::string detail;
};

struct BuildStats {
  std::size_t emitted = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> reasons;
  std::vector<Skip> skips;
};

struct BuildResult {
  std::vector<NliPair> pairs;
  BuildStats stats;
};

// Processes every line independently (on up to `jobs` threads) and collects
// results in input order. Missing or bad annotations become skips.
BuildResult build_dataset(const std::vector<NliLine>& lines, const Annotations& ann,
                          const ShuffleConfig& cfg, std::size_t jobs = 1);

// One JSON object per emitted pair, tokens joined by single spaces.
std::string to_jsonl(const std::vector<NliPair>& pairs);
std::string stats_json(const BuildStats& stats);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace pelab::shuffler
