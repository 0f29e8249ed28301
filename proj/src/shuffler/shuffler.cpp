#include "pelab/shuffler.hpp"

#include <algorithm>
#include <numeric>

#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"

namespace pelab::shuffler {

namespace {

constexpr int kMaxRedraws = 10000;

std::string strip_comment(const std::string& line) {
  return line.substr(0, line.find('#'));
}

void collect_phrases(const ConstituencyTree& node, std::size_t x, const std::set<std::string>& tags,
                     std::vector<Span>& out) {
  if (node.leaf) return;
  if (node.span.length() == x && tags.count(node.label) > 0) out.push_back(node.span);
  for (const auto& child : node.children) collect_phrases(child, x, tags, out);
}

void check_permutation(const std::vector<std::size_t>& perm, std::size_t length) {
  if (perm.size() != length) {
    throw ValidationError("permutation of length " + std::to_string(perm.size()) +
                          " for a span of length " + std::to_string(length));
  }
  std::vector<bool> seen(length, false);
  for (std::size_t p : perm) {
    if (p >= length || seen[p]) throw ValidationError("not a permutation");
    seen[p] = true;
  }
}

}  // namespace

std::string to_string(Mode mode) {
  return mode == Mode::kConstituency ? "constituency" : "semantic-role";
}

Mode parse_mode(const std::string& text) {
  if (text == "constituency") return Mode::kConstituency;
  if (text == "semantic-role" || text == "sr") return Mode::kSemanticRole;
  throw ValidationError("unknown shuffle mode '" + text + "' (constituency | semantic-role)");
}

CaseMap::CaseMap(const std::vector<std::pair<std::string, std::string>>& pairs) : pairs_(pairs) {
  for (const auto& [subj, obj] : pairs_) {
    for (const auto& [from, to] : {std::pair{subj, obj}, std::pair{obj, subj}}) {
      auto [it, inserted] = forward_.emplace(to_lower(from), to);
      if (!inserted && it->second != to) {
        throw ValidationError("case map lists '" + from + "' twice");
      }
    }
  }
}

CaseMap CaseMap::defaults() {
  return CaseMap({{"I", "me"}, {"he", "him"}, {"she", "her"}, {"we", "us"}, {"they", "them"},
                  {"who", "whom"}});
}

CaseMap CaseMap::load(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  const auto lines = split_lines(read_text_file(path));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto fields = split_ws(strip_comment(lines[k]));
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw FormatError(path.string() + ":" + std::to_string(k + 1) +
                        ": expected 'subject object'");
    }
    pairs.emplace_back(fields[0], fields[1]);
  }
  return CaseMap(pairs);
}

std::optional<std::string> CaseMap::lookup(const std::string& word) const {
  auto it = forward_.find(to_lower(word));
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> default_aux_verbs() {
  return {"be",   "is",    "are",   "was",   "were",   "been", "being", "am",
          "do",   "does",  "did",   "have",  "has",    "had",  "will",  "would",
          "can",  "could", "may",   "might", "shall",  "should", "must"};
}

std::set<std::string> default_phrase_tags() { return {"NP", "VP", "PP", "ADVP", "ADJP"}; }

std::set<std::string> load_word_list(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& line : split_lines(read_text_file(path))) {
    for (const auto& w : split_ws(strip_comment(line))) out.insert(to_lower(w));
  }
  return out;
}

void ShuffleConfig::validate() const {
  if (mode == Mode::kConstituency) {
    if (x < 2) throw ValidationError("phrase length x must be >= 2");
    if (phrase_tags.empty()) throw ValidationError("phrase tag set is empty");
  }
}

std::vector<std::size_t> RandomPermuter::next(std::size_t length) {
  if (length < 2) throw ValidationError("cannot shuffle a span shorter than 2");
  std::vector<std::size_t> perm(length);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const std::vector<std::size_t> identity = perm;
  do {
    std::shuffle(perm.begin(), perm.end(), rng_);
  } while (perm == identity);
  return perm;
}

FixedPermuter::FixedPermuter(std::vector<std::vector<std::size_t>> perms)
    : queue_(perms.begin(), perms.end()) {}

std::vector<std::size_t> FixedPermuter::next(std::size_t length) {
  if (queue_.empty()) throw ValidationError("no injected permutation left");
  auto perm = std::move(queue_.front());
  queue_.pop_front();
  check_permutation(perm, length);
  return perm;
}

std::mt19937_64 sentence_rng(std::uint64_t seed, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Span> find_phrases(const ConstituencyTree& tree, std::size_t x,
                               const std::set<std::string>& tags) {
  std::vector<Span> all;
  collect_phrases(tree, x, tags, all);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<Span> out;
  for (const Span& s : all) {
    const bool nested = std::any_of(all.begin(), all.end(), [&](const Span& o) {
      return o != s && o.contains(s);
    });
    if (!nested) out.push_back(s);
  }
  return out;
}

std::vector<std::string> shuffle_phrase(std::span<const std::string> tokens, Permuter& permuter) {
  if (tokens.size() < 2) throw ValidationError("cannot shuffle a span shorter than 2");
  const auto perm = permuter.next(tokens.size());
  check_permutation(perm, tokens.size());
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (std::size_t p : perm) out.push_back(tokens[p]);
  return out;
}

std::optional<ConstituencyResult> constituency_shuffle_tokens(
    const std::vector<std::string>& tokens, const ConstituencyTree& tree,
    const ShuffleConfig& cfg, Permuter& permuter) {
  cfg.validate();
  if (tree.leaves() != tokens) {
    throw ValidationError("tree leaves do not match the sentence tokens");
  }
  ConstituencyResult res;
  res.tokens = tokens;
  for (const Span& span : find_phrases(tree, cfg.x, cfg.phrase_tags)) {
    const auto first = tokens.begin() + static_cast<std::ptrdiff_t>(span.begin);
    const auto last = tokens.begin() + static_cast<std::ptrdiff_t>(span.end);
    const std::vector<std::string> original(first, last);
    if (std::adjacent_find(original.begin(), original.end(), std::not_equal_to<>()) ==
        original.end()) {
      continue;
    }
    std::vector<std::string> shuffled;
    int draws = 0;
    do {
      if (++draws > kMaxRedraws) throw ValidationError("could not find a changing permutation");
      shuffled = shuffle_phrase(original, permuter);
    } while (shuffled == original);
    std::copy(shuffled.begin(), shuffled.end(),
              res.tokens.begin() + static_cast<std::ptrdiff_t>(span.begin));
    res.spans.push_back(span);
  }
  if (res.spans.empty()) return std::nullopt;
  return res;
}

std::optional<NliPair> constituency_shuffle(const NliPair& pair, const ConstituencyTree& premise_tree,
                                            const ShuffleConfig& cfg, Permuter& permuter) {
  auto res = constituency_shuffle_tokens(pair.premise, premise_tree, cfg, permuter);
  if (!res) return std::nullopt;
  NliPair out = pair;
  out.premise = std::move(res->tokens);
  Provenance prov;
  prov.mode = Mode::kConstituency;
  prov.side = "premise";
  prov.spans = std::move(res->spans);
  if (pair.provenance) prov.source_line = pair.provenance->source_line;
  out.provenance = std::move(prov);
  return out;
}

std::optional<SrResult> shuffle_sr(const SrlFrame& frame, const ShuffleConfig& cfg) {
  frame.validate();
  for (const SrlPredicate& pred : frame.frames) {
    if (cfg.aux_verbs.count(to_lower(frame.tokens[pred.verb_index])) > 0) continue;
    auto agent_it = pred.roles.find("ARG0");
    auto patient_it = pred.roles.find("ARG1");
    if (agent_it == pred.roles.end() || patient_it == pred.roles.end()) continue;
    const Span agent = agent_it->second;
    const Span patient = patient_it->second;
    if (agent.overlaps(patient)) {
      throw ValidationError("ARG0 [" + std::to_string(agent.begin) + "," +
                            std::to_string(agent.end) + ") overlaps ARG1 [" +
                            std::to_string(patient.begin) + "," + std::to_string(patient.end) +
                            ")");
    }
    const Span& left = agent.begin < patient.begin ? agent : patient;
    const Span& right = agent.begin < patient.begin ? patient : agent;
    const auto& t = frame.tokens;
    auto at = [&](std::size_t k) { return t.begin() + static_cast<std::ptrdiff_t>(k); };

    SrResult res;
    res.verb_index = pred.verb_index;
    res.agent = agent;
    res.patient = patient;
    res.tokens.insert(res.tokens.end(), t.begin(), at(left.begin));
    res.tokens.insert(res.tokens.end(), at(right.begin), at(right.end));
    res.tokens.insert(res.tokens.end(), at(left.end), at(right.begin));
    res.tokens.insert(res.tokens.end(), at(left.begin), at(left.end));
    res.tokens.insert(res.tokens.end(), at(right.end), t.end());

    // Case-map the words that moved: the right span now starts at
    // left.begin, the left span now ends at right.end.
    auto remap = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        if (auto m = cfg.case_map.lookup(res.tokens[k])) res.tokens[k] = *m;
      }
    };
    remap(left.begin, left.begin + right.length());
    remap(right.end - left.length(), right.end);
    return res;
  }
  return std::nullopt;
}

std::string to_string(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kNeutral:
      return "neutral";
    case NliLabel::kContradiction:
      return "contradiction";
  }
  return "entailment";
}

NliLabel parse_nli_label(const std::string& text) {
  if (text == "entailment") return NliLabel::kEntailment;
  if (text == "neutral") return NliLabel::kNeutral;
  if (text == "contradiction") return NliLabel::kContradiction;
  throw ValidationError("unknown NLI label '" + text + "'");
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) out += ' ';
    out += tokens[k];
  }
  return out;
}

}  // namespace pelab::shuffler
