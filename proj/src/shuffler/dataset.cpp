#include <variant>

#include "json.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"
#include "pelab/parallel.hpp"
#include "pelab/shuffler.hpp"

namespace pelab::shuffler {

namespace {

using ordered_json = nlohmann::ordered_json;
using Outcome = std::variant<NliPair, Skip>;

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

Skip skip(std::size_t line, std::string reason, std::string detail = {}) {
  return Skip{line, std::move(reason), std::move(detail)};
}

Outcome run_constituency(const NliLine& line, std::size_t index, const Annotations& ann,
                         const ShuffleConfig& cfg) {
  const NliPair& pair = *line.pair;
  if (index >= ann.premise_trees.size()) return skip(line.line_number, "missing tree");
  const TreeLine& tl = ann.premise_trees[index];
  if (!tl.ok) return skip(line.line_number, "tree parse error", tl.error);
  if (tl.tree.leaves() != pair.premise) return skip(line.line_number, "tree/token mismatch");
  if (find_phrases(tl.tree, cfg.x, cfg.phrase_tags).empty()) {
    return skip(line.line_number, "no matching phrase");
  }
  RandomPermuter permuter(sentence_rng(cfg.seed, line.line_number));
  NliPair tagged = pair;
  tagged.provenance = Provenance{};
  tagged.provenance->source_line = line.line_number;
  auto out = constituency_shuffle(tagged, tl.tree, cfg, permuter);
  if (!out) return skip(line.line_number, "unchanged");
  return std::move(*out);
}

// Returns the rewritten sentence or a failure reason for one side.
std::variant<SrResult, Skip> sr_side(const std::vector<std::string>& sentence,
                                     const std::vector<std::optional<SrlFrame>>& srl,
                                     std::size_t index, std::size_t line, const ShuffleConfig& cfg) {
  if (index >= srl.size() || !srl[index]) return skip(line, "missing srl");
  const SrlFrame& frame = *srl[index];
  if (frame.tokens != sentence) return skip(line, "srl/token mismatch");
  try {
    auto res = shuffle_sr(frame, cfg);
    if (!res) return skip(line, "no qualifying verb");
    return std::move(*res);
  } catch (const ValidationError& e) {
    return skip(line, "invalid roles", e.what());
  }
}

Outcome run_semantic_role(const NliLine& line, std::size_t index, const Annotations& ann,
                          const ShuffleConfig& cfg) {
  const NliPair& pair = *line.pair;
  if (pair.label != NliLabel::kEntailment) return skip(line.line_number, "not entailment");
  std::optional<Skip> first_error;
  for (const bool premise_side : {true, false}) {
    const auto& sentence = premise_side ? pair.premise : pair.hypothesis;
    const auto& srl = premise_side ? ann.premise_srl : ann.hypothesis_srl;
    auto side = sr_side(sentence, srl, index, line.line_number, cfg);
    if (auto* res = std::get_if<SrResult>(&side)) {
      NliPair out = pair;
      (premise_side ? out.premise : out.hypothesis) = std::move(res->tokens);
      out.label = NliLabel::kContradiction;
      Provenance prov;
      prov.mode = Mode::kSemanticRole;
      prov.side = premise_side ? "premise" : "hypothesis";
      prov.spans = {res->agent, res->patient};
      prov.source_line = line.line_number;
      prov.needs_review = true;
      out.provenance = std::move(prov);
      return out;
    }
    auto& failure = std::get<Skip>(side);
    if (!first_error && failure.reason != "no qualifying verb") first_error = std::move(failure);
  }
  if (first_error) return *first_error;
  return skip(line.line_number, "no qualifying verb");
}

ordered_json span_json(const Span& s) { return ordered_json::array({s.begin, s.end}); }

}  // namespace

std::vector<NliLine> parse_nli_jsonl(const std::string& text) {
  std::vector<NliLine> out;
  const auto lines = split_lines(text);
  out.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    NliLine& nl = out.emplace_back();
    nl.line_number = k + 1;
    if (blank(lines[k])) {
      nl.error = "empty line";
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(lines[k]);
      NliPair& pair = nl.pair.emplace();
      pair.premise = split_ws(j.at("premise").get<std::string>());
      pair.hypothesis = split_ws(j.at("hypothesis").get<std::string>());
      pair.label = parse_nli_label(j.at("label").get<std::string>());
      if (pair.premise.empty() || pair.hypothesis.empty()) {
        throw ValidationError("empty premise or hypothesis");
      }
    } catch (const nlohmann::json::exception& e) {
      nl.pair.reset();
      nl.error = e.what();
    } catch (const ValidationError& e) {
      nl.pair.reset();
      nl.error = e.what();
    }
  }
  return out;
}

std::vector<NliLine> load_nli_jsonl(const std::filesystem::path& path) {
  return parse_nli_jsonl(read_text_file(path));
}

BuildResult build_dataset(const std::vector<NliLine>& lines, const Annotations& ann,
                          const ShuffleConfig& cfg, std::size_t jobs) {
  cfg.validate();
  std::vector<std::optional<Outcome>> outcomes(lines.size());
  parallel_for(lines.size(), jobs, [&](std::size_t k) {
    const NliLine& line = lines[k];
    if (!line.pair) {
      outcomes[k] = skip(line.line_number, "malformed record", line.error);
    } else if (cfg.mode == Mode::kConstituency) {
      outcomes[k] = run_constituency(line, k, ann, cfg);
    } else {
      outcomes[k] = run_semantic_role(line, k, ann, cfg);
    }
  });

  BuildResult result;
  for (auto& o : outcomes) {
    if (auto* pair = std::get_if<NliPair>(&*o)) {
      result.pairs.push_back(std::move(*pair));
      ++result.stats.emitted;
    } else {
      auto& s = std::get<Skip>(*o);
      ++result.stats.skipped;
      ++result.stats.reasons[s.reason];
      result.stats.skips.push_back(std::move(s));
    }
  }
  return result;
}

std::string to_jsonl(const std::vector<NliPair>& pairs) {
  std::string out;
  for (const NliPair& p : pairs) {
    ordered_json j;
    j["premise"] = join_tokens(p.premise);
    j["hypothesis"] = join_tokens(p.hypothesis);
    j["label"] = to_string(p.label);
    if (p.provenance) {
      const Provenance& prov = *p.provenance;
      j["mode"] = to_string(prov.mode);
      j["side"] = prov.side;
      auto spans = ordered_json::array();
      for (const Span& s : prov.spans) spans.push_back(span_json(s));
      j["spans"] = std::move(spans);
      j["source_line"] = prov.source_line;
      j["needs_review"] = prov.needs_review;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string stats_json(const BuildStats& stats) {
  ordered_json j;
  j["emitted"] = stats.emitted;
  j["skipped"] = stats.skipped;
  j["reasons"] = ordered_json::object();
  for (const auto& [reason, count] : stats.reasons) j["reasons"][reason] = count;
  auto skips = ordered_json::array();
  for (const Skip& s : stats.skips) {
    ordered_json e;
    e["line"] = s.line_number;
    e["reason"] = s.reason;
    if (!s.detail.empty()) e["detail"] = s.detail;
    skips.push_back(std::move(e));
  }
  j["skips"] = std::move(skips);
  return j.dump(2) + "\n";
}

}  // namespace pelab::shuffler
