#pragma once

// Reference transcription of the agent/patient swap, written separately from
// the library for equivalence checks.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pelab/corpora.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"
#include "pelab/shuffler.hpp"

namespace pelab::testing {

// For each predicate in order: skip auxiliaries, skip predicates missing an
// agent or patient, otherwise cut the sentence into outside / agent /
// patient segments, exchange the two role segments, and map pronoun case
// inside them.

struct RefResult {
  std::vector<std::string> tokens;
  std::size_t verb = 0;
};

inline std::optional<RefResult> reference_sr(const SrlFrame& frame, const std::set<std::string>& aux,
                                      const std::map<std::string, std::string>& case_map) {
  for (const auto& pred : frame.frames) {
    if (aux.count(to_lower(frame.tokens[pred.verb_index])) > 0) continue;
    if (!pred.roles.count("ARG0") || !pred.roles.count("ARG1")) continue;
    const Span a = pred.roles.at("ARG0");
    const Span p = pred.roles.at("ARG1");
    for (std::size_t k = a.begin; k < a.end; ++k)
      if (k >= p.begin && k < p.end) throw ValidationError("overlap");

    std::vector<std::pair<char, std::vector<std::string>>> segments;
    for (std::size_t k = 0; k < frame.tokens.size(); ++k) {
      const char kind = (k >= a.begin && k < a.end) ? 'A' : (k >= p.begin && k < p.end) ? 'P' : 'O';
      if (segments.empty() || segments.back().first != kind || kind == 'O')
        segments.push_back({kind, {}});
      segments.back().second.push_back(frame.tokens[k]);
    }
    auto mapped = [&](std::vector<std::string> seg) {
      for (auto& w : seg) {
        auto it = case_map.find(to_lower(w));
        if (it != case_map.end()) w = it->second;
      }
      return seg;
    };
    std::vector<std::string> agent;
    std::vector<std::string> patient;
    for (const auto& [kind, toks] : segments) {
      if (kind == 'A') agent = toks;
      if (kind == 'P') patient = toks;
    }
    RefResult r;
    r.verb = pred.verb_index;
    for (const auto& [kind, toks] : segments) {
      const auto piece = kind == 'A' ? mapped(patient) : kind == 'P' ? mapped(agent) : toks;
      r.tokens.insert(r.tokens.end(), piece.begin(), piece.end());
    }
    return r;
  }
  return std::nullopt;
}

inline std::vector<std::optional<Span>> role_choices(std::size_t n, std::size_t verb) {
  std::vector<std::optional<Span>> out{std::nullopt};
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t e = b + 1; e <= n; ++e)
      if (!(verb >= b && verb < e)) out.push_back(Span{b, e});
  return out;
}

inline std::vector<SrlPredicate> predicates(std::size_t n) {
  std::vector<SrlPredicate> out;
  for (std::size_t v = 0; v < n; ++v) {
    const auto choices = role_choices(n, v);
    for (const auto& a : choices)
      for (const auto& p : choices) {
        SrlPredicate pred;
        pred.verb_index = v;
        if (a) pred.roles["ARG0"] = *a;
        if (p) pred.roles["ARG1"] = *p;
        out.push_back(std::move(pred));
      }
  }
  return out;
}

// True when the library and the reference agree: same tokens and verb, both
// nullopt, or both rejecting the frame.
inline bool sr_agrees(const SrlFrame& frame, const shuffler::ShuffleConfig& cfg,
                      const std::map<std::string, std::string>& case_map) {
  std::optional<RefResult> want;
  bool want_throw = false;
  try {
    want = reference_sr(frame, cfg.aux_verbs, case_map);
  } catch (const ValidationError&) {
    want_throw = true;
  }
  try {
    const auto got = shuffler::shuffle_sr(frame, cfg);
    if (want_throw || got.has_value() != want.has_value()) return false;
    return !got || (got->tokens == want->tokens && got->verb_index == want->verb);
  } catch (const ValidationError&) {
    return want_throw;
  }
}

struct SweepCount {
  std::size_t compared = 0;
  std::size_t expected = 0;
  std::size_t mismatches = 0;
};

// Every single-predicate frame of 1..6 tokens and every ordered pair of
// predicates on 2..4 tokens, each over six rotations of a word list that
// mixes an auxiliary with case-mapped pronouns.
inline SweepCount exhaustive_sr_sweep() {
  shuffler::ShuffleConfig cfg;
  cfg.mode = shuffler::Mode::kSemanticRole;
  cfg.case_map = shuffler::CaseMap({{"I", "me"}, {"he", "him"}});
  const std::map<std::string, std::string> case_map{
      {"i", "me"}, {"me", "I"}, {"he", "him"}, {"him", "he"}};
  const std::vector<std::string> vocab{"he", "is", "saw", "me", "I", "him"};

  SweepCount c;
  auto check = [&](const SrlFrame& f) {
    ++c.compared;
    if (!sr_agrees(f, cfg, case_map)) ++c.mismatches;
  };
  auto sentence = [&](std::size_t n, std::size_t shift) {
    SrlFrame f;
    for (std::size_t k = 0; k < n; ++k) f.tokens.push_back(vocab[(k + shift) % vocab.size()]);
    return f;
  };
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto preds = predicates(n);
    c.expected += vocab.size() * (preds.size() + 1);
    for (std::size_t shift = 0; shift < vocab.size(); ++shift) {
      SrlFrame f = sentence(n, shift);
      check(f);
      for (const auto& p : preds) {
        f.frames = {p};
        check(f);
      }
    }
  }
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto preds = predicates(n);
    c.expected += vocab.size() * preds.size() * preds.size();
    for (std::size_t shift = 0; shift < vocab.size(); ++shift) {
      SrlFrame f = sentence(n, shift);
      for (const auto& p : preds)
        for (const auto& q : preds) {
          f.frames = {p, q};
          check(f);
        }
    }
  }
  return c;
}

}  // namespace pelab::testing
