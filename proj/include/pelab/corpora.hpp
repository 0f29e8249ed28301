#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pelab/tree.hpp"

namespace pelab {

// Static word vectors ("word v1 ... vd" text format).
struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  // nullptr when the word is unknown.
  const std::vector<double>* find(const std::string& word) const {
    auto it = vectors.find(word);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// Throws FormatError (with line number) on inconsistent dimension or a bad float.
EmbeddingTable load_glove(const std::filesystem::path& path,
                          const std::unordered_set<std::string>* vocab_filter = nullptr);
// Words are written in sorted order so the output is reproducible.
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

struct LabeledExample {
  int label = 0;
  std::vector<std::string> tokens;
};

struct LabeledDataset {
  std::vector<LabeledExample> examples;
  int num_classes = 0;

  // Throws ValidationError if a label is outside [0, num_classes) or a token list is empty.
  void validate() const;
};

// TSV "label<TAB>text"; text is lowercased and whitespace-split.
LabeledDataset load_dataset(const std::filesystem::path& path);
LabeledDataset parse_dataset(const std::string& text, const std::string& source = "<memory>");
void save_dataset(const LabeledDataset& data, const std::filesystem::path& path);

struct DepSentence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> heads;  // 1-based head index, 0 = root
  std::vector<std::string> deprels;
};

struct DepCorpus {
  std::vector<DepSentence> sentences;
};

// Tab-separated ID, FORM, HEAD, DEPREL rows with blank lines between
// sentences and '#' comments. Ten-column CoNLL-U rows are also accepted
// (HEAD and DEPREL taken from columns 7 and 8; multiword and empty-node
// rows skipped).
DepCorpus load_conllu(const std::filesystem::path& path);
DepCorpus parse_conllu(const std::string& text, const std::string& source = "<memory>");

struct SrlPredicate {
  std::size_t verb_index = 0;
  std::map<std::string, Span> roles;  // role label -> [begin, end)
};

struct SrlFrame {
  std::vector<std::string> tokens;
  std::vector<SrlPredicate> frames;

  // Spans within bounds and non-empty; no role span covers its verb.
  void validate() const;
};

// One JSON object per line:
//   {"tokens": [...], "frames": [{"verb_index": 3, "roles": {"ARG0": [0,2], "ARG1": [4,5]}}]}
// Empty lines yield std::nullopt so records stay aligned with other per-line inputs.
std::vector<std::optional<SrlFrame>> load_srl_jsonl(const std::filesystem::path& path);
SrlFrame parse_srl_record(const std::string& line, const std::string& where = "<memory>");

}  // namespace pelab
