#include "pelab/corpora.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"

namespace pelab {

namespace {

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_size(const std::string& s, std::size_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !s.empty();
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

EmbeddingTable load_glove(const std::filesystem::path& path,
                          const std::unordered_set<std::string>* vocab_filter) {
  EmbeddingTable table;
  const auto lines = split_lines(read_text_file(path));
  const std::string source = path.string();
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (is_blank(lines[k])) continue;
    auto fields = split_ws(lines[k]);
    if (fields.size() < 2) {
      throw FormatError(at_line(source, k + 1) + ": expected 'word v1 ... vd'");
    }
    const std::size_t d = fields.size() - 1;
    if (table.dim == 0) {
      table.dim = d;
    } else if (d != table.dim) {
      throw FormatError(at_line(source, k + 1) + ": dimension " + std::to_string(d) +
                        " differs from " + std::to_string(table.dim));
    }
    if (vocab_filter && !vocab_filter->contains(fields[0])) continue;
    std::vector<double> vec(d);
    for (std::size_t c = 0; c < d; ++c) {
      if (!parse_double(fields[c + 1], vec[c])) {
        throw FormatError(at_line(source, k + 1) + ": unparseable value '" + fields[c + 1] + "'");
      }
    }
    table.vectors.emplace(fields[0], std::move(vec));
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::vector<std::string> words;
  words.reserve(table.vectors.size());
  for (const auto& [w, _] : table.vectors) words.push_back(w);
  std::sort(words.begin(), words.end());
  std::ostringstream out;
  out.precision(17);
  for (const auto& w : words) {
    out << w;
    for (double v : table.vectors.at(w)) out << ' ' << v;
    out << '\n';
  }
  write_text_file(path, out.str());
}

void LabeledDataset::validate() const {
  for (std::size_t k = 0; k < examples.size(); ++k) {
    const auto& ex = examples[k];
    if (ex.label < 0 || ex.label >= num_classes) {
      throw ValidationError("dataset example " + std::to_string(k) + ": label " +
                            std::to_string(ex.label) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    if (ex.tokens.empty()) {
      throw ValidationError("dataset example " + std::to_string(k) + ": empty token list");
    }
  }
}

LabeledDataset parse_dataset(const std::string& text, const std::string& source) {
  LabeledDataset data;
  const auto lines = split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (is_blank(lines[k])) continue;
    const std::size_t tab = lines[k].find('\t');
    if (tab == std::string::npos) {
      throw FormatError(at_line(source, k + 1) + ": expected 'label<TAB>text'");
    }
    std::size_t label = 0;
    if (!parse_size(lines[k].substr(0, tab), label) || label > 1000000) {
      throw FormatError(at_line(source, k + 1) + ": bad label '" + lines[k].substr(0, tab) + "'");
    }
    LabeledExample ex;
    ex.label = static_cast<int>(label);
    ex.tokens = split_ws(to_lower(lines[k].substr(tab + 1)));
    if (ex.tokens.empty()) throw FormatError(at_line(source, k + 1) + ": empty text");
    data.num_classes = std::max(data.num_classes, ex.label + 1);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_text_file(path), path.string());
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path) {
  std::string out;
  for (const auto& ex : data.examples) {
    out += std::to_string(ex.label);
    out += '\t';
    for (std::size_t t = 0; t < ex.tokens.size(); ++t) {
      if (t) out += ' ';
      out += ex.tokens[t];
    }
    out += '\n';
  }
  write_text_file(path, out);
}

DepCorpus parse_conllu(const std::string& text, const std::string& source) {
  DepCorpus corpus;
  DepSentence current;
  std::size_t sentence_start = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    const std::size_t len = current.tokens.size();
    for (std::size_t t = 0; t < len; ++t) {
      if (current.heads[t] > len) {
        throw FormatError(at_line(source, sentence_start + t) + ": HEAD " +
                          std::to_string(current.heads[t]) + " beyond sentence length " +
                          std::to_string(len));
      }
      if (current.heads[t] == t + 1) {
        throw FormatError(at_line(source, sentence_start + t) + ": token " +
                          std::to_string(t + 1) + " is its own head (use HEAD 0 for root)");
      }
    }
    corpus.sentences.push_back(std::move(current));
    current = DepSentence{};
  };

  const auto lines = split_lines(text);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::size_t line_no = k + 1;
    if (is_blank(lines[k])) {
      flush();
      continue;
    }
    if (lines[k][0] == '#') continue;
    auto cols = split_tabs(lines[k]);
    std::size_t head_col = 2, rel_col = 3;
    if (cols.size() == 10) {
      head_col = 6;
      rel_col = 7;
      if (cols[0].find_first_of("-.") != std::string::npos) continue;
    } else if (cols.size() != 4) {
      throw FormatError(at_line(source, line_no) + ": expected 4 (ID FORM HEAD DEPREL) or 10 columns, got " +
                        std::to_string(cols.size()));
    }
    std::size_t id = 0, head = 0;
    if (!parse_size(cols[0], id)) throw FormatError(at_line(source, line_no) + ": bad ID '" + cols[0] + "'");
    if (!parse_size(cols[head_col], head)) {
      throw FormatError(at_line(source, line_no) + ": bad HEAD '" + cols[head_col] + "'");
    }
    if (current.tokens.empty()) sentence_start = line_no;
    if (id != current.tokens.size() + 1) {
      throw FormatError(at_line(source, line_no) + ": ID " + std::to_string(id) + " out of sequence");
    }
    current.tokens.push_back(cols[1]);
    current.heads.push_back(head);
    current.deprels.push_back(cols[rel_col]);
  }
  flush();
  return corpus;
}

DepCorpus load_conllu(const std::filesystem::path& path) {
  return parse_conllu(read_text_file(path), path.string());
}

void SrlFrame::validate() const {
  const std::size_t n = tokens.size();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& pred = frames[f];
    if (pred.verb_index >= n) {
      throw ValidationError("SRL frame " + std::to_string(f) + ": verb index " +
                            std::to_string(pred.verb_index) + " out of bounds");
    }
    for (const auto& [role, span] : pred.roles) {
      if (span.begin >= span.end || span.end > n) {
        throw ValidationError("SRL frame " + std::to_string(f) + ": role " + role + " span [" +
                              std::to_string(span.begin) + "," + std::to_string(span.end) +
                              ") out of bounds");
      }
      if (span.begin <= pred.verb_index && pred.verb_index < span.end) {
        throw ValidationError("SRL frame " + std::to_string(f) + ": role " + role +
                              " covers the verb");
      }
    }
  }
}

SrlFrame parse_srl_record(const std::string& line, const std::string& where) {
  using nlohmann::json;
  SrlFrame frame;
  try {
    json rec = json::parse(line);
    frame.tokens = rec.at("tokens").get<std::vector<std::string>>();
    for (const auto& f : rec.at("frames")) {
      SrlPredicate pred;
      pred.verb_index = f.at("verb_index").get<std::size_t>();
      for (const auto& [role, span] : f.at("roles").items()) {
        if (role == "V") continue;
        if (!span.is_array() || span.size() != 2) {
          throw FormatError(where + ": role " + role + " must be [begin, end]");
        }
        pred.roles[role] = Span{span[0].get<std::size_t>(), span[1].get<std::size_t>()};
      }
      frame.frames.push_back(std::move(pred));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
  try {
    frame.validate();
  } catch (const ValidationError& e) {
    throw FormatError(where + ": " + e.what());
  }
  return frame;
}

std::vector<std::optional<SrlFrame>> load_srl_jsonl(const std::filesystem::path& path) {
  std::vector<std::optional<SrlFrame>> out;
  const auto lines = split_lines(read_text_file(path));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (is_blank(lines[k])) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.emplace_back(parse_srl_record(lines[k], at_line(path.string(), k + 1)));
  }
  return out;
}

}  // namespace pelab
