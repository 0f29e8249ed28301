#include "pelab/tree.hpp"

#include <cctype>

#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"

namespace pelab {

namespace {

enum class TokKind { kOpen, kClose, kAtom };

struct Tok {
  TokKind kind;
  std::string text;
  std::size_t offset;
};

std::vector<Tok> lex(std::string_view text) {
  std::vector<Tok> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c == '(') {
      toks.push_back({TokKind::kOpen, "(", i++});
    } else if (c == ')') {
      toks.push_back({TokKind::kClose, ")", i++});
    } else {
      std::size_t start = i;
      while (i < text.size() && text[i] != '(' && text[i] != ')' &&
             !std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
      }
      toks.push_back({TokKind::kAtom, std::string(text.substr(start, i - start)), start});
    }
  }
  return toks;
}

std::string unescape_leaf(const std::string& tok) {
  if (tok == "-LRB-") return "(";
  if (tok == "-RRB-") return ")";
  return tok;
}

std::string escape_leaf(const std::string& tok) {
  if (tok == "(") return "-LRB-";
  if (tok == ")") return "-RRB-";
  return tok;
}

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  ConstituencyTree parse_root() {
    if (toks_.empty()) throw FormatError("bracketed tree: empty input");
    ConstituencyTree root = parse_node(/*is_root=*/true);
    if (pos_ != toks_.size()) {
      throw FormatError("bracketed tree: trailing text at offset " +
                        std::to_string(toks_[pos_].offset));
    }
    if (root.label.empty() && root.children.size() == 1 && !root.children[0].leaf) {
      ConstituencyTree inner = std::move(root.children[0]);
      return inner;
    }
    return root;
  }

 private:
  const Tok& peek() const {
    if (pos_ >= toks_.size()) throw FormatError("bracketed tree: unbalanced parentheses");
    return toks_[pos_];
  }

  ConstituencyTree parse_node(bool is_root) {
    const Tok& open = peek();
    if (open.kind != TokKind::kOpen) {
      throw FormatError("bracketed tree: expected '(' at offset " + std::to_string(open.offset));
    }
    ++pos_;
    ConstituencyTree node;
    if (peek().kind == TokKind::kAtom) {
      node.label = strip_function_tags(toks_[pos_++].text);
    } else if (peek().kind == TokKind::kClose) {
      throw FormatError("bracketed tree: empty constituent at offset " +
                        std::to_string(open.offset));
    } else if (!is_root) {
      throw FormatError("bracketed tree: missing label at offset " + std::to_string(open.offset));
    }
    while (peek().kind != TokKind::kClose) {
      if (peek().kind == TokKind::kOpen) {
        node.children.push_back(parse_node(false));
      } else {
        node.children.push_back(ConstituencyTree::make_leaf(unescape_leaf(toks_[pos_++].text)));
      }
    }
    ++pos_;
    if (node.children.empty()) {
      throw FormatError("bracketed tree: empty constituent '" + node.label + "' at offset " +
                        std::to_string(open.offset));
    }
    return node;
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

void collect_leaves(const ConstituencyTree& t, std::vector<std::string>& out) {
  if (t.leaf) {
    out.push_back(t.label);
    return;
  }
  for (const auto& c : t.children) collect_leaves(c, out);
}

void write_tree(const ConstituencyTree& t, std::string& out) {
  if (t.leaf) {
    out += escape_leaf(t.label);
    return;
  }
  out += '(';
  out += t.label;
  for (const auto& c : t.children) {
    out += ' ';
    write_tree(c, out);
  }
  out += ')';
}

}  // namespace

std::vector<std::string> ConstituencyTree::leaves() const {
  std::vector<std::string> out;
  collect_leaves(*this, out);
  return out;
}

bool ConstituencyTree::operator==(const ConstituencyTree& other) const {
  return leaf == other.leaf && label == other.label && children == other.children;
}

std::string strip_function_tags(std::string_view label) {
  if (label.empty() || label.front() == '-') return std::string(label);
  std::size_t cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

std::size_t assign_spans(ConstituencyTree& tree, std::size_t start) {
  if (tree.leaf) {
    tree.span = {start, start + 1};
    return start + 1;
  }
  std::size_t pos = start;
  for (auto& c : tree.children) pos = assign_spans(c, pos);
  tree.span = {start, pos};
  return pos;
}

ConstituencyTree parse_bracketed_tree(std::string_view text) {
  Parser parser(lex(text));
  ConstituencyTree tree = parser.parse_root();
  assign_spans(tree);
  return tree;
}

std::string serialize_tree(const ConstituencyTree& tree) {
  std::string out;
  write_tree(tree, out);
  return out;
}

std::vector<TreeLine> load_tree_file(const std::filesystem::path& path) {
  std::vector<TreeLine> out;
  const auto lines = split_lines(read_text_file(path));
  for (std::size_t k = 0; k < lines.size(); ++k) {
    TreeLine tl;
    tl.line_number = k + 1;
    try {
      tl.tree = parse_bracketed_tree(lines[k]);
      tl.ok = true;
    } catch (const FormatError& e) {
      tl.error = e.what();
    }
    out.push_back(std::move(tl));
  }
  return out;
}

}  // namespace pelab
