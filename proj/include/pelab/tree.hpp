#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pelab {

// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
  bool overlaps(const Span& other) const { return begin < other.end && other.begin < end; }
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

// Constituency parse node. Leaves carry the token in `label` and have no
// children; internal nodes carry the (function-tag stripped) constituent tag.
struct ConstituencyTree {
  std::string label;
  std::vector<ConstituencyTree> children;
  bool leaf = false;
  Span span;

  static ConstituencyTree make_leaf(std::string token) {
    ConstituencyTree t;
    t.label = std::move(token);
    t.leaf = true;
    return t;
  }

  std::vector<std::string> leaves() const;

  // Structural equality: labels, leaf flags and shape. Spans follow from shape.
  bool operator==(const ConstituencyTree& other) const;
};

// Penn-Treebank bracketed text, e.g. "(NP (DT a) (NN man))". A single
// unlabeled outer bracket "( (S ...) )" is unwrapped. Leaves -LRB- / -RRB-
// become literal parentheses. Throws FormatError on unbalanced parentheses,
// empty constituents or trailing text.
ConstituencyTree parse_bracketed_tree(std::string_view text);

// Inverse of parse_bracketed_tree, single-space separated.
std::string serialize_tree(const ConstituencyTree& tree);

// Recomputes spans from leaf order, starting at `start`. Returns the end index.
std::size_t assign_spans(ConstituencyTree& tree, std::size_t start = 0);

// Removes function tags: "NP-SBJ-1" -> "NP", "NP=2" -> "NP". Labels starting
// with '-' (-LRB-, -NONE-) are left alone.
std::string strip_function_tags(std::string_view label);

// `.mrg`-style file: one tree per line, each parsed independently so a bad
// line is reported without aborting the rest of the file.
struct TreeLine {
  std::size_t line_number = 0;  // 1-based
  bool ok = false;
  ConstituencyTree tree;
  std::string error;
};
std::vector<TreeLine> load_tree_file(const std::filesystem::path& path);

}  // namespace pelab
