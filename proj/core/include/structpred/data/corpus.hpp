#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace structpred::data {

// Label carried by the virtual-root arc that encodes a semantic top.
inline constexpr const char* kTopLabel = "TOP";

struct Arc {
  std::size_t head = 0;  // 0 = virtual root
  std::string label;

  auto operator<=>(const Arc&) const = default;
};

struct Token {
  std::size_t index = 0;  // 1-based
  std::string form;
  std::string lemma = "_";
  std::string upos = "_";
  std::string pos = "_";  // fine-grained tag (XPOS)
  std::string feats = "_";
  std::string deps = "_";
  std::string misc = "_";
  std::optional<std::size_t> tree_head;
  std::optional<std::string> tree_label;
  bool top = false;
  bool pred = false;
  std::string frame = "_";
  // Semantic arcs pointing at this token; a top token also carries
  // (0, kTopLabel).
  std::vector<Arc> graph_arcs;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string sent_id;
  std::optional<std::string> raw_text;
  // Comment lines without the leading '#', preserved for writing.
  std::vector<std::string> comments;

  std::size_t size() const { return tokens.size(); }
  bool has_tree() const;
};

using Corpus = std::vector<Sentence>;

// Throws a validation error unless token indices run 1..n and the tree
// annotation, when present, is complete, single-rooted, in range and acyclic.
void validate_tree(const Sentence& sentence);

// Heads in [0, n], no self loops, top flag consistent with the root arc.
void validate_graph(const Sentence& sentence);

// True when following heads from every token reaches 0 without revisiting.
bool is_single_rooted_tree(const std::vector<std::size_t>& heads);

// Sets `pred` on every token that heads at least one non-root arc.
void mark_predicates(Sentence& sentence);

// Tokens joined by `separator`.
std::string join_forms(const Sentence& sentence, const std::string& separator = " ");

}  // namespace structpred::data
