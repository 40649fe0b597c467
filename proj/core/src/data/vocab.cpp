#include "structpred/data/vocab.hpp"

#include <algorithm>

#include "structpred/error.hpp"

namespace structpred::data {

std::string to_string(VocabField field) {
  switch (field) {
    case VocabField::kForm: return "form";
    case VocabField::kLemma: return "lemma";
    case VocabField::kPos: return "pos";
    case VocabField::kTreeLabel: return "tree_label";
    case VocabField::kGraphLabel: return "graph_label";
    case VocabField::kChar: return "char";
  }
  return "form";
}

VocabField vocab_field_from_string(const std::string& name) {
  for (auto f : {VocabField::kForm, VocabField::kLemma, VocabField::kPos,
                 VocabField::kTreeLabel, VocabField::kGraphLabel, VocabField::kChar}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorCode::kFormat, "unknown vocabulary field '" + name + "'");
}

std::string lowercase_ascii(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
    return static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
  });
  return text;
}

Vocabulary::Vocabulary(bool reserved, VocabField field) : reserved_(reserved), field_(field) {
  if (reserved_) {
    for (const char* s : {"<pad>", "<unk>", "<root>"}) {
      index_.emplace(s, symbols_.size());
      symbols_.emplace_back(s);
      counts_.push_back(0);
    }
  }
}

Vocabulary Vocabulary::from_symbols(bool reserved, VocabField field,
                                    const std::vector<std::string>& symbols) {
  Vocabulary v(reserved, field);
  const std::size_t skip = reserved ? kReservedCount : 0;
  if (symbols.size() < skip) fail(ErrorCode::kFormat, "vocabulary lacks its reserved entries");
  for (std::size_t i = skip; i < symbols.size(); ++i) {
    if (v.add(symbols[i]) != i) {
      fail(ErrorCode::kFormat, "duplicate vocabulary symbol '" + symbols[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& symbol, std::size_t count) {
  auto [it, inserted] = index_.emplace(symbol, symbols_.size());
  if (inserted) {
    symbols_.push_back(symbol);
    counts_.push_back(count);
  } else {
    counts_[it->second] += count;
  }
  return it->second;
}

std::optional<std::size_t> Vocabulary::find(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::contains(const std::string& symbol) const {
  auto id = find(symbol);
  return id && (!reserved_ || *id >= kReservedCount);
}

std::size_t Vocabulary::id(const std::string& symbol) const {
  auto found = find(symbol);
  if (found && (!reserved_ || *found >= kReservedCount)) return *found;
  if (reserved_) return kUnk;
  fail(ErrorCode::kInput, "label '" + symbol + "' not in " + to_string(field_) +
                              " inventory");
}

namespace {

template <typename Fn>
void for_each_symbol(const Sentence& s, VocabField field, Fn&& fn) {
  for (const auto& t : s.tokens) {
    switch (field) {
      case VocabField::kForm: fn(t.form); break;
      case VocabField::kLemma: fn(t.lemma != "_" ? t.lemma : t.form); break;
      case VocabField::kPos: fn(t.pos != "_" ? t.pos : t.upos); break;
      case VocabField::kTreeLabel:
        if (t.tree_label) fn(*t.tree_label);
        break;
      case VocabField::kGraphLabel:
        for (const auto& a : t.graph_arcs) fn(a.label);
        break;
      case VocabField::kChar:
        for (char c : t.form) fn(std::string(1, c));
        break;
    }
  }
}

}  // namespace

Vocabulary build_vocab(std::span<const Sentence> train, VocabField field,
                       const VocabOptions& options) {
  Vocabulary counts(false, field);
  for (const auto& s : train) {
    for_each_symbol(s, field, [&](const std::string& sym) {
      counts.add(options.lowercase ? lowercase_ascii(sym) : sym);
    });
  }
  Vocabulary vocab(options.reserved, field);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts.frequency(i) >= options.min_count) vocab.add(counts.symbol(i), counts.frequency(i));
  }
  return vocab;
}

std::vector<bool> oov_mask(std::span<const Sentence> test, const Vocabulary& train_forms) {
  std::vector<bool> mask;
  for (const auto& s : test) {
    for (const auto& t : s.tokens) mask.push_back(!train_forms.contains(t.form));
  }
  return mask;
}

}  // namespace structpred::data
