#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "structpred/data/corpus.hpp"

namespace structpred::data {

enum class VocabField { kForm, kLemma, kPos, kTreeLabel, kGraphLabel, kChar };

std::string to_string(VocabField field);
VocabField vocab_field_from_string(const std::string& name);

// Dense symbol table. Input vocabularies reserve PAD=0, UNK=1, ROOT=2 and map
// unseen symbols to UNK; output label sets are built without reserved ids so
// that class indices equal ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kRoot = 2;
  static constexpr std::size_t kReservedCount = 3;

  explicit Vocabulary(bool reserved = true, VocabField field = VocabField::kForm);

  // Rebuilds a vocabulary from its full symbol list (reserved entries
  // included) so that every id is preserved.
  static Vocabulary from_symbols(bool reserved, VocabField field,
                                 const std::vector<std::string>& symbols);

  std::size_t add(const std::string& symbol, std::size_t count = 1);

  // UNK fallback; on a vocabulary without reserved ids unknown symbols are an
  // input error.
  std::size_t id(const std::string& symbol) const;
  std::optional<std::size_t> find(const std::string& symbol) const;
  // True for symbols from data, false for reserved entries and unseen ones.
  bool contains(const std::string& symbol) const;
  const std::string& symbol(std::size_t id) const { return symbols_.at(id); }
  std::size_t frequency(std::size_t id) const { return counts_.at(id); }

  std::size_t size() const { return symbols_.size(); }
  bool reserved() const { return reserved_; }
  VocabField field() const { return field_; }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::string split = "TRN";

 private:
  bool reserved_;
  VocabField field_;
  std::vector<std::string> symbols_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct VocabOptions {
  std::size_t min_count = 1;
  bool reserved = true;
  bool lowercase = false;
};

// Symbols are numbered in order of first occurrence. Lemma and POS fall back
// to the form and universal tag when the column is "_".
Vocabulary build_vocab(std::span<const Sentence> train, VocabField field,
                       const VocabOptions& options = {});

// Case-sensitive exact form lookup against the training forms.
std::vector<bool> oov_mask(std::span<const Sentence> test,
                           const Vocabulary& train_forms);

std::string lowercase_ascii(std::string text);

}  // namespace structpred::data
