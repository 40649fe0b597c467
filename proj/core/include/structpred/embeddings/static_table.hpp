#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "structpred/autodiff/parameter.hpp"
#include "structpred/data/vocab.hpp"

namespace structpred::emb {

// Rows of a word-vector text file ("word v1 ... vd", optional "count dim"
// header line).
struct EmbeddingFile {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::vector<float> values;  // words.size() x dim
};

EmbeddingFile read_embedding_text(const std::filesystem::path& path);
EmbeddingFile read_embedding_text(std::istream& in, const std::string& source = "<stream>");

// Lookup table whose matrix lives in a ParameterStore, either trainable or
// frozen. Unknown symbols resolve to the UNK row.
template <ad::Real T>
class StaticTable {
 public:
  StaticTable() = default;

  // Pretrained rows; PAD/UNK/ROOT rows are zero.
  static StaticTable pretrained(ad::ParameterStore<T>& store, const std::string& name,
                                const EmbeddingFile& file, bool lowercase_lookup,
                                bool trainable = false);
  // Randomly initialised rows over an existing vocabulary.
  static StaticTable random(ad::ParameterStore<T>& store, const std::string& name,
                            data::Vocabulary vocab, std::size_t dim, bool trainable,
                            bool lowercase_lookup, Rng& rng);

  std::size_t lookup(const std::string& symbol) const;
  // n x dim rows for the given symbols.
  ad::Tensor<T> embed(std::span<const std::string> symbols) const;

  const data::Vocabulary& vocab() const { return vocab_; }
  const ad::Tensor<T>& matrix() const { return matrix_; }
  std::size_t dim() const { return dim_; }
  bool trainable() const { return trainable_; }
  bool lowercase_lookup() const { return lowercase_lookup_; }

 private:
  data::Vocabulary vocab_;
  ad::Tensor<T> matrix_;
  std::size_t dim_ = 0;
  bool trainable_ = false;
  bool lowercase_lookup_ = false;
};

extern template class StaticTable<float>;
extern template class StaticTable<double>;

}  // namespace structpred::emb
