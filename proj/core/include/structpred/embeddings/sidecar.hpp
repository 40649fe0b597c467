#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "structpred/data/corpus.hpp"
#include "structpred/embeddings/pooling.hpp"

namespace structpred::emb {

// Precomputed contextual subword vectors aligned to a corpus.
//
// Binary layout ("CEMB"): magic, u32 version, u32 dim, u32 sentence count;
// per sentence u32 token count; per token u32 subword count followed by
// subword-count x dim little-endian f32 values. Sentence order equals corpus
// order.
class ContextualSidecar {
 public:
  static constexpr std::uint32_t kVersion = 1;

  ContextualSidecar() = default;
  explicit ContextualSidecar(std::uint32_t dim) : dim_(dim) {}

  static ContextualSidecar read(const std::filesystem::path& path);
  static ContextualSidecar read(std::istream& in);
  void write(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  // Text interchange: one line per subword, "sent_idx tok_idx f1 ... fd" with a
  // 0-based sentence ordinal and 1-based token index, subwords in order.
  static ContextualSidecar from_text(std::istream& in);

  // Appends a sentence; each token holds its subword vectors back to back.
  void add_sentence(const std::vector<std::vector<std::vector<float>>>& tokens);

  // Alignment error naming the first sentence whose token count differs.
  void validate_against(std::span<const data::Sentence> corpus) const;

  std::uint32_t dim() const { return dim_; }
  std::size_t sentence_count() const { return sentences_.size(); }
  std::size_t token_count(std::size_t sentence) const;
  std::size_t subword_count(std::size_t sentence, std::size_t token) const;
  // token is 0-based here.
  std::vector<std::vector<float>> subwords(std::size_t sentence, std::size_t token) const;
  std::vector<float> pooled(std::size_t sentence, std::size_t token,
                            PoolingStrategy strategy) const;
  // Row-major token_count x dim.
  std::vector<float> pooled_sentence(std::size_t sentence, PoolingStrategy strategy) const;

 private:
  struct SentenceBlock {
    std::vector<std::uint32_t> subword_counts;
    std::vector<std::size_t> offsets;  // float offset of each token in values
    std::vector<float> values;
  };

  std::uint32_t dim_ = 0;
  std::vector<SentenceBlock> sentences_;
};

// Reads the binary sidecar and checks it against the companion corpus.
ContextualSidecar load_sidecar(const std::filesystem::path& path,
                               std::span<const data::Sentence> corpus);

}  // namespace structpred::emb
