#include "structpred/embeddings/static_table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "structpred/autodiff/ops.hpp"
#include "structpred/error.hpp"

namespace structpred::emb {

EmbeddingFile read_embedding_text(std::istream& in, const std::string& source) {
  EmbeddingFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<float> row;
    std::string tok;
    while (fields >> tok) {
      float v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(ErrorCode::kFormat, source + ":" + std::to_string(line_no) +
                                     ": non-numeric value '" + tok + "'");
      }
      row.push_back(v);
    }
    if (line_no == 1 && row.size() == 1 && file.words.empty()) {
      // "count dim" header
      bool integral = word.find_first_not_of("0123456789") == std::string::npos;
      if (integral) continue;
    }
    if (file.dim == 0) file.dim = row.size();
    if (row.size() != file.dim || row.empty()) {
      fail(ErrorCode::kFormat, source + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(file.dim) + " values, found " +
                                   std::to_string(row.size()));
    }
    file.words.push_back(word);
    file.values.insert(file.values.end(), row.begin(), row.end());
  }
  return file;
}

EmbeddingFile read_embedding_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return read_embedding_text(in, path.string());
}

template <ad::Real T>
StaticTable<T> StaticTable<T>::pretrained(ad::ParameterStore<T>& store,
                                          const std::string& name, const EmbeddingFile& file,
                                          bool lowercase_lookup, bool trainable) {
  StaticTable table;
  table.dim_ = file.dim;
  table.trainable_ = trainable;
  table.lowercase_lookup_ = lowercase_lookup;
  std::vector<T> values(data::Vocabulary::kReservedCount * file.dim, T(0));
  for (std::size_t w = 0; w < file.words.size(); ++w) {
    const std::string key =
        lowercase_lookup ? data::lowercase_ascii(file.words[w]) : file.words[w];
    if (table.vocab_.find(key)) continue;
    table.vocab_.add(key);
    for (std::size_t i = 0; i < file.dim; ++i)
      values.push_back(static_cast<T>(file.values[w * file.dim + i]));
  }
  ad::Shape shape{table.vocab_.size(), file.dim};
  table.matrix_ = trainable ? store.create_from(name, shape, std::move(values))
                            : store.create_frozen(name, shape, std::move(values));
  return table;
}

template <ad::Real T>
StaticTable<T> StaticTable<T>::random(ad::ParameterStore<T>& store, const std::string& name,
                                      data::Vocabulary vocab, std::size_t dim,
                                      bool trainable, bool lowercase_lookup, Rng& rng) {
  StaticTable table;
  table.vocab_ = std::move(vocab);
  table.dim_ = dim;
  table.trainable_ = trainable;
  table.lowercase_lookup_ = lowercase_lookup;
  std::vector<T> values(table.vocab_.size() * dim);
  for (auto& v : values) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  if (table.vocab_.reserved()) {
    std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(data::Vocabulary::kPad * dim),
                dim, T(0));
  }
  ad::Shape shape{table.vocab_.size(), dim};
  table.matrix_ = trainable ? store.create_from(name, shape, std::move(values))
                            : store.create_frozen(name, shape, std::move(values));
  return table;
}

template <ad::Real T>
std::size_t StaticTable<T>::lookup(const std::string& symbol) const {
  return vocab_.id(lowercase_lookup_ ? data::lowercase_ascii(symbol) : symbol);
}

template <ad::Real T>
ad::Tensor<T> StaticTable<T>::embed(std::span<const std::string> symbols) const {
  std::vector<std::size_t> ids;
  ids.reserve(symbols.size());
  for (const auto& s : symbols) ids.push_back(lookup(s));
  return ad::gather_rows(matrix_, std::span<const std::size_t>(ids));
}

template class StaticTable<float>;
template class StaticTable<double>;

}  // namespace structpred::emb
