#include "structpred/embeddings/sidecar.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "structpred/error.hpp"

namespace structpred::emb {

namespace {

constexpr char kMagic[4] = {'C', 'E', 'M', 'B'};

static_assert(std::endian::native == std::endian::little,
              "sidecar I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

[[noreturn]] void truncated(std::size_t sentence) {
  fail(ErrorCode::kAlignment,
       "sidecar truncated in sentence " + std::to_string(sentence));
}

}  // namespace

void ContextualSidecar::add_sentence(
    const std::vector<std::vector<std::vector<float>>>& tokens) {
  SentenceBlock block;
  for (const auto& subwords : tokens) {
    if (subwords.empty()) {
      fail(ErrorCode::kAlignment, "sentence " + std::to_string(sentences_.size()) +
                                      ": token without subword vectors");
    }
    block.offsets.push_back(block.values.size());
    block.subword_counts.push_back(static_cast<std::uint32_t>(subwords.size()));
    for (const auto& v : subwords) {
      if (v.size() != dim_) {
        fail(ErrorCode::kDimension, "sentence " + std::to_string(sentences_.size()) +
                                        ": subword vector of width " +
                                        std::to_string(v.size()) + ", sidecar dim " +
                                        std::to_string(dim_));
      }
      block.values.insert(block.values.end(), v.begin(), v.end());
    }
  }
  sentences_.push_back(std::move(block));
}

ContextualSidecar ContextualSidecar::read(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorCode::kFormat, "sidecar: bad magic (expected CEMB)");
  }
  std::uint32_t version = 0, dim = 0, count = 0;
  if (!get_u32(in, version) || !get_u32(in, dim) || !get_u32(in, count)) {
    fail(ErrorCode::kFormat, "sidecar: truncated header");
  }
  if (version != kVersion) {
    fail(ErrorCode::kFormat, "sidecar: unsupported version " + std::to_string(version));
  }
  ContextualSidecar sidecar(dim);
  sidecar.sentences_.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    SentenceBlock block;
    std::uint32_t tokens = 0;
    if (!get_u32(in, tokens)) truncated(s);
    for (std::uint32_t t = 0; t < tokens; ++t) {
      std::uint32_t subwords = 0;
      if (!get_u32(in, subwords)) truncated(s);
      if (subwords == 0) {
        fail(ErrorCode::kAlignment, "sidecar sentence " + std::to_string(s) + " token " +
                                        std::to_string(t + 1) + " has no subword vectors");
      }
      block.offsets.push_back(block.values.size());
      block.subword_counts.push_back(subwords);
      const std::size_t n = static_cast<std::size_t>(subwords) * dim;
      const std::size_t at = block.values.size();
      block.values.resize(at + n);
      if (!in.read(reinterpret_cast<char*>(block.values.data() + at),
                   static_cast<std::streamsize>(n * sizeof(float)))) {
        truncated(s);
      }
    }
    sidecar.sentences_.push_back(std::move(block));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::kFormat, "sidecar: trailing bytes after " + std::to_string(count) +
                                 " sentences");
  }
  return sidecar;
}

ContextualSidecar ContextualSidecar::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open sidecar " + path.string());
  return read(in);
}

void ContextualSidecar::write(std::ostream& out) const {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, dim_);
  put_u32(out, static_cast<std::uint32_t>(sentences_.size()));
  for (const auto& block : sentences_) {
    put_u32(out, static_cast<std::uint32_t>(block.subword_counts.size()));
    for (std::size_t t = 0; t < block.subword_counts.size(); ++t) {
      put_u32(out, block.subword_counts[t]);
      out.write(reinterpret_cast<const char*>(block.values.data() + block.offsets[t]),
                static_cast<std::streamsize>(block.subword_counts[t] * dim_ * sizeof(float)));
    }
  }
}

void ContextualSidecar::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write sidecar " + path.string());
  write(out);
}

ContextualSidecar ContextualSidecar::from_text(std::istream& in) {
  std::vector<std::vector<std::vector<std::vector<float>>>> sentences;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto where = [&] { return "sidecar text line " + std::to_string(line_no) + ": "; };
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::string> parts;
    while (fields >> tok) parts.push_back(tok);
    if (parts.size() < 3) fail(ErrorCode::kFormat, where() + "expected sent_idx tok_idx f1..fd");
    auto parse_index = [&](const std::string& text) {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        fail(ErrorCode::kFormat, where() + "non-integer index '" + text + "'");
      }
      return v;
    };
    const std::size_t s = parse_index(parts[0]);
    const std::size_t t = parse_index(parts[1]);
    std::vector<float> vec;
    for (std::size_t i = 2; i < parts.size(); ++i) {
      float v = 0;
      auto [ptr, ec] = std::from_chars(parts[i].data(), parts[i].data() + parts[i].size(), v);
      if (ec != std::errc() || ptr != parts[i].data() + parts[i].size()) {
        fail(ErrorCode::kFormat, where() + "non-numeric value '" + parts[i] + "'");
      }
      vec.push_back(v);
    }
    if (!dim) dim = vec.size();
    if (vec.size() != *dim) {
      fail(ErrorCode::kFormat, where() + "expected " + std::to_string(*dim) + " values, found " +
                                   std::to_string(vec.size()));
    }
    if (t == 0) fail(ErrorCode::kFormat, where() + "token indices are 1-based");
    if (s + 1 < sentences.size() || s > sentences.size()) {
      fail(ErrorCode::kFormat, where() + "sentence " + std::to_string(s) + " out of order");
    }
    if (s == sentences.size()) sentences.emplace_back();
    auto& tokens = sentences[s];
    if (t == tokens.size() + 1) {
      tokens.emplace_back();
    } else if (t != tokens.size()) {
      fail(ErrorCode::kFormat, where() + "token " + std::to_string(t) + " out of order");
    }
    tokens.back().push_back(std::move(vec));
  }
  ContextualSidecar sidecar(static_cast<std::uint32_t>(dim.value_or(0)));
  for (const auto& tokens : sentences) sidecar.add_sentence(tokens);
  return sidecar;
}

void ContextualSidecar::validate_against(std::span<const data::Sentence> corpus) const {
  const std::size_t common = std::min(corpus.size(), sentences_.size());
  for (std::size_t s = 0; s < common; ++s) {
    if (sentences_[s].subword_counts.size() != corpus[s].size()) {
      fail(ErrorCode::kAlignment,
           "sidecar sentence " + std::to_string(s) + " has " +
               std::to_string(sentences_[s].subword_counts.size()) +
               " tokens, corpus has " + std::to_string(corpus[s].size()));
    }
  }
  if (corpus.size() != sentences_.size()) {
    fail(ErrorCode::kAlignment, "sidecar has " + std::to_string(sentences_.size()) +
                                    " sentences, corpus has " + std::to_string(corpus.size()) +
                                    " (first unmatched sentence " + std::to_string(common) +
                                    ")");
  }
}

std::size_t ContextualSidecar::token_count(std::size_t sentence) const {
  return sentences_.at(sentence).subword_counts.size();
}

std::size_t ContextualSidecar::subword_count(std::size_t sentence, std::size_t token) const {
  return sentences_.at(sentence).subword_counts.at(token);
}

std::vector<std::vector<float>> ContextualSidecar::subwords(std::size_t sentence,
                                                            std::size_t token) const {
  const auto& block = sentences_.at(sentence);
  const std::size_t count = block.subword_counts.at(token);
  std::vector<std::vector<float>> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const float* src = block.values.data() + block.offsets[token] + k * dim_;
    out[k].assign(src, src + dim_);
  }
  return out;
}

std::vector<float> ContextualSidecar::pooled(std::size_t sentence, std::size_t token,
                                             PoolingStrategy strategy) const {
  const auto vectors = subwords(sentence, token);
  return pool_subwords(std::span<const std::vector<float>>(vectors), strategy);
}

std::vector<float> ContextualSidecar::pooled_sentence(std::size_t sentence,
                                                      PoolingStrategy strategy) const {
  std::vector<float> out;
  const std::size_t n = token_count(sentence);
  out.reserve(n * dim_);
  for (std::size_t t = 0; t < n; ++t) {
    auto v = pooled(sentence, t, strategy);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

ContextualSidecar load_sidecar(const std::filesystem::path& path,
                               std::span<const data::Sentence> corpus) {
  auto sidecar = ContextualSidecar::read(path);
  sidecar.validate_against(corpus);
  return sidecar;
}

}  // namespace structpred::emb
