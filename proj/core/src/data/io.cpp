#include "structpred/data/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "structpred/error.hpp"

namespace structpred::data {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

[[noreturn]] void format_error(const std::string& source, std::size_t line_no,
                               const std::string& what) {
  fail(ErrorCode::kFormat, source + ":" + std::to_string(line_no) + ": " + what);
}

std::optional<std::size_t> parse_index(const std::string& text) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

// Splits "key = value" comment bodies; returns false when not of that shape.
bool comment_field(const std::string& body, const std::string& key, std::string& value) {
  std::size_t i = 0;
  while (i < body.size() && body[i] == ' ') ++i;
  if (body.compare(i, key.size(), key) != 0) return false;
  i += key.size();
  while (i < body.size() && body[i] == ' ') ++i;
  if (i >= body.size() || body[i] != '=') return false;
  ++i;
  if (i < body.size() && body[i] == ' ') ++i;
  value = body.substr(i);
  return true;
}

}  // namespace

// ---------------------------------------------------------------- CoNLL-U

Corpus read_conllu(std::istream& in, const std::string& source) {
  Corpus corpus;
  Sentence current;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;

  auto finish = [&] {
    if (!open) return;
    validate_tree(current);
    corpus.push_back(std::move(current));
    current = Sentence{};
    open = false;
  };

  while (next_line(in, line, line_no)) {
    if (line.empty()) {
      finish();
      continue;
    }
    open = true;
    if (line[0] == '#') {
      std::string body = line.substr(1), value;
      if (comment_field(body, "sent_id", value)) current.sent_id = value;
      if (comment_field(body, "text", value)) current.raw_text = value;
      current.comments.push_back(std::move(body));
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() != 10) {
      format_error(source, line_no,
                   "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    auto id = parse_index(cols[0]);
    if (!id) format_error(source, line_no, "non-integer ID '" + cols[0] + "'");
    Token t;
    t.index = *id;
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.pos = cols[4];
    t.feats = cols[5];
    if (cols[6] != "_") {
      auto head = parse_index(cols[6]);
      if (!head) format_error(source, line_no, "non-integer HEAD '" + cols[6] + "'");
      t.tree_head = *head;
    }
    if (cols[7] != "_") t.tree_label = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    current.tokens.push_back(std::move(t));
  }
  finish();
  return corpus;
}

Corpus read_conllu(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_conllu(in, path.string());
}

void write_conllu(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus) {
    if (!s.comments.empty()) {
      for (const auto& c : s.comments) out << '#' << c << '\n';
    } else {
      if (!s.sent_id.empty()) out << "# sent_id = " << s.sent_id << '\n';
      if (s.raw_text) out << "# text = " << *s.raw_text << '\n';
    }
    for (const auto& t : s.tokens) {
      out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.pos
          << '\t' << t.feats << '\t';
      if (t.tree_head) {
        out << *t.tree_head;
      } else {
        out << '_';
      }
      out << '\t' << (t.tree_label ? *t.tree_label : std::string("_")) << '\t' << t.deps
          << '\t' << t.misc << '\n';
    }
    out << '\n';
  }
}

void write_conllu(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_conllu(out, corpus);
}

// -------------------------------------------------------------------- SDP

Corpus read_sdp(std::istream& in, const std::string& source) {
  Corpus corpus;
  Sentence current;
  std::vector<std::vector<std::string>> arg_columns;
  std::vector<std::size_t> arg_lines;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;

  auto finish = [&] {
    if (!open) return;
    std::vector<std::size_t> predicates;
    for (const auto& t : current.tokens)
      if (t.pred) predicates.push_back(t.index);
    for (std::size_t i = 0; i < current.tokens.size(); ++i) {
      if (arg_columns[i].size() != predicates.size()) {
        format_error(source, arg_lines[i],
                     std::to_string(arg_columns[i].size()) + " ARG columns but " +
                         std::to_string(predicates.size()) + " predicates");
      }
      Token& t = current.tokens[i];
      if (t.top) t.graph_arcs.push_back({0, kTopLabel});
      for (std::size_t k = 0; k < predicates.size(); ++k) {
        if (arg_columns[i][k] != "_") t.graph_arcs.push_back({predicates[k], arg_columns[i][k]});
      }
    }
    validate_graph(current);
    corpus.push_back(std::move(current));
    current = Sentence{};
    arg_columns.clear();
    arg_lines.clear();
    open = false;
  };

  while (next_line(in, line, line_no)) {
    if (line.empty()) {
      finish();
      continue;
    }
    if (line[0] == '#' && current.tokens.empty()) {
      if (current.comments.empty()) current.sent_id = line.substr(1);
      current.comments.push_back(line.substr(1));
      open = true;
      continue;
    }
    open = true;
    auto cols = split_tabs(line);
    if (cols.size() < 7) {
      format_error(source, line_no,
                   "expected at least 7 columns, found " + std::to_string(cols.size()));
    }
    auto id = parse_index(cols[0]);
    if (!id) format_error(source, line_no, "non-integer ID '" + cols[0] + "'");
    auto flag = [&](const std::string& v, const char* name) {
      if (v == "+") return true;
      if (v == "-") return false;
      format_error(source, line_no, std::string(name) + " must be + or -, got '" + v + "'");
    };
    Token t;
    t.index = *id;
    t.form = cols[1];
    t.lemma = cols[2];
    t.pos = cols[3];
    t.top = flag(cols[4], "TOP");
    t.pred = flag(cols[5], "PRED");
    t.frame = cols[6];
    current.tokens.push_back(std::move(t));
    arg_columns.emplace_back(cols.begin() + 7, cols.end());
    arg_lines.push_back(line_no);
  }
  finish();
  return corpus;
}

Corpus read_sdp(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_sdp(in, path.string());
}

void write_sdp(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus) {
    if (!s.comments.empty()) {
      for (const auto& c : s.comments) out << '#' << c << '\n';
    } else {
      out << '#' << s.sent_id << '\n';
    }
    std::vector<std::size_t> predicates;
    for (const auto& t : s.tokens)
      if (t.pred) predicates.push_back(t.index);
    for (const auto& t : s.tokens) {
      out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.pos << '\t'
          << (t.top ? '+' : '-') << '\t' << (t.pred ? '+' : '-') << '\t' << t.frame;
      std::vector<std::string> args(predicates.size(), "_");
      for (const auto& arc : t.graph_arcs) {
        if (arc.head == 0) continue;
        auto it = std::find(predicates.begin(), predicates.end(), arc.head);
        if (it == predicates.end()) {
          fail(ErrorCode::kValidation, "arc head " + std::to_string(arc.head) +
                                           " is not marked as a predicate");
        }
        args[static_cast<std::size_t>(it - predicates.begin())] = arc.label;
      }
      for (const auto& a : args) out << '\t' << a;
      out << '\n';
    }
    out << '\n';
  }
}

void write_sdp(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_sdp(out, corpus);
}

// ----------------------------------------------------------------- tagged

Corpus read_tagged(std::istream& in, const std::string& source) {
  Corpus corpus;
  Sentence current;
  std::string line;
  std::size_t line_no = 0;

  auto finish = [&] {
    if (current.tokens.empty()) return;
    current.raw_text = join_forms(current);
    corpus.push_back(std::move(current));
    current = Sentence{};
  };

  while (next_line(in, line, line_no)) {
    if (line.empty()) {
      finish();
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      format_error(source, line_no, "expected exactly one tab");
    }
    Token t;
    t.index = current.tokens.size() + 1;
    t.form = line.substr(0, tab);
    t.pos = line.substr(tab + 1);
    current.tokens.push_back(std::move(t));
  }
  finish();
  return corpus;
}

Corpus read_tagged(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_tagged(in, path.string());
}

void write_tagged(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) out << t.form << '\t' << t.pos << '\n';
    out << '\n';
  }
}

void write_tagged(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_tagged(out, corpus);
}

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kConllu: return read_conllu(path);
    case CorpusFormat::kSdp: return read_sdp(path);
    case CorpusFormat::kTagged: return read_tagged(path);
  }
  return {};
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus,
                  CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kConllu: write_conllu(path, corpus); break;
    case CorpusFormat::kSdp: write_sdp(path, corpus); break;
    case CorpusFormat::kTagged: write_tagged(path, corpus); break;
  }
}

}  // namespace structpred::data
