#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "structpred/data/corpus.hpp"

namespace structpred::data {

// 10-column CoNLL-U. Multiword ranges and empty nodes are skipped; `# text =`
// fills raw_text and `# sent_id =` fills sent_id.
Corpus read_conllu(std::istream& in, const std::string& source = "<stream>");
Corpus read_conllu(const std::filesystem::path& path);
void write_conllu(std::ostream& out, const Corpus& corpus);
void write_conllu(const std::filesystem::path& path, const Corpus& corpus);

// SemEval-2015 SDP: ID FORM LEMMA POS TOP PRED FRAME ARG1..ARGk, one ARG column
// per predicate in order, '_' for no arc, '#id' line opening each block.
Corpus read_sdp(std::istream& in, const std::string& source = "<stream>");
Corpus read_sdp(const std::filesystem::path& path);
void write_sdp(std::ostream& out, const Corpus& corpus);
void write_sdp(const std::filesystem::path& path, const Corpus& corpus);

// "form<TAB>pos" lines, blank line between sentences.
Corpus read_tagged(std::istream& in, const std::string& source = "<stream>");
Corpus read_tagged(const std::filesystem::path& path);
void write_tagged(std::ostream& out, const Corpus& corpus);
void write_tagged(const std::filesystem::path& path, const Corpus& corpus);

enum class CorpusFormat { kConllu, kSdp, kTagged };

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus,
                  CorpusFormat format);

}  // namespace structpred::data
