#pragma once

// Corpus and resource I/O. The canonical corpus format is JSON Lines: one
// object per sentence with "tokens" and "triplets", spans 0-based inclusive,
// sentiments "POS"/"NEU"/"NEG". A converter ingests the common text release
// format ("sentence####[([target ids], [opinion ids], 'POS'), ...]").

#include <map>
#include <string>
#include <vector>

#include "aste/types.hpp"

namespace aste {

// Strict parse: any structural problem reports the 1-based line number.
std::vector<CorpusRecord> load_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<CorpusRecord>& records);

CorpusRecord record_from_json_line(const std::string& line, int line_no);
std::string record_to_json_line(const CorpusRecord& record);

// Text release adapter. Index lists must be contiguous runs; anything else is
// NonContiguousSpan. Unknown sentiment strings are rejected.
std::vector<CorpusRecord> load_aste_txt(const std::string& path);

// Loads by extension: .jsonl/.json as JSON Lines, .txt through the adapter.
std::vector<CorpusRecord> load_corpus(const std::string& path);

struct DatasetStats {
  size_t sentences = 0;
  size_t triplets = 0;
  size_t by_polarity[3] = {};         // indexed by Sentiment codes
  size_t targets_one_opinion = 0;     // distinct target spans, per sentence
  size_t targets_multi_opinion = 0;
  size_t opinions_one_target = 0;
  size_t opinions_multi_target = 0;
};

DatasetStats dataset_stats(const std::vector<CorpusRecord>& records);
std::string format_stats(const DatasetStats& stats);

// Whitespace-separated text embeddings: token then word_dim floats per line.
// Width is fixed by the first line; later mismatches are ParseError.
std::map<std::string, std::vector<double>> load_embeddings_text(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace aste
