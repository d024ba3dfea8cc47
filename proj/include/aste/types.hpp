#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aste {

// Sentiment polarity with stable codes used in serialized data and in the
// polarity head's output ordering (+, 0, -).
enum class Sentiment : uint8_t { positive = 0, neutral = 1, negative = 2 };

inline constexpr std::array<Sentiment, 3> kAllSentiments = {
    Sentiment::positive, Sentiment::neutral, Sentiment::negative};

inline char sentiment_symbol(Sentiment s) {
  switch (s) {
    case Sentiment::positive: return '+';
    case Sentiment::neutral: return '0';
    case Sentiment::negative: return '-';
  }
  return '?';
}

inline const char* sentiment_code(Sentiment s) {
  switch (s) {
    case Sentiment::positive: return "POS";
    case Sentiment::neutral: return "NEU";
    case Sentiment::negative: return "NEG";
  }
  return "???";
}

std::optional<Sentiment> sentiment_from_code(const std::string& code);
std::optional<Sentiment> sentiment_from_symbol(char c);

// Inclusive token span [start, end], 0-based.
struct Span {
  int start = 0;
  int end = 0;
  friend auto operator<=>(const Span&, const Span&) = default;
  int length() const { return end - start + 1; }
};

// A (target span, opinion span, sentiment) triple over one sentence.
struct Triplet {
  Span target;
  Span opinion;
  Sentiment sentiment = Sentiment::positive;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

// One annotated sentence.
struct CorpusRecord {
  std::vector<std::string> tokens;
  std::vector<Triplet> triplets;
  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

// Which span family carries the BIOES structure. The other family is located
// through the offset window attached to B/S tags.
enum class Scheme : uint8_t { target_first, opinion_first };

inline char scheme_letter(Scheme s) {
  return s == Scheme::target_first ? 't' : 'o';
}

std::optional<Scheme> scheme_from_letter(char c);

// Error codes cover every failure the library reports deliberately.
// data_* style codes describe bad input; the rest are internal misuse.
enum class Errc {
  // codec
  overlapping_primary_spans,
  multiple_secondary_spans,
  offset_exceeds_max,
  span_out_of_bounds,
  malformed_sequence,
  window_out_of_bounds,
  // encoder / crf
  index_out_of_range,
  tag_window_out_of_bounds,
  invalid_sequence,
  too_many_sequences,
  stale_tape,
  shape_mismatch,
  // io
  parse_error,
  non_contiguous_span,
  sentence_count_mismatch,
  io_error,
  config_error,
  // training
  encoding_error,
  no_trainable_instances,
};

const char* errc_name(Errc c);

// True for errors a user can cause with bad files or flags (CLI exit 2);
// false for internal invariant violations (CLI exit 3).
bool is_data_error(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + message
                                     : message),
        code(code),
        line(line) {}
  Errc code;
  int line;  // 1-based input line for io errors, -1 otherwise
};

}  // namespace aste
