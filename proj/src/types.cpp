#include "aste/types.hpp"

namespace aste {

std::optional<Sentiment> sentiment_from_code(const std::string& code) {
  if (code == "POS") return Sentiment::positive;
  if (code == "NEU") return Sentiment::neutral;
  if (code == "NEG") return Sentiment::negative;
  return std::nullopt;
}

std::optional<Sentiment> sentiment_from_symbol(char c) {
  switch (c) {
    case '+': return Sentiment::positive;
    case '0': return Sentiment::neutral;
    case '-': return Sentiment::negative;
  }
  return std::nullopt;
}

std::optional<Scheme> scheme_from_letter(char c) {
  if (c == 't') return Scheme::target_first;
  if (c == 'o') return Scheme::opinion_first;
  return std::nullopt;
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::overlapping_primary_spans: return "OverlappingPrimarySpans";
    case Errc::multiple_secondary_spans: return "MultipleSecondarySpans";
    case Errc::offset_exceeds_max: return "OffsetExceedsMax";
    case Errc::span_out_of_bounds: return "SpanOutOfBounds";
    case Errc::malformed_sequence: return "MalformedSequence";
    case Errc::window_out_of_bounds: return "WindowOutOfBounds";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::tag_window_out_of_bounds: return "TagWindowOutOfBounds";
    case Errc::invalid_sequence: return "InvalidSequence";
    case Errc::too_many_sequences: return "TooManySequences";
    case Errc::stale_tape: return "StaleTape";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::parse_error: return "ParseError";
    case Errc::non_contiguous_span: return "NonContiguousSpan";
    case Errc::sentence_count_mismatch: return "SentenceCountMismatch";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
    case Errc::encoding_error: return "EncodingError";
    case Errc::no_trainable_instances: return "NoTrainableInstances";
  }
  return "UnknownError";
}

bool is_data_error(Errc c) {
  switch (c) {
    case Errc::overlapping_primary_spans:
    case Errc::multiple_secondary_spans:
    case Errc::offset_exceeds_max:
    case Errc::span_out_of_bounds:
    case Errc::malformed_sequence:
    case Errc::window_out_of_bounds:
    case Errc::parse_error:
    case Errc::non_contiguous_span:
    case Errc::sentence_count_mismatch:
    case Errc::io_error:
    case Errc::config_error:
    case Errc::encoding_error:
    case Errc::no_trainable_instances:
      return true;
    case Errc::index_out_of_range:
    case Errc::tag_window_out_of_bounds:
    case Errc::invalid_sequence:
    case Errc::too_many_sequences:
    case Errc::stale_tape:
    case Errc::shape_mismatch:
      return false;
  }
  return false;
}

}  // namespace aste
