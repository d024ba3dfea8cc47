#pragma once

// Position-aware tagging codec. One tag per token: B/I/E mark multi-token
// primary spans, S marks single-token ones, O is outside. B and S carry a
// sentiment and an offset window (j, k): the secondary span occupies tokens
// [i + j, i + k] relative to the tagged position i. Under scheme t the
// primary spans are targets and windows locate opinions; scheme o mirrors
// the roles. Tag sequences and triplet sets are in bijection as long as
// primary spans do not overlap and each has exactly one secondary span.

#include <string>
#include <string_view>
#include <vector>

#include "aste/types.hpp"

namespace aste {

// Values double as row indices of the sub-tag score head.
enum class SubTag : uint8_t { B = 0, I = 1, O = 2, E = 3, S = 4 };

inline constexpr int kNumSubTags = 5;

const char* subtag_name(SubTag s);  // "B", "I", ...

struct Tag {
  SubTag sub = SubTag::O;
  // Meaningful only for B and S; normalized to defaults otherwise so that
  // plain equality works.
  Sentiment pol = Sentiment::positive;
  int j = 0;
  int k = 0;

  static Tag simple(SubTag s) { return Tag{s, Sentiment::positive, 0, 0}; }
  static Tag with_window(SubTag s, Sentiment pol, int j, int k) {
    return Tag{s, pol, j, k};
  }
  bool has_window() const { return sub == SubTag::B || sub == SubTag::S; }
  friend bool operator==(const Tag&, const Tag&) = default;
};

// Total order used everywhere a tagset is enumerated or an argmax tie is
// broken: I, E, O first, then all B tags, then all S tags; within a family
// sentiment runs +, 0, - and windows are in (j, k) lexicographic order.
bool canonical_less(const Tag& a, const Tag& b);

struct TagSequence {
  std::vector<Tag> tags;
  Scheme scheme = Scheme::target_first;
  int max_offset = 0;
  int size() const { return static_cast<int>(tags.size()); }
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

// Triplet set -> tag sequence. Throws SpanOutOfBounds, MultipleSecondarySpans,
// OverlappingPrimarySpans, or OffsetExceedsMax. Secondary spans are free to
// overlap anything; several primaries may share one secondary span.
TagSequence encode(int n_tokens, const std::vector<Triplet>& triplets,
                   Scheme scheme, int max_offset);

// Tag sequence -> canonically sorted triplet set. Throws MalformedSequence /
// WindowOutOfBounds / OffsetExceedsMax when the sequence is not well formed.
std::vector<Triplet> decode(const TagSequence& seq);

// All tags admissible at position i of an n-token sentence: window stays
// inside the sentence and |j|, |k| <= max_offset. Canonical order.
std::vector<Tag> enumerate_tagset(int n, int i, int max_offset);

// Number of admissible (j, k) windows at position i; tagset size is 3 + 6 * this.
int window_pair_count(int n, int i, int max_offset);

// Well-formedness: BIOES automaton holds (every B is closed by E through I,
// no dangling I/E), every window is inside the sentence, offsets within bound.
void check_well_formed(const TagSequence& seq);
bool is_well_formed(const TagSequence& seq) noexcept;

// Non-fatal data oddities (e.g. a triplet whose target and opinion overlap).
std::vector<std::string> codec_warnings(const std::vector<Triplet>& triplets);

// Text form: "O", "I", "E", "B^+_{-4,-4}", "S^0_{2,3}". Sequences are
// space-separated tags.
std::string tag_to_string(const Tag& tag);
Tag tag_from_string(std::string_view text);
std::string sequence_to_string(const TagSequence& seq);
std::vector<Tag> tags_from_string(std::string_view text);

}  // namespace aste
