#pragma once

// Micro-averaged precision/recall/F1 over triplets, exact or span-relaxed,
// plus length-bucketed breakdowns and two-model ensemble merging.

#include <string>
#include <vector>

#include "aste/types.hpp"

namespace aste {

// exact requires both spans and the sentiment to match. The partial modes
// relax one span family to overlap while the other span and the sentiment
// stay exact.
enum class MatchMode { exact, partial_target, partial_opinion };

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t matched = 0;
  size_t predicted = 0;
  size_t gold = 0;
};

PRF make_prf(size_t matched, size_t predicted, size_t gold);

// Inclusive spans overlap iff max(starts) <= min(ends).
bool spans_overlap(const Span& a, const Span& b);

// Triplets overlap iff their targets overlap and their opinions overlap.
bool triplets_overlap(const Triplet& a, const Triplet& b);

bool triplet_matches(const Triplet& gold, const Triplet& pred, MatchMode mode);

// Corpus-level score: per sentence, predictions are deduplicated and matched
// greedily in canonical order against the gold multiset, each gold consumed
// at most once; counts are pooled over sentences (micro average). Sentence
// lists must be parallel.
PRF score(const std::vector<std::vector<Triplet>>& gold,
          const std::vector<std::vector<Triplet>>& pred, MatchMode mode);

enum class LengthFacet { target_len, opinion_len, offset_len };

struct BucketPRF {
  int length = 0;
  PRF prf;
};

// Exact-match scores stratified by a length facet: target span length,
// opinion span length, or |opinion.start - target.start|. Buckets with no
// gold and no predictions are omitted; ascending by length.
std::vector<BucketPRF> length_breakdown(const std::vector<std::vector<Triplet>>& gold,
                                        const std::vector<std::vector<Triplet>>& pred,
                                        LengthFacet facet);

// Keeps base predictions and adds donor triplets that overlap none of the
// original base triplets. Both sides are deduplicated; output is canonical.
std::vector<std::vector<Triplet>> ensemble_merge(
    const std::vector<std::vector<Triplet>>& base,
    const std::vector<std::vector<Triplet>>& donor);

int facet_length(const Triplet& t, LengthFacet facet);

std::string format_prf(const PRF& prf);
std::string format_buckets(const std::vector<BucketPRF>& buckets, LengthFacet facet);
std::string buckets_to_csv(const std::vector<BucketPRF>& buckets, LengthFacet facet);

}  // namespace aste
