#pragma once

// Deterministic toy corpus for trainability tests. Four sentence patterns
// over a small closed vocabulary; index cycling guarantees every token and
// every pattern appears within the first 8 sentences, so a 20-sentence
// training slice covers the vocabulary and a later dev slice contains no
// unknown words.

#include <string>
#include <vector>

#include "aste/types.hpp"

namespace aste::testing {

inline CorpusRecord synthetic_sentence(int t) {
  static const std::vector<std::string> nouns = {"pizza",  "service", "battery",
                                                 "screen", "staff",   "wine",
                                                 "decor",  "keyboard"};
  static const std::vector<std::string> adjectives = {"great", "awful", "average",
                                                      "tasty", "slow",  "plain"};
  // adjective index -> sentiment, fixed map
  static const Sentiment tone[6] = {Sentiment::positive, Sentiment::negative,
                                    Sentiment::neutral,  Sentiment::positive,
                                    Sentiment::negative, Sentiment::neutral};

  const std::string& noun = nouns[t % 8];
  const std::string& noun2 = nouns[(t + 3) % 8];
  const std::string& adj = adjectives[t % 6];
  const std::string& adj2 = adjectives[(t + 2) % 6];
  const Sentiment pol = tone[t % 6];
  const Sentiment pol2 = tone[(t + 2) % 6];

  CorpusRecord rec;
  switch (t % 4) {
    case 0:  // the N was A        target [1,1], opinion [3,3]
      rec.tokens = {"the", noun, "was", adj};
      rec.triplets = {{{1, 1}, {3, 3}, pol}};
      break;
    case 1:  // A N today          target [1,1], opinion [0,0]
      rec.tokens = {adj, noun, "today"};
      rec.triplets = {{{1, 1}, {0, 0}, pol}};
      break;
    case 2:  // the N was A and the N2 was A2   two triplets
      rec.tokens = {"the", noun, "was", adj, "and", "the", noun2, "was", adj2};
      rec.triplets = {{{1, 1}, {3, 3}, pol}, {{6, 6}, {8, 8}, pol2}};
      break;
    default:  // the N N2 was A     two-token target [1,2], opinion [4,4]
      rec.tokens = {"the", noun, noun2, "was", adj};
      rec.triplets = {{{1, 2}, {4, 4}, pol}};
      break;
  }
  return rec;
}

inline std::vector<CorpusRecord> synthetic_corpus(int first, int count) {
  std::vector<CorpusRecord> out;
  out.reserve(count);
  for (int t = first; t < first + count; ++t) out.push_back(synthetic_sentence(t));
  return out;
}

}  // namespace aste::testing
