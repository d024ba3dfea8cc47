#pragma once

// Linear-chain CRF over the position-aware tagset. Emission scores come from
// the factor heads; transition scores depend only on sub-tags, which keeps
// every dynamic program at O(n * M^2) lattice cells with O(1) work per cell
// after a grouped pass over the five sub-tag families.

#include <cstdint>
#include <vector>

#include "aste/encoder.hpp"
#include "aste/model.hpp"
#include "aste/tagging.hpp"

namespace aste {

// Admissible tags per position plus one score table of identical shape,
// filled by the inference routines (alpha or viterbi values).
struct Lattice {
  int n = 0;
  std::vector<std::vector<Tag>> tags;
  std::vector<std::vector<double>> score;
};

// Tagsets for every position of an n-token sentence.
Lattice make_lattice(int n, int max_offset);

// Score of one complete sequence: boundary and pairwise sub-tag transitions
// plus every factor score. Throws InvalidSequence when the sequence does not
// fit the sentence or is not well formed.
double sequence_score(const Model& model, const EncoderState& state,
                      const TagSequence& seq);

// log of the summed exponentiated scores of all structurally valid sequences.
double log_partition(const Model& model, const EncoderState& state, int max_offset);

struct ViterbiResult {
  TagSequence seq;
  double score = 0.0;
};

// Exact argmax decode. Ties break toward the canonically smallest tag,
// resolved from the last position backwards.
ViterbiResult viterbi(const Model& model, const EncoderState& state, Scheme scheme,
                      int max_offset);

// sequence_score - log_partition.
double log_prob(const Model& model, const EncoderState& state, const TagSequence& seq);

struct ScoredSequence {
  TagSequence seq;
  double score = 0.0;
};

// Exhaustive reference: every structurally valid sequence with its score, in
// depth-first canonical order. Refuses instances whose sequence count exceeds
// cap (TooManySequences). Meant for cross-checking the dynamic programs on
// small inputs.
std::vector<ScoredSequence> oracle_enumerate(const Model& model,
                                             const EncoderState& state, Scheme scheme,
                                             int max_offset,
                                             uint64_t cap = 2'000'000);

// Number of structurally valid sequences (respecting the model's transition
// mask setting), saturating at 2^63-1.
uint64_t count_valid_sequences(int n, int max_offset, bool masked);

// d(logZ)/d(emission) per lattice cell and d(logZ)/d(transition) per symbol
// pair, from one forward-backward sweep. The training loop subtracts gold
// indicators from these to get loss gradients.
struct PartitionGradients {
  double log_z = 0.0;
  std::vector<std::vector<double>> cell;           // aligned with Lattice.tags
  double transition[kNumTransSyms][kNumTransSyms]  // expected counts
      = {};
};

PartitionGradients partition_gradients(const Model& model, const ScoreTable& table,
                                       const Lattice& lattice);

}  // namespace aste
