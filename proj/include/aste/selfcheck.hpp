#pragma once

// Randomized verification: instance generators plus the reduced-scale check
// suite behind the CLI's selfcheck command. The same generators back the
// full-scale acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

#include "aste/crf.hpp"
#include "aste/model.hpp"
#include "aste/types.hpp"

namespace aste {

// Fully randomized model: init() plus normal-distributed transitions, over a
// synthetic vocabulary w0..w{vocab-1}.
Model random_model(const ModelConfig& config, int vocab, Rng& rng);

// Uniformly random token ids (unk and real rows, never pad).
std::vector<int> random_token_ids(const Model& model, int n, Rng& rng);

// A random triplet set valid for encode(n, ., scheme, max_offset): up to
// three disjoint primary spans, each with one admissible offset window.
std::vector<Triplet> random_triplets(int n, int max_offset, Scheme scheme, Rng& rng);

// A uniformly sampled well-formed tag sequence (structural mask respected).
TagSequence random_tag_sequence(int n, int max_offset, Scheme scheme, Rng& rng);

// Order used to resolve score ties among enumerated sequences: compares tags
// from the last position backwards by canonical order. Matches the decoder's
// backward tie-breaking.
bool reverse_lex_less(const TagSequence& a, const TagSequence& b);

// Best sequence in an oracle enumeration under that tie-break.
const ScoredSequence& oracle_best(const std::vector<ScoredSequence>& all);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  uint64_t seed = 7;
  int codec_cases = 1000;
  int inference_models = 50;
  int gradient_instances = 3;
};

// Runs codec round-trips, tagset size checks, oracle-vs-DP inference checks,
// distribution normalization, and finite-difference gradient checks.
std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options);

}  // namespace aste
