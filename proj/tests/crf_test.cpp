#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "aste/crf.hpp"
#include "aste/selfcheck.hpp"

using namespace aste;

namespace {

ModelConfig small_config(int hidden, int max_offset, bool mask = true) {
  ModelConfig cfg;
  cfg.word_dim = 3;
  cfg.hidden = hidden;
  cfg.offset_dim = 2;
  cfg.max_offset = max_offset;
  cfg.dropout = 0.0;
  cfg.transition_mask = mask;
  return cfg;
}

Model zero_model(int max_offset, bool mask, int n_tokens) {
  Rng rng(1);
  Model model = random_model(small_config(2, max_offset, mask), n_tokens + 2, rng);
  model.for_each_parameter([](const std::string&, Tensor& t) { t.value.zero(); });
  return model;
}

EncoderState eval_state(const Model& model, int n, uint64_t seed) {
  Rng rng(seed);
  return encode_tokens(model, random_token_ids(model, n, rng), false, nullptr);
}

double lse_over(const std::vector<ScoredSequence>& all) {
  std::vector<double> scores;
  scores.reserve(all.size());
  for (const auto& s : all) scores.push_back(s.score);
  return log_sum_exp(scores.data(), static_cast<int>(scores.size()));
}

}  // namespace

TEST_CASE("every valid sequence scores zero under a zero model") {
  const Model model = zero_model(1, true, 2);
  const EncoderState state = eval_state(model, 2, 2);
  const auto all = oracle_enumerate(model, state, Scheme::target_first, 1);
  CHECK(all.size() == 109);
  CHECK(count_valid_sequences(2, 1, true) == 109);
  for (const auto& s : all) {
    CHECK(s.score == 0.0);
    CHECK(sequence_score(model, state, s.seq) == 0.0);
  }
  CHECK(log_partition(model, state, 1) == doctest::Approx(std::log(109.0)).epsilon(1e-12));
}

TEST_CASE("single-token partition counts the reachable tags") {
  const Model masked = zero_model(2, true, 1);
  CHECK(log_partition(masked, eval_state(masked, 1, 3), 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(count_valid_sequences(1, 2, true) == 4);

  const Model open = zero_model(2, false, 1);
  CHECK(log_partition(open, eval_state(open, 1, 3), 2) ==
        doctest::Approx(std::log(9.0)).epsilon(1e-12));
  CHECK(count_valid_sequences(1, 2, false) == 9);
}

TEST_CASE("sequence score sums emissions and transitions") {
  Rng rng(4);
  Model model = random_model(small_config(3, 2), 8, rng);
  for (double& v : model.transitions.value.data) v = rng.normal(0.0, 0.5);
  const EncoderState state = eval_state(model, 3, 5);

  TagSequence seq;
  seq.scheme = Scheme::target_first;
  seq.max_offset = 2;
  seq.tags = {Tag::with_window(SubTag::B, Sentiment::negative, 1, 2),
              Tag::simple(SubTag::E), Tag::simple(SubTag::O)};

  const auto& tr = model.transitions.value;
  const double expected = tr.at(kStartSym, static_cast<int>(SubTag::B)) +
                          factor_scores(model, state, 0, seq.tags[0]) +
                          tr.at(static_cast<int>(SubTag::B), static_cast<int>(SubTag::E)) +
                          factor_scores(model, state, 1, seq.tags[1]) +
                          tr.at(static_cast<int>(SubTag::E), static_cast<int>(SubTag::O)) +
                          factor_scores(model, state, 2, seq.tags[2]) +
                          tr.at(static_cast<int>(SubTag::O), kStopSym);
  CHECK(sequence_score(model, state, seq) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sequence score rejects sequences that do not fit") {
  const Model model = zero_model(2, true, 3);
  const EncoderState state = eval_state(model, 3, 6);
  auto expect_invalid = [&](TagSequence seq) {
    try {
      sequence_score(model, state, seq);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code == Errc::invalid_sequence);
    }
  };
  TagSequence wrong_len;
  wrong_len.max_offset = 2;
  wrong_len.tags = {Tag::simple(SubTag::O)};
  expect_invalid(wrong_len);

  TagSequence ill;
  ill.max_offset = 2;
  ill.tags = {Tag::simple(SubTag::I), Tag::simple(SubTag::O), Tag::simple(SubTag::O)};
  expect_invalid(ill);

  TagSequence loose;  // declared bound wider than the model supports
  loose.max_offset = 5;
  loose.tags = {Tag::simple(SubTag::O), Tag::simple(SubTag::O), Tag::simple(SubTag::O)};
  expect_invalid(loose);

  TagSequence wide;  // offset exceeds the declared bound
  wide.max_offset = 2;
  wide.tags = {Tag::simple(SubTag::O), Tag::simple(SubTag::O),
               Tag::with_window(SubTag::S, Sentiment::positive, -2, -2)};
  CHECK(sequence_score(model, state, wide) == 0.0);
  wide.tags[2] = Tag::with_window(SubTag::S, Sentiment::positive, -3, -2);
  expect_invalid(wide);
}

TEST_CASE("viterbi breaks exact ties toward the canonically smallest suffix") {
  const Model model = zero_model(1, true, 2);
  const EncoderState state = eval_state(model, 2, 7);
  const ViterbiResult res = viterbi(model, state, Scheme::target_first, 1);
  CHECK(res.score == 0.0);
  REQUIRE(res.seq.size() == 2);
  // all sequences tie at zero; reverse-lexicographic canonical minimum is
  // [B^+_{0,0}, E] because E precedes O and S at the last position
  CHECK(res.seq.tags[1] == Tag::simple(SubTag::E));
  CHECK(res.seq.tags[0] == Tag::with_window(SubTag::B, Sentiment::positive, 0, 0));
  const auto all = oracle_enumerate(model, state, Scheme::target_first, 1);
  CHECK(oracle_best(all).seq == res.seq);
}

TEST_CASE("exact inference matches exhaustive enumeration") {
  Rng rng(8);
  for (int t = 0; t < 25; ++t) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const int m = static_cast<int>(rng.below(3));
    const bool mask = t % 4 != 3;
    const Scheme scheme = t % 2 == 0 ? Scheme::target_first : Scheme::opinion_first;
    if (count_valid_sequences(n, m, mask) > 100000) continue;
    Model model = random_model(small_config(2 + t % 3, m, mask), 10, rng);
    for (double& v : model.transitions.value.data) v = rng.normal(0.0, 0.3);
    const EncoderState state = eval_state(model, n, 100 + t);
    const auto all = oracle_enumerate(model, state, scheme, m);

    const ViterbiResult res = viterbi(model, state, scheme, m);
    const ScoredSequence& best = oracle_best(all);
    CHECK(std::abs(res.score - best.score) <= 1e-9);
    CHECK(res.seq == best.seq);

    const double log_z = log_partition(model, state, m);
    CHECK(std::abs(log_z - lse_over(all)) <= 1e-9);

    double total = 0.0;
    for (const auto& s : all) total += std::exp(log_prob(model, state, s.seq));
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("the enumeration cap triggers instead of blowing up") {
  const Model model = zero_model(3, true, 9);
  const EncoderState state = eval_state(model, 9, 9);
  try {
    oracle_enumerate(model, state, Scheme::target_first, 3, 10000);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code == Errc::too_many_sequences);
  }
}

TEST_CASE("masked decoding always yields a decodable sequence") {
  Rng rng(10);
  for (int t = 0; t < 40; ++t) {
    const int n = 1 + static_cast<int>(rng.below(10));
    const int m = static_cast<int>(rng.below(4));
    Model model = random_model(small_config(3, m), 14, rng);
    for (double& v : model.transitions.value.data) v = rng.normal(0.0, 1.0);
    const EncoderState state = eval_state(model, n, 200 + t);
    const ViterbiResult res = viterbi(model, state, Scheme::target_first, m);
    CHECK(is_well_formed(res.seq));
    CHECK_NOTHROW(decode(res.seq));
  }
}

TEST_CASE("decoding with a narrower offset bound than the model trained with") {
  Rng rng(11);
  Model model = random_model(small_config(2, 3), 10, rng);
  const EncoderState state = eval_state(model, 4, 12);
  const auto all = oracle_enumerate(model, state, Scheme::target_first, 1);
  CHECK(std::abs(log_partition(model, state, 1) - lse_over(all)) <= 1e-9);
  CHECK(log_partition(model, state, 1) < log_partition(model, state, 3));
  const ViterbiResult res = viterbi(model, state, Scheme::target_first, 1);
  for (const Tag& tag : res.seq.tags)
    if (tag.has_window()) CHECK(std::max(std::abs(tag.j), std::abs(tag.k)) <= 1);
}

TEST_CASE("partition gradients are proper marginals") {
  Rng rng(13);
  Model model = random_model(small_config(2, 2), 10, rng);
  for (double& v : model.transitions.value.data) v = rng.normal(0.0, 0.4);
  const int n = 5;
  const EncoderState state = eval_state(model, n, 14);
  const ScoreTable table = compute_scores(model, state, 2);
  const Lattice lattice = make_lattice(n, 2);
  const PartitionGradients pg = partition_gradients(model, table, lattice);

  CHECK(std::abs(pg.log_z - log_partition(model, state, 2)) <= 1e-12);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double p : pg.cell[i]) {
      CHECK(p >= -1e-12);
      CHECK(p <= 1.0 + 1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  }
  double transition_total = 0.0;
  for (int s = 0; s < kNumTransSyms; ++s)
    for (int t = 0; t < kNumTransSyms; ++t) {
      CHECK(pg.transition[s][t] >= -1e-12);
      transition_total += pg.transition[s][t];
    }
  // START->y1, n-1 interior moves, yn->STOP
  CHECK(transition_total == doctest::Approx(n + 1.0).epsilon(1e-10));
}

TEST_CASE("lattice sizes follow the closed-form tagset counts") {
  const Lattice lat = make_lattice(6, 2);
  REQUIRE(lat.n == 6);
  for (int i = 0; i < 6; ++i)
    CHECK(static_cast<int>(lat.tags[i].size()) == 3 + 6 * window_pair_count(6, i, 2));
}
