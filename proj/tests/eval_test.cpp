#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "aste/eval.hpp"
#include "aste/la.hpp"

using namespace aste;

namespace {

Triplet trip(int ts, int te, int os, int oe, Sentiment pol = Sentiment::positive) {
  return {{ts, te}, {os, oe}, pol};
}

std::vector<std::vector<Triplet>> random_predictions(Rng& rng, int sentences,
                                                     int max_len) {
  std::vector<std::vector<Triplet>> out(sentences);
  for (auto& sent : out) {
    const int count = static_cast<int>(rng.below(4));
    for (int c = 0; c < count; ++c) {
      const int ts = static_cast<int>(rng.below(max_len));
      const int te = ts + static_cast<int>(rng.below(3));
      const int os = static_cast<int>(rng.below(max_len));
      const int oe = os + static_cast<int>(rng.below(3));
      const Sentiment pol = static_cast<Sentiment>(rng.below(3));
      sent.push_back(trip(ts, te, os, oe, pol));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("span overlap is symmetric containment-or-crossing") {
  CHECK(spans_overlap({0, 2}, {2, 4}));   // touch at one token
  CHECK(spans_overlap({2, 4}, {0, 2}));
  CHECK(spans_overlap({1, 5}, {2, 3}));   // nested
  CHECK(spans_overlap({3, 3}, {3, 3}));   // identical singletons
  CHECK(!spans_overlap({0, 1}, {2, 3}));  // adjacent but disjoint
  CHECK(!spans_overlap({5, 6}, {0, 4}));
}

TEST_CASE("triplet overlap needs both span families to overlap") {
  const Triplet a = trip(0, 1, 4, 5);
  CHECK(triplets_overlap(a, trip(1, 2, 5, 6)));
  CHECK(!triplets_overlap(a, trip(1, 2, 6, 7)));   // opinions disjoint
  CHECK(!triplets_overlap(a, trip(2, 3, 4, 5)));   // targets disjoint
  // sentiment plays no role in overlap
  CHECK(triplets_overlap(a, trip(0, 1, 4, 5, Sentiment::negative)));
}

TEST_CASE("match modes: exact misses a one-token boundary error, partial accepts") {
  const Triplet gold = trip(2, 3, 5, 5);

  const Triplet target_off = trip(2, 2, 5, 5);
  CHECK(!triplet_matches(gold, target_off, MatchMode::exact));
  CHECK(triplet_matches(gold, target_off, MatchMode::partial_target));
  CHECK(!triplet_matches(gold, target_off, MatchMode::partial_opinion));

  const Triplet opinion_off = trip(2, 3, 5, 6);
  CHECK(!triplet_matches(gold, opinion_off, MatchMode::exact));
  CHECK(!triplet_matches(gold, opinion_off, MatchMode::partial_target));
  CHECK(triplet_matches(gold, opinion_off, MatchMode::partial_opinion));

  // each partial mode keeps the other span family exact
  const Triplet both_off = trip(2, 2, 5, 6);
  CHECK(!triplet_matches(gold, both_off, MatchMode::partial_target));
  CHECK(!triplet_matches(gold, both_off, MatchMode::partial_opinion));

  // a wrong sentiment never matches
  const Triplet flipped = trip(2, 3, 5, 5, Sentiment::negative);
  CHECK(!triplet_matches(gold, flipped, MatchMode::exact));
  CHECK(!triplet_matches(gold, flipped, MatchMode::partial_target));
  CHECK(!triplet_matches(gold, flipped, MatchMode::partial_opinion));

  CHECK(triplet_matches(gold, gold, MatchMode::exact));
  CHECK(triplet_matches(gold, gold, MatchMode::partial_target));
  CHECK(triplet_matches(gold, gold, MatchMode::partial_opinion));
}

TEST_CASE("scoring deduplicates predictions and consumes gold at most once") {
  const std::vector<std::vector<Triplet>> gold = {{trip(0, 0, 2, 2)}};
  // the same correct triplet predicted twice counts as one prediction
  const std::vector<std::vector<Triplet>> twice = {{trip(0, 0, 2, 2), trip(0, 0, 2, 2)}};
  PRF prf = score(gold, twice, MatchMode::exact);
  CHECK(prf.predicted == 1);
  CHECK(prf.matched == 1);
  CHECK(prf.precision == 1.0);
  CHECK(prf.recall == 1.0);
  CHECK(prf.f1 == 1.0);

  // two identical golds require two matching predictions; one is not enough
  const std::vector<std::vector<Triplet>> double_gold = {
      {trip(0, 0, 2, 2), trip(0, 0, 2, 2)}};
  prf = score(double_gold, twice, MatchMode::exact);
  CHECK(prf.gold == 2);
  CHECK(prf.matched == 1);
  CHECK(prf.recall == 0.5);
}

TEST_CASE("scores pool counts over sentences") {
  const std::vector<std::vector<Triplet>> gold = {
      {trip(0, 0, 2, 2), trip(4, 4, 6, 6)}, {trip(1, 2, 4, 4)}, {}};
  const std::vector<std::vector<Triplet>> pred = {
      {trip(0, 0, 2, 2)}, {trip(1, 2, 4, 4), trip(7, 7, 9, 9)}, {trip(0, 0, 1, 1)}};
  const PRF prf = score(gold, pred, MatchMode::exact);
  CHECK(prf.gold == 3);
  CHECK(prf.predicted == 4);
  CHECK(prf.matched == 2);
  CHECK(prf.precision == doctest::Approx(0.5));
  CHECK(prf.recall == doctest::Approx(2.0 / 3.0));
  const double p = prf.precision, r = prf.recall;
  CHECK(prf.f1 == doctest::Approx(2 * p * r / (p + r)));
}

TEST_CASE("degenerate counts give zero scores, not NaN") {
  const PRF empty = score({{}}, {{}}, MatchMode::exact);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  const PRF no_pred = score({{trip(0, 0, 1, 1)}}, {{}}, MatchMode::exact);
  CHECK(no_pred.f1 == 0.0);
  CHECK(!std::isnan(no_pred.precision));
}

TEST_CASE("relaxing a span family never loses matches") {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const auto gold = random_predictions(rng, 3, 8);
    const auto pred = random_predictions(rng, 3, 8);
    const size_t exact = score(gold, pred, MatchMode::exact).matched;
    CHECK(exact <= score(gold, pred, MatchMode::partial_target).matched);
    CHECK(exact <= score(gold, pred, MatchMode::partial_opinion).matched);
  }
}

TEST_CASE("length buckets partition the exact counts") {
  const std::vector<std::vector<Triplet>> gold = {
      {trip(0, 0, 2, 2), trip(4, 5, 7, 7), trip(9, 11, 13, 13)}};
  const std::vector<std::vector<Triplet>> pred = {
      {trip(0, 0, 2, 2), trip(4, 5, 7, 7), trip(9, 10, 13, 13)}};

  const auto buckets = length_breakdown(gold, pred, LengthFacet::target_len);
  size_t bucket_gold = 0, bucket_pred = 0, bucket_matched = 0;
  for (const auto& b : buckets) {
    bucket_gold += b.prf.gold;
    bucket_pred += b.prf.predicted;
    bucket_matched += b.prf.matched;
  }
  const PRF total = score(gold, pred, MatchMode::exact);
  CHECK(bucket_gold == total.gold);
  CHECK(bucket_pred == total.predicted);
  CHECK(bucket_matched == total.matched);

  // the length-1 and length-2 buckets are perfect; length 3 has one miss each way
  REQUIRE(buckets.size() == 3);
  CHECK(buckets[0].length == 1);
  CHECK(buckets[0].prf.f1 == 1.0);
  CHECK(buckets[1].length == 2);
  CHECK(buckets[1].prf.matched == 1);
  CHECK(buckets[2].length == 3);
  CHECK(buckets[2].prf.matched == 0);
  CHECK(buckets[2].prf.gold == 1);
  // the off-by-one prediction has target length 2, so it lands in bucket 2
  CHECK(buckets[1].prf.predicted == 2);
}

TEST_CASE("facet lengths") {
  const Triplet t = trip(3, 5, 9, 9);
  CHECK(facet_length(t, LengthFacet::target_len) == 3);
  CHECK(facet_length(t, LengthFacet::opinion_len) == 1);
  CHECK(facet_length(t, LengthFacet::offset_len) == 6);
  CHECK(facet_length(trip(7, 8, 2, 3), LengthFacet::offset_len) == 5);
}

TEST_CASE("ensemble merge keeps base and adds only non-conflicting donors") {
  const std::vector<std::vector<Triplet>> base = {{trip(0, 1, 3, 3)}};
  const Triplet clash = trip(1, 2, 3, 4);      // overlaps the base triplet
  const Triplet clean = trip(5, 6, 8, 8);      // disjoint from base
  const Triplet chained = trip(6, 7, 8, 9);    // overlaps clean, not base
  const std::vector<std::vector<Triplet>> donor = {{clash, clean, chained}};

  const auto merged = ensemble_merge(base, donor);
  REQUIRE(merged.size() == 1);
  // overlap is tested against the original base only, so both clean donors stay
  CHECK(merged[0] == std::vector<Triplet>{trip(0, 1, 3, 3), clean, chained});
}

TEST_CASE("merging never hurts recall") {
  Rng rng(32);
  for (int t = 0; t < 200; ++t) {
    const auto gold = random_predictions(rng, 2, 8);
    const auto base = random_predictions(rng, 2, 8);
    const auto donor = random_predictions(rng, 2, 8);
    const auto merged = ensemble_merge(base, donor);
    CHECK(score(gold, merged, MatchMode::exact).recall >=
          score(gold, base, MatchMode::exact).recall);
  }
}

TEST_CASE("reports render without surprises") {
  const PRF prf = make_prf(3, 4, 6);
  const std::string text = format_prf(prf);
  CHECK(text.find("precision") != std::string::npos);
  CHECK(text.find("0.75") != std::string::npos);
  CHECK(text.find("0.5") != std::string::npos);

  const std::vector<BucketPRF> buckets = {{1, make_prf(1, 1, 1)},
                                          {2, make_prf(0, 1, 2)}};
  const std::string csv = buckets_to_csv(buckets, LengthFacet::opinion_len);
  CHECK(csv.find("opinion_length") != std::string::npos);
  CHECK(csv.find("\n1,") != std::string::npos);
  CHECK(csv.find("\n2,") != std::string::npos);
}
