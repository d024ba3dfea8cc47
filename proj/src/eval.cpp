#include "aste/eval.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <sstream>

namespace aste {

namespace {

std::vector<Triplet> dedup_sorted(std::vector<Triplet> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void check_parallel(size_t gold, size_t pred) {
  if (gold != pred)
    throw Error(Errc::sentence_count_mismatch,
                "gold has " + std::to_string(gold) + " sentences, predictions " +
                    std::to_string(pred));
}

const char* facet_name(LengthFacet facet) {
  switch (facet) {
    case LengthFacet::target_len: return "target_length";
    case LengthFacet::opinion_len: return "opinion_length";
    case LengthFacet::offset_len: return "offset_distance";
  }
  return "?";
}

}  // namespace

PRF make_prf(size_t matched, size_t predicted, size_t gold) {
  PRF out;
  out.matched = matched;
  out.predicted = predicted;
  out.gold = gold;
  out.precision = predicted == 0 ? 0.0 : static_cast<double>(matched) / predicted;
  out.recall = gold == 0 ? 0.0 : static_cast<double>(matched) / gold;
  out.f1 = (out.precision + out.recall) == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

bool spans_overlap(const Span& a, const Span& b) {
  return std::max(a.start, b.start) <= std::min(a.end, b.end);
}

bool triplets_overlap(const Triplet& a, const Triplet& b) {
  return spans_overlap(a.target, b.target) && spans_overlap(a.opinion, b.opinion);
}

bool triplet_matches(const Triplet& gold, const Triplet& pred, MatchMode mode) {
  switch (mode) {
    case MatchMode::exact:
      return gold == pred;
    case MatchMode::partial_target:
      return spans_overlap(gold.target, pred.target) && gold.opinion == pred.opinion &&
             gold.sentiment == pred.sentiment;
    case MatchMode::partial_opinion:
      return gold.target == pred.target && spans_overlap(gold.opinion, pred.opinion) &&
             gold.sentiment == pred.sentiment;
  }
  return false;
}

PRF score(const std::vector<std::vector<Triplet>>& gold,
          const std::vector<std::vector<Triplet>>& pred, MatchMode mode) {
  check_parallel(gold.size(), pred.size());
  size_t matched = 0, predicted = 0, gold_total = 0;
  for (size_t s = 0; s < gold.size(); ++s) {
    const std::vector<Triplet> p = dedup_sorted(pred[s]);
    std::vector<Triplet> g = gold[s];
    std::sort(g.begin(), g.end());
    std::vector<bool> used(g.size(), false);
    for (const Triplet& cand : p)
      for (size_t gi = 0; gi < g.size(); ++gi)
        if (!used[gi] && triplet_matches(g[gi], cand, mode)) {
          used[gi] = true;
          ++matched;
          break;
        }
    predicted += p.size();
    gold_total += g.size();
  }
  return make_prf(matched, predicted, gold_total);
}

int facet_length(const Triplet& t, LengthFacet facet) {
  switch (facet) {
    case LengthFacet::target_len: return t.target.length();
    case LengthFacet::opinion_len: return t.opinion.length();
    case LengthFacet::offset_len: return std::abs(t.opinion.start - t.target.start);
  }
  return 0;
}

std::vector<BucketPRF> length_breakdown(const std::vector<std::vector<Triplet>>& gold,
                                        const std::vector<std::vector<Triplet>>& pred,
                                        LengthFacet facet) {
  check_parallel(gold.size(), pred.size());
  std::map<int, std::array<size_t, 3>> counts;  // length -> {matched, predicted, gold}
  for (size_t s = 0; s < gold.size(); ++s) {
    const std::vector<Triplet> p = dedup_sorted(pred[s]);
    std::vector<Triplet> g = gold[s];
    std::sort(g.begin(), g.end());
    std::vector<bool> used(g.size(), false);
    for (const Triplet& cand : p) {
      counts[facet_length(cand, facet)][1] += 1;
      for (size_t gi = 0; gi < g.size(); ++gi)
        if (!used[gi] && triplet_matches(g[gi], cand, MatchMode::exact)) {
          used[gi] = true;
          counts[facet_length(g[gi], facet)][0] += 1;
          break;
        }
    }
    for (const Triplet& t : g) counts[facet_length(t, facet)][2] += 1;
  }
  std::vector<BucketPRF> out;
  for (const auto& [length, c] : counts) {
    if (c[1] == 0 && c[2] == 0) continue;
    out.push_back(BucketPRF{length, make_prf(c[0], c[1], c[2])});
  }
  return out;
}

std::vector<std::vector<Triplet>> ensemble_merge(
    const std::vector<std::vector<Triplet>>& base,
    const std::vector<std::vector<Triplet>>& donor) {
  check_parallel(base.size(), donor.size());
  std::vector<std::vector<Triplet>> out;
  out.reserve(base.size());
  for (size_t s = 0; s < base.size(); ++s) {
    const std::vector<Triplet> kept = dedup_sorted(base[s]);
    std::vector<Triplet> merged = kept;
    for (const Triplet& d : dedup_sorted(donor[s])) {
      const bool clashes = std::any_of(kept.begin(), kept.end(), [&](const Triplet& b) {
        return triplets_overlap(d, b);
      });
      if (!clashes) merged.push_back(d);
    }
    std::sort(merged.begin(), merged.end());
    out.push_back(std::move(merged));
  }
  return out;
}

std::string format_prf(const PRF& prf) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "precision " << prf.precision << '\n'
     << "recall    " << prf.recall << '\n'
     << "f1        " << prf.f1 << '\n'
     << "matched   " << prf.matched << '\n'
     << "predicted " << prf.predicted << '\n'
     << "gold      " << prf.gold << '\n';
  return os.str();
}

std::string format_buckets(const std::vector<BucketPRF>& buckets, LengthFacet facet) {
  std::ostringstream os;
  os << std::left << std::setw(16) << facet_name(facet) << std::right << std::setw(10)
     << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1"
     << std::setw(9) << "matched" << std::setw(11) << "predicted" << std::setw(7)
     << "gold" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const BucketPRF& b : buckets)
    os << std::left << std::setw(16) << b.length << std::right << std::setw(10)
       << b.prf.precision << std::setw(10) << b.prf.recall << std::setw(10) << b.prf.f1
       << std::setw(9) << b.prf.matched << std::setw(11) << b.prf.predicted
       << std::setw(7) << b.prf.gold << '\n';
  return os.str();
}

std::string buckets_to_csv(const std::vector<BucketPRF>& buckets, LengthFacet facet) {
  std::ostringstream os;
  os << "facet,length,precision,recall,f1,matched,predicted,gold\n";
  os << std::setprecision(10);
  for (const BucketPRF& b : buckets)
    os << facet_name(facet) << ',' << b.length << ',' << b.prf.precision << ','
       << b.prf.recall << ',' << b.prf.f1 << ',' << b.prf.matched << ','
       << b.prf.predicted << ',' << b.prf.gold << '\n';
  return os.str();
}

}  // namespace aste
