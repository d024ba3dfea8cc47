#include "aste/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aste/encoder.hpp"
#include "aste/train.hpp"

namespace aste {

Model random_model(const ModelConfig& config, int vocab, Rng& rng) {
  Model m;
  m.config = config;
  for (int v = 0; v < vocab; ++v) m.vocab.add("w" + std::to_string(v));
  m.init(rng);
  for (double& t : m.transitions.value.data) t = rng.normal();
  return m;
}

std::vector<int> random_token_ids(const Model& model, int n, Rng& rng) {
  std::vector<int> ids(n);
  for (int& id : ids) id = 1 + rng.below_int(model.vocab.size() - 1);
  return ids;
}

std::vector<Triplet> random_triplets(int n, int max_offset, Scheme scheme, Rng& rng) {
  const int want = rng.below_int(std::min(3, n) + 1);
  std::vector<Span> primaries;
  for (int attempt = 0; attempt < 50 && static_cast<int>(primaries.size()) < want;
       ++attempt) {
    const int s = rng.below_int(n);
    const int len = 1 + rng.below_int(std::min(3, n - s));
    const Span cand{s, s + len - 1};
    const bool clash =
        std::any_of(primaries.begin(), primaries.end(), [&](const Span& p) {
          return std::max(p.start, cand.start) <= std::min(p.end, cand.end);
        });
    if (!clash) primaries.push_back(cand);
  }

  std::vector<Triplet> out;
  for (const Span& p : primaries) {
    std::vector<std::pair<int, int>> windows;
    const int lo = std::max(-max_offset, -p.start);
    const int hi = std::min(max_offset, n - 1 - p.start);
    for (int j = lo; j <= hi; ++j)
      for (int k = j; k <= hi; ++k) windows.emplace_back(j, k);
    const auto [j, k] = windows[rng.below(windows.size())];
    const Span secondary{p.start + j, p.start + k};
    Triplet t;
    t.sentiment = kAllSentiments[rng.below(3)];
    if (scheme == Scheme::target_first) {
      t.target = p;
      t.opinion = secondary;
    } else {
      t.target = secondary;
      t.opinion = p;
    }
    out.push_back(t);
  }
  return out;
}

TagSequence random_tag_sequence(int n, int max_offset, Scheme scheme, Rng& rng) {
  TagSequence seq;
  seq.scheme = scheme;
  seq.max_offset = max_offset;
  int prev = kStartSym;
  for (int i = 0; i < n; ++i) {
    std::vector<Tag> candidates;
    for (const Tag& t : enumerate_tagset(n, i, max_offset)) {
      const int sub = static_cast<int>(t.sub);
      if (!transition_allowed(prev, sub)) continue;
      // B and I need room for the closing E.
      if ((t.sub == SubTag::B || t.sub == SubTag::I) && i + 1 >= n) continue;
      candidates.push_back(t);
    }
    const Tag pick = candidates[rng.below(candidates.size())];
    seq.tags.push_back(pick);
    prev = static_cast<int>(pick.sub);
  }
  return seq;
}

bool reverse_lex_less(const TagSequence& a, const TagSequence& b) {
  for (int i = a.size() - 1; i >= 0; --i) {
    if (a.tags[i] == b.tags[i]) continue;
    return canonical_less(a.tags[i], b.tags[i]);
  }
  return false;
}

const ScoredSequence& oracle_best(const std::vector<ScoredSequence>& all) {
  const ScoredSequence* best = &all.front();
  for (const ScoredSequence& s : all) {
    if (s.score > best->score ||
        (s.score == best->score && reverse_lex_less(s.seq, best->seq)))
      best = &s;
  }
  return *best;
}

namespace {

std::vector<Triplet> sorted_unique(std::vector<Triplet> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

CheckResult check_codec(const SelfCheckOptions& opt) {
  Rng rng(mix_seed(opt.seed + 11));
  for (int c = 0; c < opt.codec_cases; ++c) {
    const int n = 1 + rng.below_int(12);
    const int m = rng.below_int(5);
    const Scheme scheme = c % 2 == 0 ? Scheme::target_first : Scheme::opinion_first;

    const std::vector<Triplet> triplets = random_triplets(n, m, scheme, rng);
    const TagSequence seq = encode(n, triplets, scheme, m);
    if (decode(seq) != sorted_unique(triplets))
      return {"codec round-trip", false,
              "triplets -> tags -> triplets changed the set (case " +
                  std::to_string(c) + ")"};

    const TagSequence walk = random_tag_sequence(n, m, scheme, rng);
    if (encode(n, decode(walk), scheme, m) != walk)
      return {"codec round-trip", false,
              "tags -> triplets -> tags changed the sequence (case " +
                  std::to_string(c) + ")"};
  }
  return {"codec round-trip", true,
          std::to_string(opt.codec_cases) + " random cases in both directions"};
}

CheckResult check_tagset_sizes() {
  for (const int n : {1, 2, 3, 5, 8, 13, 40})
    for (int m = 0; m <= 4; ++m)
      for (int i = 0; i < n; ++i) {
        const size_t size = enumerate_tagset(n, i, m).size();
        const size_t expect = 3 + 6 * static_cast<size_t>(window_pair_count(n, i, m));
        if (size != expect)
          return {"tagset sizes", false,
                  "n=" + std::to_string(n) + " i=" + std::to_string(i) +
                      " m=" + std::to_string(m)};
      }
  return {"tagset sizes", true, "3 + 6 * windows everywhere"};
}

struct InferenceStats {
  int models = 0;
  double worst_score_gap = 0.0;
  double worst_z_gap = 0.0;
  double worst_norm_gap = 0.0;
  std::string failure;
};

InferenceStats run_inference_battery(uint64_t seed, int models, uint64_t budget) {
  InferenceStats stats;
  Rng rng(mix_seed(seed + 23));

  ModelConfig cfg;
  cfg.word_dim = 5;
  cfg.hidden = 4;
  cfg.offset_dim = 3;
  cfg.dropout = 0.0;

  // All (n, max_offset) pairs whose enumeration fits the budget.
  std::vector<std::pair<int, int>> combos;
  for (int n = 1; n <= 7; ++n) {
    int best_m = -1;
    for (int m = 0; m <= 3; ++m)
      if (count_valid_sequences(n, m, true) <= budget) best_m = std::max(best_m, m);
    for (int m = 0; m <= best_m; ++m)
      if (count_valid_sequences(n, m, true) <= budget) combos.emplace_back(n, m);
  }

  for (int t = 0; t < models; ++t) {
    auto [n, m] = combos[t % combos.size()];
    const bool masked = t % 5 != 4 || n > 3;  // a few unmasked small cases
    cfg.max_offset = m;
    cfg.transition_mask = masked;
    if (!masked && count_valid_sequences(n, m, false) > budget) cfg.transition_mask = true;

    Model model = random_model(cfg, 20, rng);
    const EncoderState state =
        encode_tokens(model, random_token_ids(model, n, rng), false, nullptr);
    const Scheme scheme = t % 2 == 0 ? Scheme::target_first : Scheme::opinion_first;

    const auto all = oracle_enumerate(model, state, scheme, m, budget);
    const ScoredSequence& best = oracle_best(all);
    const ViterbiResult vit = viterbi(model, state, scheme, m);

    std::vector<double> scores(all.size());
    for (size_t i = 0; i < all.size(); ++i) scores[i] = all[i].score;
    const double brute_z = log_sum_exp(scores.data(), static_cast<int>(scores.size()));
    const double z = log_partition(model, state, m);

    stats.worst_score_gap =
        std::max(stats.worst_score_gap, std::abs(vit.score - best.score));
    stats.worst_z_gap = std::max(stats.worst_z_gap, std::abs(z - brute_z));
    stats.worst_norm_gap =
        std::max(stats.worst_norm_gap, std::abs(std::exp(brute_z - z) - 1.0));
    ++stats.models;

    if (std::abs(vit.score - best.score) > 1e-9) {
      stats.failure = "viterbi score off by " +
                      std::to_string(std::abs(vit.score - best.score)) + " (model " +
                      std::to_string(t) + ")";
      return stats;
    }
    if (!(vit.seq == best.seq)) {
      stats.failure = "viterbi sequence differs from oracle best (model " +
                      std::to_string(t) + ")";
      return stats;
    }
    if (std::abs(z - brute_z) > 1e-9) {
      stats.failure = "log partition off by " + std::to_string(std::abs(z - brute_z)) +
                      " (model " + std::to_string(t) + ")";
      return stats;
    }
    if (std::abs(std::exp(brute_z - z) - 1.0) > 1e-9) {
      stats.failure = "probabilities sum to 1 " +
                      std::to_string(std::exp(brute_z - z) - 1.0) + " off (model " +
                      std::to_string(t) + ")";
      return stats;
    }
  }
  return stats;
}

struct GradientStats {
  double worst_rel_err = 0.0;
  std::string failure;
};

GradientStats run_gradient_battery(uint64_t seed, int instances, double tolerance) {
  GradientStats stats;
  Rng rng(mix_seed(seed + 37));

  ModelConfig cfg;
  cfg.word_dim = 4;
  cfg.hidden = 4;
  cfg.offset_dim = 3;
  cfg.max_offset = 2;
  cfg.dropout = 0.0;

  for (int t = 0; t < instances; ++t) {
    const int n = 2 + rng.below_int(5);
    const Scheme scheme = t % 2 == 0 ? Scheme::target_first : Scheme::opinion_first;
    cfg.transition_mask = t % 3 != 2;

    Model model = random_model(cfg, 12, rng);
    CorpusRecord record;
    for (int i = 0; i < n; ++i)
      record.tokens.push_back(model.vocab.tokens[1 + rng.below_int(model.vocab.size() - 1)]);
    record.triplets = random_triplets(n, cfg.max_offset, scheme, rng);

    model.zero_grads();
    nll_loss_backward(model, record, scheme, nullptr);

    const double h = 1e-4;
    std::string failure;
    model.for_each_parameter([&](const std::string& name, Tensor& p) {
      if (!failure.empty()) return;
      for (size_t i = 0; i < p.size(); ++i) {
        const double keep = p.value.data[i];
        p.value.data[i] = keep + h;
        const double up = nll_loss(model, {record}, scheme);
        p.value.data[i] = keep - h;
        const double down = nll_loss(model, {record}, scheme);
        p.value.data[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double rel =
            std::abs(p.grad.data[i] - fd) / std::max(1.0, std::abs(fd));
        stats.worst_rel_err = std::max(stats.worst_rel_err, rel);
        if (rel > tolerance) {
          failure = name + "[" + std::to_string(i) + "] analytic " +
                    std::to_string(p.grad.data[i]) + " vs fd " + std::to_string(fd) +
                    " (instance " + std::to_string(t) + ")";
          return;
        }
      }
    });
    if (!failure.empty()) {
      stats.failure = failure;
      return stats;
    }
  }
  return stats;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& opt) {
  std::vector<CheckResult> results;
  results.push_back(check_codec(opt));
  results.push_back(check_tagset_sizes());

  const InferenceStats inf = run_inference_battery(opt.seed, opt.inference_models, 20000);
  {
    std::ostringstream os;
    if (inf.failure.empty())
      os << inf.models << " models, worst gaps: viterbi " << inf.worst_score_gap
         << ", logZ " << inf.worst_z_gap << ", norm " << inf.worst_norm_gap;
    results.push_back({"exact inference vs enumeration", inf.failure.empty(),
                       inf.failure.empty() ? os.str() : inf.failure});
  }

  const GradientStats grad = run_gradient_battery(opt.seed, opt.gradient_instances, 1e-5);
  {
    std::ostringstream os;
    if (grad.failure.empty())
      os << opt.gradient_instances << " instances, worst relative error "
         << grad.worst_rel_err;
    results.push_back({"analytic gradients vs finite differences", grad.failure.empty(),
                       grad.failure.empty() ? os.str() : grad.failure});
  }
  return results;
}

}  // namespace aste
