#include "aste/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aste {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int sub_of(const Tag& t) { return static_cast<int>(t.sub); }

// LSE of alpha values grouped by sub-tag family, one position at a time.
void grouped_lse(const std::vector<Tag>& tags, const std::vector<double>& vals,
                 double out[kNumSubTags]) {
  double best[kNumSubTags];
  std::fill(best, best + kNumSubTags, kNegInf);
  for (size_t i = 0; i < tags.size(); ++i) {
    const int s = sub_of(tags[i]);
    if (vals[i] > best[s]) best[s] = vals[i];
  }
  double acc[kNumSubTags] = {};
  for (size_t i = 0; i < tags.size(); ++i) {
    const int s = sub_of(tags[i]);
    if (std::isfinite(vals[i])) acc[s] += std::exp(vals[i] - best[s]);
  }
  for (int s = 0; s < kNumSubTags; ++s)
    out[s] = acc[s] > 0.0 ? best[s] + std::log(acc[s]) : kNegInf;
}

void grouped_max(const std::vector<Tag>& tags, const std::vector<double>& vals,
                 double out[kNumSubTags]) {
  std::fill(out, out + kNumSubTags, kNegInf);
  for (size_t i = 0; i < tags.size(); ++i) {
    const int s = sub_of(tags[i]);
    if (vals[i] > out[s]) out[s] = vals[i];
  }
}

// Fills lat.score with forward log-sums (emissions included) and returns logZ.
double forward_pass(const Model& model, const ScoreTable& table, Lattice& lat) {
  const int n = lat.n;
  for (size_t idx = 0; idx < lat.tags[0].size(); ++idx) {
    const Tag& v = lat.tags[0][idx];
    lat.score[0][idx] =
        model.transition_score(kStartSym, sub_of(v)) + table.phi(0, v);
  }
  double grp[kNumSubTags], terms[kNumSubTags];
  for (int i = 1; i < n; ++i) {
    grouped_lse(lat.tags[i - 1], lat.score[i - 1], grp);
    for (size_t idx = 0; idx < lat.tags[i].size(); ++idx) {
      const Tag& v = lat.tags[i][idx];
      const int sv = sub_of(v);
      for (int s = 0; s < kNumSubTags; ++s)
        terms[s] = grp[s] + model.transition_score(s, sv);
      lat.score[i][idx] = log_sum_exp(terms, kNumSubTags) + table.phi(i, v);
    }
  }
  std::vector<double> finals(lat.tags[n - 1].size());
  for (size_t idx = 0; idx < finals.size(); ++idx)
    finals[idx] = lat.score[n - 1][idx] +
                  model.transition_score(sub_of(lat.tags[n - 1][idx]), kStopSym);
  return log_sum_exp(finals.data(), static_cast<int>(finals.size()));
}

void check_offset_bound(const Model& model, int max_offset) {
  if (max_offset < 0 || max_offset > model.config.max_offset)
    throw Error(Errc::index_out_of_range,
                "offset bound " + std::to_string(max_offset) +
                    " not covered by model (max " +
                    std::to_string(model.config.max_offset) + ")");
}

}  // namespace

Lattice make_lattice(int n, int max_offset) {
  Lattice lat;
  lat.n = n;
  lat.tags.resize(n);
  lat.score.resize(n);
  for (int i = 0; i < n; ++i) {
    lat.tags[i] = enumerate_tagset(n, i, max_offset);
    lat.score[i].assign(lat.tags[i].size(), kNegInf);
  }
  return lat;
}

double sequence_score(const Model& model, const EncoderState& state,
                      const TagSequence& seq) {
  if (seq.size() != state.n)
    throw Error(Errc::invalid_sequence, "sequence length does not match sentence");
  if (seq.max_offset > model.config.max_offset)
    throw Error(Errc::invalid_sequence, "sequence offset bound exceeds model");
  try {
    check_well_formed(seq);
  } catch (const Error& e) {
    throw Error(Errc::invalid_sequence, e.what());
  }

  double score = model.transition_score(kStartSym, sub_of(seq.tags[0]));
  for (int i = 0; i < seq.size(); ++i) {
    score += factor_scores(model, state, i, seq.tags[i]);
    if (i + 1 < seq.size())
      score += model.transition_score(sub_of(seq.tags[i]), sub_of(seq.tags[i + 1]));
  }
  score += model.transition_score(sub_of(seq.tags.back()), kStopSym);
  return score;
}

double log_partition(const Model& model, const EncoderState& state, int max_offset) {
  check_offset_bound(model, max_offset);
  const ScoreTable table = compute_scores(model, state, max_offset);
  Lattice lat = make_lattice(state.n, max_offset);
  return forward_pass(model, table, lat);
}

ViterbiResult viterbi(const Model& model, const EncoderState& state, Scheme scheme,
                      int max_offset) {
  check_offset_bound(model, max_offset);
  const int n = state.n;
  const ScoreTable table = compute_scores(model, state, max_offset);
  Lattice lat = make_lattice(n, max_offset);

  for (size_t idx = 0; idx < lat.tags[0].size(); ++idx) {
    const Tag& v = lat.tags[0][idx];
    lat.score[0][idx] =
        model.transition_score(kStartSym, sub_of(v)) + table.phi(0, v);
  }
  double grp[kNumSubTags];
  for (int i = 1; i < n; ++i) {
    grouped_max(lat.tags[i - 1], lat.score[i - 1], grp);
    for (size_t idx = 0; idx < lat.tags[i].size(); ++idx) {
      const Tag& v = lat.tags[i][idx];
      const int sv = sub_of(v);
      double best = kNegInf;
      for (int s = 0; s < kNumSubTags; ++s) {
        const double cand = grp[s] + model.transition_score(s, sv);
        if (cand > best) best = cand;
      }
      lat.score[i][idx] = best + table.phi(i, v);
    }
  }

  // Backtrack by recomputing each argmax against the chosen successor; the
  // strict comparison keeps the canonically first tag on ties.
  TagSequence out;
  out.scheme = scheme;
  out.max_offset = max_offset;
  out.tags.resize(n);

  double best = kNegInf;
  int best_idx = -1;
  for (size_t idx = 0; idx < lat.tags[n - 1].size(); ++idx) {
    const double cand = lat.score[n - 1][idx] +
                        model.transition_score(sub_of(lat.tags[n - 1][idx]), kStopSym);
    if (cand > best) {
      best = cand;
      best_idx = static_cast<int>(idx);
    }
  }
  if (best_idx < 0 || !std::isfinite(best))
    throw Error(Errc::invalid_sequence, "no structurally valid path has finite score");
  out.tags[n - 1] = lat.tags[n - 1][best_idx];

  for (int i = n - 2; i >= 0; --i) {
    const int next_sub = sub_of(out.tags[i + 1]);
    double step_best = kNegInf;
    int step_idx = -1;
    for (size_t idx = 0; idx < lat.tags[i].size(); ++idx) {
      const double cand = lat.score[i][idx] +
                          model.transition_score(sub_of(lat.tags[i][idx]), next_sub);
      if (cand > step_best) {
        step_best = cand;
        step_idx = static_cast<int>(idx);
      }
    }
    out.tags[i] = lat.tags[i][step_idx];
  }
  return ViterbiResult{std::move(out), best};
}

double log_prob(const Model& model, const EncoderState& state, const TagSequence& seq) {
  return sequence_score(model, state, seq) -
         log_partition(model, state, seq.max_offset);
}

uint64_t count_valid_sequences(int n, int max_offset, bool masked) {
  constexpr uint64_t kMax = std::numeric_limits<int64_t>::max();
  using u128 = unsigned __int128;
  const u128 cap = kMax;

  // Tags per (position, sub-tag family): 3 sentiments x windows for B and S,
  // one tag otherwise.
  auto mult = [&](int i, int sub) -> u128 {
    if (sub == static_cast<int>(SubTag::B) || sub == static_cast<int>(SubTag::S))
      return static_cast<u128>(3) * window_pair_count(n, i, max_offset);
    return 1;
  };

  if (!masked) {
    u128 total = 1;
    for (int i = 0; i < n; ++i) {
      u128 size = 3;
      size += 2 * mult(i, static_cast<int>(SubTag::B));
      total *= size;
      if (total > cap) return kMax;
    }
    return static_cast<uint64_t>(total);
  }

  u128 c[kNumSubTags] = {};
  c[static_cast<int>(SubTag::B)] = mult(0, static_cast<int>(SubTag::B));
  c[static_cast<int>(SubTag::S)] = mult(0, static_cast<int>(SubTag::S));
  c[static_cast<int>(SubTag::O)] = 1;
  for (int i = 1; i < n; ++i) {
    u128 next[kNumSubTags] = {};
    for (int t = 0; t < kNumSubTags; ++t) {
      u128 paths = 0;
      for (int s = 0; s < kNumSubTags; ++s)
        if (transition_allowed(s, t)) paths += c[s];
      next[t] = paths * mult(i, t);
      if (next[t] > cap) next[t] = cap + 1;
    }
    std::copy(next, next + kNumSubTags, c);
  }
  u128 total = 0;
  for (int s = 0; s < kNumSubTags; ++s)
    if (transition_allowed(s, kStopSym)) total += c[s];
  return total > cap ? kMax : static_cast<uint64_t>(total);
}

std::vector<ScoredSequence> oracle_enumerate(const Model& model,
                                             const EncoderState& state, Scheme scheme,
                                             int max_offset, uint64_t cap) {
  check_offset_bound(model, max_offset);
  const int n = state.n;
  const bool masked = model.config.transition_mask;
  const uint64_t count = count_valid_sequences(n, max_offset, masked);
  if (count > cap)
    throw Error(Errc::too_many_sequences,
                std::to_string(count) + " sequences exceed cap " + std::to_string(cap));

  // Emissions via the direct per-tag path so the enumeration shares nothing
  // with the cached tables the dynamic programs use.
  Lattice lat = make_lattice(n, max_offset);
  std::vector<std::vector<double>> phi(n);
  for (int i = 0; i < n; ++i) {
    phi[i].resize(lat.tags[i].size());
    for (size_t idx = 0; idx < lat.tags[i].size(); ++idx)
      phi[i][idx] = factor_scores(model, state, i, lat.tags[i][idx]);
  }

  std::vector<ScoredSequence> out;
  out.reserve(count);
  TagSequence current;
  current.scheme = scheme;
  current.max_offset = max_offset;
  current.tags.resize(n);

  auto dfs = [&](auto&& self, int i, int prev_sym, double score) -> void {
    for (size_t idx = 0; idx < lat.tags[i].size(); ++idx) {
      const Tag& v = lat.tags[i][idx];
      const double t = model.transition_score(prev_sym, sub_of(v));
      if (t == kNegInf) continue;
      const double here = score + t + phi[i][idx];
      current.tags[i] = v;
      if (i + 1 == n) {
        const double stop = model.transition_score(sub_of(v), kStopSym);
        if (stop == kNegInf) continue;
        out.push_back(ScoredSequence{current, here + stop});
      } else {
        self(self, i + 1, sub_of(v), here);
      }
    }
  };
  dfs(dfs, 0, kStartSym, 0.0);
  return out;
}

PartitionGradients partition_gradients(const Model& model, const ScoreTable& table,
                                       const Lattice& lattice) {
  const int n = lattice.n;
  PartitionGradients out;
  out.cell.resize(n);

  // Forward with emissions folded in.
  std::vector<std::vector<double>> alpha(n), beta(n);
  Lattice work = lattice;  // reuse tagsets; scores recomputed here
  out.log_z = forward_pass(model, table, work);
  for (int i = 0; i < n; ++i) alpha[i] = work.score[i];

  // Backward: beta[i][v] excludes phi(i, v).
  double grp[kNumSubTags], terms[kNumSubTags];
  beta[n - 1].resize(lattice.tags[n - 1].size());
  for (size_t idx = 0; idx < beta[n - 1].size(); ++idx)
    beta[n - 1][idx] =
        model.transition_score(sub_of(lattice.tags[n - 1][idx]), kStopSym);
  for (int i = n - 2; i >= 0; --i) {
    // Group successors by sub-tag over phi + beta.
    std::vector<double> merged(lattice.tags[i + 1].size());
    for (size_t idx = 0; idx < merged.size(); ++idx)
      merged[idx] = table.phi(i + 1, lattice.tags[i + 1][idx]) + beta[i + 1][idx];
    grouped_lse(lattice.tags[i + 1], merged, grp);
    beta[i].resize(lattice.tags[i].size());
    for (size_t idx = 0; idx < beta[i].size(); ++idx) {
      const int sv = sub_of(lattice.tags[i][idx]);
      for (int s = 0; s < kNumSubTags; ++s)
        terms[s] = model.transition_score(sv, s) + grp[s];
      beta[i][idx] = log_sum_exp(terms, kNumSubTags);
    }
  }

  for (int i = 0; i < n; ++i) {
    out.cell[i].resize(lattice.tags[i].size());
    for (size_t idx = 0; idx < out.cell[i].size(); ++idx) {
      const double v = alpha[i][idx] + beta[i][idx] - out.log_z;
      out.cell[i][idx] = std::isfinite(v) ? std::exp(v) : 0.0;
    }
  }

  // Expected transition counts. Boundary rows come straight from the cells.
  for (size_t idx = 0; idx < out.cell[0].size(); ++idx)
    out.transition[kStartSym][sub_of(lattice.tags[0][idx])] += out.cell[0][idx];
  for (size_t idx = 0; idx < out.cell[n - 1].size(); ++idx)
    out.transition[sub_of(lattice.tags[n - 1][idx])][kStopSym] += out.cell[n - 1][idx];

  double grp_a[kNumSubTags];
  for (int i = 0; i + 1 < n; ++i) {
    grouped_lse(lattice.tags[i], alpha[i], grp_a);
    std::vector<double> merged(lattice.tags[i + 1].size());
    for (size_t idx = 0; idx < merged.size(); ++idx)
      merged[idx] = table.phi(i + 1, lattice.tags[i + 1][idx]) + beta[i + 1][idx];
    grouped_lse(lattice.tags[i + 1], merged, grp);
    for (int s = 0; s < kNumSubTags; ++s)
      for (int t = 0; t < kNumSubTags; ++t) {
        const double v =
            grp_a[s] + model.transition_score(s, t) + grp[t] - out.log_z;
        if (std::isfinite(v)) out.transition[s][t] += std::exp(v);
      }
  }
  return out;
}

}  // namespace aste
