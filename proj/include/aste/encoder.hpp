#pragma once

// Sentence encoder and factor scores. A bidirectional LSTM produces per-token
// hidden states; spans get subtraction-based segment representations; four
// small heads score sub-tags, sentiment, opinion spans and offset windows.
// The forward pass records everything needed for an exact reverse-mode
// gradient, which backward_from_scores replays by hand.

#include <vector>

#include "aste/model.hpp"
#include "aste/tagging.hpp"

namespace aste {

// All caches for one sentence. h_fwd/h_bwd are the states every score reads
// (dropout already applied in training mode); the raw_* copies and gate
// caches exist only for the backward pass.
struct EncoderState {
  int n = 0;
  int hidden = 0;
  Matrix h_fwd, h_bwd;  // n x H each

  // --- tape (absent when the state was assembled by hand) ---
  bool has_tape = false;
  bool training = false;
  std::vector<int> token_ids;          // empty when built from a raw embedding matrix
  Matrix emb;                          // n x D, dropout applied
  Matrix emb_mask;                     // n x D dropout multipliers
  Matrix raw_h_fwd, raw_h_bwd;         // pre-dropout states (recurrent path)
  Matrix mask_fwd, mask_bwd;           // n x H output dropout multipliers
  struct DirectionCache {
    Matrix gate_i, gate_f, gate_g, gate_o;  // n x H, post-activation
    Matrix cell, tanh_cell;                 // n x H
  } cache_fwd, cache_bwd;

  // Builds a scores-only state from given hidden matrices (tests, ablation
  // probes). No tape, so backward on it reports StaleTape.
  static EncoderState from_hidden(Matrix fwd, Matrix bwd);
};

// Embedding lookup with training-mode dropout. rng may be null when
// training == false or dropout == 0.
Matrix embed(const Model& model, const std::vector<int>& token_ids, bool training,
             Rng* rng);

// BiLSTM over a given embedding matrix. Keeps the full tape but no token ids,
// so embedding gradients are unavailable on the result.
EncoderState run_encoder(const Model& model, const Matrix& embeddings, bool training,
                         Rng* rng);

// embed + run_encoder with the token ids retained: the path training uses.
EncoderState encode_tokens(const Model& model, const std::vector<int>& token_ids,
                           bool training, Rng* rng);

// Segment representation for 1-based token positions a..b (inclusive):
// [h_fwd(b) - h_fwd(a-1); h_bwd(a) - h_bwd(b+1)] with zero boundary states.
// Writes 2H values into out.
void segment_repr(const EncoderState& state, int a, int b, double* out);

// Factor score of one tag at 0-based position i, assembled directly from the
// heads (no caching). B/S tags add sentiment, opinion-span and offset terms
// for their window; ablation flags in the model config drop the latter two.
double factor_scores(const Model& model, const EncoderState& state, int i,
                     const Tag& tag);

// Per-sentence cache of every head output needed to score any lattice cell in
// O(1): sub-tag scores per position, sentiment/opinion scores per span, the
// backward-state sentiment term per position, offset scores per window row.
// Biases are folded in; ablation flags zero out their blocks.
struct ScoreTable {
  int n = 0;
  int max_offset = 0;
  Matrix ft;        // n x 5
  Matrix fsh;       // n x 3   w_s (backward-state block) . h_bwd(i) + b_s
  Matrix fs_span;   // (n*(2M+1)) x 3   w_s (segment block) . g, row a*(2M+1)+len-1
  std::vector<double> fo_span;  // parallel to fs_span rows, b_o folded in
  std::vector<double> fr;       // 2M+1, score of offset row m, b_r folded in

  int span_row(int a, int b) const { return a * (2 * max_offset + 1) + (b - a); }
  double phi(int i, const Tag& tag) const;
};

ScoreTable compute_scores(const Model& model, const EncoderState& state,
                          int max_offset);

// Accumulates parameter gradients for d(loss)/d(phi) given per-cell weights
// aligned with tagsets. Consumes the tape; a second call (or a call on a
// tapeless state) throws StaleTape. Embedding gradients are skipped when the
// state has no token ids.
void backward_from_scores(Model& model, EncoderState& state,
                          const std::vector<std::vector<Tag>>& tagsets,
                          const std::vector<std::vector<double>>& dphi);

}  // namespace aste
