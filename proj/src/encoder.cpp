#include "aste/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace aste {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Inverted dropout multipliers: 0 with probability p, else 1/(1-p).
Matrix dropout_mask(int rows, int cols, double p, Rng* rng) {
  Matrix mask(rows, cols);
  if (p <= 0.0 || rng == nullptr) {
    std::fill(mask.data.begin(), mask.data.end(), 1.0);
    return mask;
  }
  const double scale = 1.0 / (1.0 - p);
  for (double& v : mask.data) v = rng->uniform() < p ? 0.0 : scale;
  return mask;
}

Matrix lookup_rows(const Model& model, const std::vector<int>& ids) {
  const int n = static_cast<int>(ids.size());
  const int d = model.config.word_dim;
  Matrix emb(n, d);
  for (int i = 0; i < n; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= model.vocab.size())
      throw Error(Errc::index_out_of_range, "token id " + std::to_string(id));
    std::memcpy(emb.row(i), model.embedding.value.row(id), sizeof(double) * d);
  }
  return emb;
}

// One LSTM direction over the full sentence. reverse_time flips the temporal
// order (the chain then runs n-1 .. 0).
void lstm_forward(const LstmParams& p, const Matrix& emb, bool reverse_time,
                  Matrix& raw_h, EncoderState::DirectionCache& cache) {
  const int n = emb.rows;
  const int h = p.w_hh.cols();
  raw_h = Matrix(n, h);
  cache.gate_i = Matrix(n, h);
  cache.gate_f = Matrix(n, h);
  cache.gate_g = Matrix(n, h);
  cache.gate_o = Matrix(n, h);
  cache.cell = Matrix(n, h);
  cache.tanh_cell = Matrix(n, h);

  std::vector<double> z(4 * h);
  const std::vector<double> zeros(h, 0.0);
  for (int step = 0; step < n; ++step) {
    const int t = reverse_time ? n - 1 - step : step;
    const int prev = reverse_time ? t + 1 : t - 1;
    const bool first = step == 0;
    const double* h_prev = first ? zeros.data() : raw_h.row(prev);
    const double* c_prev = first ? zeros.data() : cache.cell.row(prev);

    matvec(p.w_ih.value, emb.row(t), z.data());
    matvec_add(p.w_hh.value, h_prev, z.data());
    for (int u = 0; u < 4 * h; ++u) z[u] += p.b.value.data[u];

    double* gi = cache.gate_i.row(t);
    double* gf = cache.gate_f.row(t);
    double* gg = cache.gate_g.row(t);
    double* go = cache.gate_o.row(t);
    double* c = cache.cell.row(t);
    double* tc = cache.tanh_cell.row(t);
    double* out = raw_h.row(t);
    for (int u = 0; u < h; ++u) {
      gi[u] = sigmoid(z[u]);
      gf[u] = sigmoid(z[h + u]);
      gg[u] = std::tanh(z[2 * h + u]);
      go[u] = sigmoid(z[3 * h + u]);
      c[u] = gf[u] * c_prev[u] + gi[u] * gg[u];
      tc[u] = std::tanh(c[u]);
      out[u] = go[u] * tc[u];
    }
  }
}

// Reverse-mode pass for one direction. dh holds d(loss)/d(raw_h); demb
// accumulates input gradients.
void lstm_backward(LstmParams& p, const Matrix& emb, const Matrix& raw_h,
                   const EncoderState::DirectionCache& cache, bool reverse_time,
                   const Matrix& dh, Matrix& demb) {
  const int n = emb.rows;
  const int h = p.w_hh.cols();
  std::vector<double> dh_carry(h, 0.0), dc_carry(h, 0.0), dz(4 * h);
  const std::vector<double> zeros(h, 0.0);

  for (int step = n - 1; step >= 0; --step) {
    const int t = reverse_time ? n - 1 - step : step;
    const int prev = reverse_time ? t + 1 : t - 1;
    const bool first = step == 0;
    const double* c_prev = first ? zeros.data() : cache.cell.row(prev);

    const double* gi = cache.gate_i.row(t);
    const double* gf = cache.gate_f.row(t);
    const double* gg = cache.gate_g.row(t);
    const double* go = cache.gate_o.row(t);
    const double* tc = cache.tanh_cell.row(t);
    const double* dht_in = dh.row(t);

    for (int u = 0; u < h; ++u) {
      const double dht = dht_in[u] + dh_carry[u];
      const double dout = dht * tc[u];
      const double dc = dc_carry[u] + dht * go[u] * (1.0 - tc[u] * tc[u]);
      const double di = dc * gg[u];
      const double dg = dc * gi[u];
      const double df = dc * c_prev[u];
      dz[u] = di * gi[u] * (1.0 - gi[u]);
      dz[h + u] = df * gf[u] * (1.0 - gf[u]);
      dz[2 * h + u] = dg * (1.0 - gg[u] * gg[u]);
      dz[3 * h + u] = dout * go[u] * (1.0 - go[u]);
      dc_carry[u] = dc * gf[u];
    }

    outer_add(p.w_ih.grad, dz.data(), emb.row(t));
    if (!first) outer_add(p.w_hh.grad, dz.data(), raw_h.row(prev));
    for (int u = 0; u < 4 * h; ++u) p.b.grad.data[u] += dz[u];
    matvec_transpose_add(p.w_ih.value, dz.data(), demb.row(t));
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    matvec_transpose_add(p.w_hh.value, dz.data(), dh_carry.data());
  }
}

void apply_mask(Matrix& m, const Matrix& mask) {
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] *= mask.data[i];
}

}  // namespace

EncoderState EncoderState::from_hidden(Matrix fwd, Matrix bwd) {
  if (fwd.rows != bwd.rows || fwd.cols != bwd.cols)
    throw Error(Errc::shape_mismatch, "hidden matrices disagree");
  EncoderState s;
  s.n = fwd.rows;
  s.hidden = fwd.cols;
  s.h_fwd = std::move(fwd);
  s.h_bwd = std::move(bwd);
  return s;
}

Matrix embed(const Model& model, const std::vector<int>& token_ids, bool training,
             Rng* rng) {
  Matrix emb = lookup_rows(model, token_ids);
  if (training && model.config.dropout > 0.0) {
    const Matrix mask = dropout_mask(emb.rows, emb.cols, model.config.dropout, rng);
    apply_mask(emb, mask);
  }
  return emb;
}

namespace {

EncoderState encoder_from_emb(const Model& model, Matrix emb, Matrix emb_mask,
                              std::vector<int> ids, bool training, Rng* rng) {
  EncoderState s;
  s.n = emb.rows;
  s.hidden = model.config.hidden;
  s.training = training;
  s.token_ids = std::move(ids);
  s.emb = std::move(emb);
  s.emb_mask = std::move(emb_mask);
  if (s.n == 0) throw Error(Errc::shape_mismatch, "empty sentence");
  if (s.emb.cols != model.config.word_dim)
    throw Error(Errc::shape_mismatch, "embedding width mismatch");

  lstm_forward(model.lstm_fwd, s.emb, /*reverse_time=*/false, s.raw_h_fwd, s.cache_fwd);
  lstm_forward(model.lstm_bwd, s.emb, /*reverse_time=*/true, s.raw_h_bwd, s.cache_bwd);

  const double p = training ? model.config.dropout : 0.0;
  s.h_fwd = s.raw_h_fwd;
  s.h_bwd = s.raw_h_bwd;
  if (p > 0.0) {
    s.mask_fwd = dropout_mask(s.n, s.hidden, p, rng);
    s.mask_bwd = dropout_mask(s.n, s.hidden, p, rng);
    apply_mask(s.h_fwd, s.mask_fwd);
    apply_mask(s.h_bwd, s.mask_bwd);
  }
  s.has_tape = true;
  return s;
}

}  // namespace

EncoderState run_encoder(const Model& model, const Matrix& embeddings, bool training,
                         Rng* rng) {
  return encoder_from_emb(model, embeddings, Matrix(), {}, training, rng);
}

EncoderState encode_tokens(const Model& model, const std::vector<int>& token_ids,
                           bool training, Rng* rng) {
  Matrix emb = lookup_rows(model, token_ids);
  Matrix mask;
  if (training && model.config.dropout > 0.0) {
    mask = dropout_mask(emb.rows, emb.cols, model.config.dropout, rng);
    apply_mask(emb, mask);
  }
  return encoder_from_emb(model, std::move(emb), std::move(mask), token_ids, training,
                          rng);
}

void segment_repr(const EncoderState& state, int a, int b, double* out) {
  const int n = state.n;
  const int h = state.hidden;
  if (a < 1 || b < a || b > n)
    throw Error(Errc::index_out_of_range,
                "segment [" + std::to_string(a) + "," + std::to_string(b) + "] in " +
                    std::to_string(n) + " tokens");
  const double* fb = state.h_fwd.row(b - 1);
  const double* ba = state.h_bwd.row(a - 1);
  if (a >= 2) {
    const double* fa = state.h_fwd.row(a - 2);
    for (int u = 0; u < h; ++u) out[u] = fb[u] - fa[u];
  } else {
    for (int u = 0; u < h; ++u) out[u] = fb[u];
  }
  if (b + 1 <= n) {
    const double* bb = state.h_bwd.row(b);
    for (int u = 0; u < h; ++u) out[h + u] = ba[u] - bb[u];
  } else {
    for (int u = 0; u < h; ++u) out[h + u] = ba[u];
  }
}

double factor_scores(const Model& model, const EncoderState& state, int i,
                     const Tag& tag) {
  const int n = state.n;
  const int h = state.hidden;
  if (i < 0 || i >= n) throw Error(Errc::index_out_of_range, "position outside sentence");

  std::vector<double> hcat(2 * h);
  std::memcpy(hcat.data(), state.h_fwd.row(i), sizeof(double) * h);
  std::memcpy(hcat.data() + h, state.h_bwd.row(i), sizeof(double) * h);
  const int sub = static_cast<int>(tag.sub);
  double score = dot(model.w_t.value.row(sub), hcat.data(), 2 * h) +
                 model.b_t.value.data[sub];
  if (!tag.has_window()) return score;

  const int m = model.config.max_offset;
  if (std::abs(tag.j) > m || std::abs(tag.k) > m)
    throw Error(Errc::tag_window_out_of_bounds, "offset window exceeds model bound");
  const int a = i + tag.j, b = i + tag.k;
  if (a < 0 || b >= n)
    throw Error(Errc::tag_window_out_of_bounds, "offset window outside sentence");

  std::vector<double> g(2 * h);
  segment_repr(state, a + 1, b + 1, g.data());

  const int pol = static_cast<int>(tag.pol);
  const double* ws = model.w_s.value.row(pol);
  score += dot(ws, g.data(), 2 * h) + dot(ws + 2 * h, state.h_bwd.row(i), h) +
           model.b_s.value.data[pol];
  if (model.config.use_opinion_features)
    score += dot(model.w_o.value.row(0), g.data(), 2 * h) + model.b_o.value.data[0];
  if (model.config.use_offset_features) {
    const int row = std::min(tag.j, tag.k) + m;
    score += dot(model.w_r.value.row(0), model.offset_table.value.row(row),
                 model.config.offset_dim) +
             model.b_r.value.data[0];
  }
  return score;
}

double ScoreTable::phi(int i, const Tag& tag) const {
  double score = ft.at(i, static_cast<int>(tag.sub));
  if (!tag.has_window()) return score;
  const int row = span_row(i + tag.j, i + tag.k);
  const int pol = static_cast<int>(tag.pol);
  score += fs_span.at(row, pol) + fsh.at(i, pol) + fo_span[row] +
           fr[std::min(tag.j, tag.k) + max_offset];
  return score;
}

ScoreTable compute_scores(const Model& model, const EncoderState& state,
                          int max_offset) {
  const int n = state.n;
  const int h = state.hidden;
  const int m = max_offset;
  if (m > model.config.max_offset)
    throw Error(Errc::index_out_of_range, "offset bound exceeds model table");
  const int width = 2 * m + 1;

  ScoreTable t;
  t.n = n;
  t.max_offset = m;
  t.ft = Matrix(n, kNumSubTags);
  t.fsh = Matrix(n, 3);
  t.fs_span = Matrix(n * width, 3);
  t.fo_span.assign(static_cast<size_t>(n) * width, 0.0);
  t.fr.assign(width, 0.0);

  std::vector<double> hcat(2 * h), g(2 * h);
  for (int i = 0; i < n; ++i) {
    std::memcpy(hcat.data(), state.h_fwd.row(i), sizeof(double) * h);
    std::memcpy(hcat.data() + h, state.h_bwd.row(i), sizeof(double) * h);
    matvec(model.w_t.value, hcat.data(), t.ft.row(i));
    for (int s = 0; s < kNumSubTags; ++s) t.ft.at(i, s) += model.b_t.value.data[s];
    for (int pol = 0; pol < 3; ++pol)
      t.fsh.at(i, pol) = dot(model.w_s.value.row(pol) + 2 * h, state.h_bwd.row(i), h) +
                         model.b_s.value.data[pol];
  }

  for (int a = 0; a < n; ++a) {
    const int max_len = std::min(width, n - a);
    for (int len = 1; len <= max_len; ++len) {
      const int b = a + len - 1;
      segment_repr(state, a + 1, b + 1, g.data());
      const int row = t.span_row(a, b);
      for (int pol = 0; pol < 3; ++pol)
        t.fs_span.at(row, pol) = dot(model.w_s.value.row(pol), g.data(), 2 * h);
      if (model.config.use_opinion_features)
        t.fo_span[row] =
            dot(model.w_o.value.row(0), g.data(), 2 * h) + model.b_o.value.data[0];
    }
  }

  if (model.config.use_offset_features) {
    // Model rows cover offsets down to -config.max_offset; narrower bounds
    // read the centered slice.
    const int shift = model.config.max_offset - m;
    for (int r = 0; r < width; ++r)
      t.fr[r] = dot(model.w_r.value.row(0), model.offset_table.value.row(r + shift),
                    model.config.offset_dim) +
                model.b_r.value.data[0];
  }
  return t;
}

void backward_from_scores(Model& model, EncoderState& state,
                          const std::vector<std::vector<Tag>>& tagsets,
                          const std::vector<std::vector<double>>& dphi) {
  if (!state.has_tape)
    throw Error(Errc::stale_tape, "backward without a live forward tape");
  state.has_tape = false;

  const int n = state.n;
  const int h = state.hidden;
  const int m = model.config.max_offset;
  const int width = 2 * m + 1;
  if (static_cast<int>(tagsets.size()) != n || dphi.size() != tagsets.size())
    throw Error(Errc::shape_mismatch, "cell weights do not match lattice");

  Matrix cnt_t(n, kNumSubTags), ws_pos(n, 3), ws_span(n * width, 3);
  std::vector<double> wo_span(static_cast<size_t>(n) * width, 0.0);
  std::vector<double> wr_off(width, 0.0);

  for (int i = 0; i < n; ++i) {
    if (tagsets[i].size() != dphi[i].size())
      throw Error(Errc::shape_mismatch, "cell weights do not match lattice");
    for (size_t idx = 0; idx < tagsets[i].size(); ++idx) {
      const Tag& tag = tagsets[i][idx];
      const double w = dphi[i][idx];
      cnt_t.at(i, static_cast<int>(tag.sub)) += w;
      if (!tag.has_window()) continue;
      const int a = i + tag.j, b = i + tag.k;
      if (a < 0 || b >= n || std::abs(tag.j) > m || std::abs(tag.k) > m)
        throw Error(Errc::tag_window_out_of_bounds, "cell window outside sentence");
      const int row = a * width + (b - a);
      const int pol = static_cast<int>(tag.pol);
      ws_span.at(row, pol) += w;
      ws_pos.at(i, pol) += w;
      if (model.config.use_opinion_features) wo_span[row] += w;
      if (model.config.use_offset_features) wr_off[std::min(tag.j, tag.k) + m] += w;
    }
  }

  Matrix dh_fwd(n, h), dh_bwd(n, h);
  std::vector<double> hcat(2 * h), tmp2h(2 * h), g(2 * h), dg(2 * h);

  // Sub-tag head and the backward-state block of the sentiment head.
  for (int i = 0; i < n; ++i) {
    std::memcpy(hcat.data(), state.h_fwd.row(i), sizeof(double) * h);
    std::memcpy(hcat.data() + h, state.h_bwd.row(i), sizeof(double) * h);
    outer_add(model.w_t.grad, cnt_t.row(i), hcat.data());
    for (int s = 0; s < kNumSubTags; ++s) model.b_t.grad.data[s] += cnt_t.at(i, s);
    std::fill(tmp2h.begin(), tmp2h.end(), 0.0);
    matvec_transpose_add(model.w_t.value, cnt_t.row(i), tmp2h.data());
    for (int u = 0; u < h; ++u) {
      dh_fwd.at(i, u) += tmp2h[u];
      dh_bwd.at(i, u) += tmp2h[h + u];
    }

    for (int pol = 0; pol < 3; ++pol) {
      const double w = ws_pos.at(i, pol);
      model.b_s.grad.data[pol] += w;
      if (w == 0.0) continue;
      double* ws_grad = model.w_s.grad.row(pol) + 2 * h;
      const double* ws_val = model.w_s.value.row(pol) + 2 * h;
      const double* hb = state.h_bwd.row(i);
      for (int u = 0; u < h; ++u) {
        ws_grad[u] += w * hb[u];
        dh_bwd.at(i, u) += w * ws_val[u];
      }
    }
  }

  // Span-keyed terms: segment block of the sentiment head plus opinion head.
  for (int a = 0; a < n; ++a) {
    const int max_len = std::min(width, n - a);
    for (int len = 1; len <= max_len; ++len) {
      const int b = a + len - 1;
      const int row = a * width + (b - a);
      const double* v3 = ws_span.row(row);
      const double wo = wo_span[row];
      if (v3[0] == 0.0 && v3[1] == 0.0 && v3[2] == 0.0 && wo == 0.0) continue;
      segment_repr(state, a + 1, b + 1, g.data());
      std::fill(dg.begin(), dg.end(), 0.0);
      for (int pol = 0; pol < 3; ++pol) {
        if (v3[pol] == 0.0) continue;
        double* ws_grad = model.w_s.grad.row(pol);
        const double* ws_val = model.w_s.value.row(pol);
        for (int u = 0; u < 2 * h; ++u) {
          ws_grad[u] += v3[pol] * g[u];
          dg[u] += v3[pol] * ws_val[u];
        }
      }
      if (wo != 0.0) {
        double* wog = model.w_o.grad.row(0);
        const double* wov = model.w_o.value.row(0);
        for (int u = 0; u < 2 * h; ++u) {
          wog[u] += wo * g[u];
          dg[u] += wo * wov[u];
        }
        model.b_o.grad.data[0] += wo;
      }
      for (int u = 0; u < h; ++u) {
        dh_fwd.at(b, u) += dg[u];
        dh_bwd.at(a, u) += dg[h + u];
      }
      if (a > 0)
        for (int u = 0; u < h; ++u) dh_fwd.at(a - 1, u) -= dg[u];
      if (b + 1 < n)
        for (int u = 0; u < h; ++u) dh_bwd.at(b + 1, u) -= dg[h + u];
    }
  }

  if (model.config.use_offset_features) {
    for (int r = 0; r < width; ++r) {
      const double w = wr_off[r];
      if (w == 0.0) continue;
      const int dr = model.config.offset_dim;
      for (int u = 0; u < dr; ++u) {
        model.w_r.grad.data[u] += w * model.offset_table.value.at(r, u);
        model.offset_table.grad.at(r, u) += w * model.w_r.value.data[u];
      }
      model.b_r.grad.data[0] += w;
    }
  }

  // Through output dropout into the recurrent chains.
  if (state.training && model.config.dropout > 0.0) {
    apply_mask(dh_fwd, state.mask_fwd);
    apply_mask(dh_bwd, state.mask_bwd);
  }

  Matrix demb(n, model.config.word_dim);
  lstm_backward(model.lstm_fwd, state.emb, state.raw_h_fwd, state.cache_fwd,
                /*reverse_time=*/false, dh_fwd, demb);
  lstm_backward(model.lstm_bwd, state.emb, state.raw_h_bwd, state.cache_bwd,
                /*reverse_time=*/true, dh_bwd, demb);

  if (!state.token_ids.empty()) {
    if (state.training && model.config.dropout > 0.0) apply_mask(demb, state.emb_mask);
    for (int i = 0; i < n; ++i) {
      double* row = model.embedding.grad.row(state.token_ids[i]);
      const double* src = demb.row(i);
      for (int u = 0; u < model.config.word_dim; ++u) row[u] += src[u];
    }
  }
}

}  // namespace aste
