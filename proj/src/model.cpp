#include "aste/model.hpp"

#include <cmath>
#include <limits>

#include "aste/tagging.hpp"

namespace aste {

namespace {

void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
  for (double& v : m.data) v = rng.uniform(lo, hi);
}

// Uniform(+-1/sqrt(fan_in)), the usual default for recurrent nets and
// linear layers.
void fill_fan_in(Matrix& m, Rng& rng, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  fill_uniform(m, rng, -bound, bound);
}

}  // namespace

bool transition_allowed(int from, int to) {
  if (to == kStartSym || from == kStopSym) return false;
  switch (from) {
    case static_cast<int>(SubTag::B):
    case static_cast<int>(SubTag::I):
      return to == static_cast<int>(SubTag::I) || to == static_cast<int>(SubTag::E);
    case static_cast<int>(SubTag::E):
    case static_cast<int>(SubTag::S):
    case static_cast<int>(SubTag::O):
    case kStartSym:
      return to == static_cast<int>(SubTag::B) || to == static_cast<int>(SubTag::S) ||
             to == static_cast<int>(SubTag::O) || (to == kStopSym && from != kStartSym);
    default:
      return false;
  }
}

void Model::init(Rng& rng) {
  const int dw = config.word_dim;
  const int h = config.hidden;
  const int dr = config.offset_dim;
  const int rows_r = 2 * config.max_offset + 1;

  embedding = Tensor(vocab.size(), dw);
  fill_uniform(embedding.value, rng, -0.1, 0.1);
  for (int c = 0; c < dw; ++c) embedding.value.at(Vocabulary::kPad, c) = 0.0;

  for (LstmParams* lstm : {&lstm_fwd, &lstm_bwd}) {
    lstm->w_ih = Tensor(4 * h, dw);
    lstm->w_hh = Tensor(4 * h, h);
    lstm->b = Tensor(4 * h, 1);
    fill_fan_in(lstm->w_ih.value, rng, h);
    fill_fan_in(lstm->w_hh.value, rng, h);
    fill_fan_in(lstm->b.value, rng, h);
  }

  w_t = Tensor(kNumSubTags, 2 * h);
  b_t = Tensor(kNumSubTags, 1);
  fill_fan_in(w_t.value, rng, 2 * h);
  fill_fan_in(b_t.value, rng, 2 * h);

  w_s = Tensor(3, 3 * h);
  b_s = Tensor(3, 1);
  fill_fan_in(w_s.value, rng, 3 * h);
  fill_fan_in(b_s.value, rng, 3 * h);

  w_o = Tensor(1, 2 * h);
  b_o = Tensor(1, 1);
  fill_fan_in(w_o.value, rng, 2 * h);
  fill_fan_in(b_o.value, rng, 2 * h);

  offset_table = Tensor(rows_r, dr);
  fill_uniform(offset_table.value, rng, -0.1, 0.1);
  w_r = Tensor(1, dr);
  b_r = Tensor(1, 1);
  fill_fan_in(w_r.value, rng, dr);
  fill_fan_in(b_r.value, rng, dr);

  transitions = Tensor(kNumTransSyms, kNumTransSyms);
}

void Model::for_each_parameter(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("embedding", embedding);
  fn("lstm_fwd.w_ih", lstm_fwd.w_ih);
  fn("lstm_fwd.w_hh", lstm_fwd.w_hh);
  fn("lstm_fwd.b", lstm_fwd.b);
  fn("lstm_bwd.w_ih", lstm_bwd.w_ih);
  fn("lstm_bwd.w_hh", lstm_bwd.w_hh);
  fn("lstm_bwd.b", lstm_bwd.b);
  fn("w_t", w_t);
  fn("b_t", b_t);
  fn("w_s", w_s);
  fn("b_s", b_s);
  fn("w_o", w_o);
  fn("b_o", b_o);
  fn("offset_table", offset_table);
  fn("w_r", w_r);
  fn("b_r", b_r);
  fn("transitions", transitions);
}

void Model::for_each_parameter(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<Model*>(this)->for_each_parameter(
      [&](const std::string& name, Tensor& t) { fn(name, t); });
}

void Model::zero_grads() {
  for_each_parameter([](const std::string&, Tensor& t) { t.grad.zero(); });
}

double Model::transition_score(int from, int to) const {
  if (config.transition_mask && !transition_allowed(from, to))
    return -std::numeric_limits<double>::infinity();
  return transitions.value.at(from, to);
}

}  // namespace aste
