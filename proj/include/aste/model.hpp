#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aste/la.hpp"
#include "aste/types.hpp"

namespace aste {

// A parameter block: value and accumulated gradient, same shape.
struct Tensor {
  Matrix value;
  Matrix grad;

  Tensor() = default;
  Tensor(int rows, int cols) : value(rows, cols), grad(rows, cols) {}
  int rows() const { return value.rows; }
  int cols() const { return value.cols; }
  size_t size() const { return value.data.size(); }
};

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens{"<pad>", "<unk>"};
  std::unordered_map<std::string, int> index{{"<pad>", kPad}, {"<unk>", kUnk}};

  int size() const { return static_cast<int>(tokens.size()); }

  int add(const std::string& token) {
    auto it = index.find(token);
    if (it != index.end()) return it->second;
    const int id = size();
    tokens.push_back(token);
    index.emplace(token, id);
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens == b.tokens;
  }
};

struct ModelConfig {
  int word_dim = 300;
  int hidden = 300;      // per direction
  int offset_dim = 100;  // width of one offset embedding row
  int max_offset = 6;
  double dropout = 0.5;
  bool use_offset_features = true;
  bool use_opinion_features = true;
  bool transition_mask = true;
  bool train_embeddings = true;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Sub-tag transition alphabet: the five sub-tags (same codes as SubTag) plus
// the boundary symbols.
inline constexpr int kStartSym = 5;
inline constexpr int kStopSym = 6;
inline constexpr int kNumTransSyms = 7;

struct LstmParams {
  // Gate order in the stacked dimension: input, forget, cell, output.
  Tensor w_ih;  // 4H x word_dim
  Tensor w_hh;  // 4H x H
  Tensor b;     // 4H x 1
};

struct Model {
  ModelConfig config;
  Vocabulary vocab;

  Tensor embedding;  // V x word_dim
  LstmParams lstm_fwd, lstm_bwd;
  Tensor w_t, b_t;          // 5 x 2H, 5            sub-tag head
  Tensor w_s, b_s;          // 3 x 3H, 3            sentiment head over [g; h_bwd]
  Tensor w_o, b_o;          // 1 x 2H, 1            opinion-span head
  Tensor offset_table;      // (2M+1) x offset_dim  rows indexed by min(j,k)+M
  Tensor w_r, b_r;          // 1 x offset_dim, 1    offset head
  Tensor transitions;       // 7 x 7                indexed [from][to]

  // Allocates every tensor for the current config and vocab and randomizes
  // values: embeddings and offset rows uniform(-0.1, 0.1), recurrent and head
  // weights uniform(+-1/sqrt(fan_in)), transitions zero.
  void init(Rng& rng);

  // Visits every trainable tensor in a fixed order shared by the optimizer,
  // the checkpoint format, and gradient checks.
  void for_each_parameter(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_parameter(
      const std::function<void(const std::string&, const Tensor&)>& fn) const;

  void zero_grads();

  // Effective transition score from symbol a to symbol b (indices into the
  // 7-symbol alphabet): the learned value, or -inf when the structural mask
  // is on and the move is illegal.
  double transition_score(int from, int to) const;
};

// The hard sub-tag grammar: START -> {B,S,O}; B,I -> {I,E}; E,S,O -> {B,S,O,STOP}.
bool transition_allowed(int from, int to);

}  // namespace aste
