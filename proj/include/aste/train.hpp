#pragma once

// Training loop: negative log-likelihood on gold tag sequences, Adam updates,
// per-epoch dev F1 model selection, and a single-file checkpoint format.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "aste/crf.hpp"
#include "aste/model.hpp"
#include "aste/types.hpp"

namespace aste {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

struct TrainConfig {
  Scheme scheme = Scheme::target_first;
  ModelConfig model;
  OptimConfig optim;
  int epochs = 20;
  int batch_size = 1;
  uint64_t seed = 42;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct FilterReport {
  size_t kept = 0;
  size_t dropped = 0;
  std::map<Errc, size_t> reasons;
};

// Keeps the sentences whose triplets encode cleanly under (scheme,
// max_offset); max_offset < 0 lifts the offset bound so only scheme
// preconditions can drop a sentence.
std::vector<CorpusRecord> filter_instances(const std::vector<CorpusRecord>& data,
                                           Scheme scheme, int max_offset,
                                           FilterReport* report = nullptr);

// Mean negative log-likelihood of the gold sequences over a batch, evaluated
// without dropout and without touching gradients.
double nll_loss(const Model& model, const std::vector<CorpusRecord>& batch,
                Scheme scheme);

// Forward + backward on one sentence: adds d(nll)/d(theta) into the model's
// gradient buffers and returns the loss. Dropout active when rng != null and
// the config rate is positive.
double nll_loss_backward(Model& model, const CorpusRecord& record, Scheme scheme,
                         Rng* dropout_rng);

class Adam {
 public:
  explicit Adam(const OptimConfig& cfg) : cfg_(cfg) {}

  // Applies one update from the accumulated gradients. Embedding updates are
  // skipped when the config freezes them.
  void step(Model& model);

 private:
  OptimConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_f1 = 0.0;
  double dev_f1 = 0.0;
};

struct TrainResult {
  Model best_model;
  double best_dev_f1 = 0.0;
  int best_epoch = -1;
  std::vector<EpochStats> history;
  FilterReport filter;
};

// Full run: filter, build vocab, init params, epochs of shuffled single
// sentence updates, dev F1 after each epoch, earliest best epoch wins ties.
// pretrained maps tokens to embedding rows; pass empty to initialize all
// rows randomly. Progress lines go to log when non-null.
TrainResult train(const TrainConfig& config, const std::vector<CorpusRecord>& train_set,
                  const std::vector<CorpusRecord>& dev_set,
                  const std::map<std::string, std::vector<double>>& pretrained = {},
                  std::ostream* log = nullptr);

// Decode every sentence with the model's own settings.
std::vector<std::vector<Triplet>> predict(const Model& model,
                                          const std::vector<CorpusRecord>& records,
                                          Scheme scheme);

// Single-file checkpoint: text magic + one-line JSON manifest (config, vocab,
// shapes, metrics) followed by a little-endian float payload.
struct Checkpoint {
  Model model;
  TrainConfig config;
  double dev_f1 = 0.0;
  int epoch = -1;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     bool float32 = false);
Checkpoint load_checkpoint(const std::string& path);

// JSON (de)serialization for config files; missing fields keep defaults,
// unknown keys are rejected.
std::string train_config_to_json_text(const TrainConfig& config);
TrainConfig train_config_from_json_text(const std::string& text);

}  // namespace aste
