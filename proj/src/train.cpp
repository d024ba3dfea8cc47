#include "aste/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "aste/eval.hpp"
#include "json.hpp"

namespace aste {

namespace {

using json = nlohmann::json;

// Stream tags so one master seed yields independent init / shuffle / dropout
// streams that do not shift when unrelated draws are added elsewhere.
constexpr uint64_t kInitStream = 0x01;
constexpr uint64_t kShuffleStream = 0x02;
constexpr uint64_t kDropoutStream = 0x03;

uint64_t stream_seed(uint64_t master, uint64_t stream, uint64_t epoch = 0) {
  return mix_seed(mix_seed(master + stream) + epoch);
}

TagSequence encode_gold(const Model& model, const CorpusRecord& record,
                        Scheme scheme) {
  try {
    return encode(static_cast<int>(record.tokens.size()), record.triplets, scheme,
                  model.config.max_offset);
  } catch (const Error& e) {
    throw Error(Errc::encoding_error,
                std::string("gold triplets not encodable: ") + e.what());
  }
}

std::vector<int> lookup_ids(const Model& model, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(model.vocab.lookup(t));
  return ids;
}

int find_tag_index(const std::vector<Tag>& tags, const Tag& tag) {
  for (size_t i = 0; i < tags.size(); ++i)
    if (tags[i] == tag) return static_cast<int>(i);
  throw Error(Errc::invalid_sequence, "gold tag missing from lattice");
}

void scale_grads(Model& model, double factor) {
  if (factor == 1.0) return;
  model.for_each_parameter([&](const std::string&, Tensor& t) {
    for (double& g : t.grad.data) g *= factor;
  });
}

}  // namespace

std::vector<CorpusRecord> filter_instances(const std::vector<CorpusRecord>& data,
                                           Scheme scheme, int max_offset,
                                           FilterReport* report) {
  std::vector<CorpusRecord> kept;
  FilterReport local;
  for (const CorpusRecord& r : data) {
    const int n = static_cast<int>(r.tokens.size());
    // A negative bound means "no offset limit": within one sentence no offset
    // can exceed n, so n acts as infinity.
    const int bound = max_offset < 0 ? n : max_offset;
    try {
      encode(n, r.triplets, scheme, bound);
      kept.push_back(r);
      ++local.kept;
    } catch (const Error& e) {
      ++local.dropped;
      ++local.reasons[e.code];
    }
  }
  if (report) *report = local;
  return kept;
}

double nll_loss(const Model& model, const std::vector<CorpusRecord>& batch,
                Scheme scheme) {
  if (batch.empty()) throw Error(Errc::no_trainable_instances, "empty batch");
  double total = 0.0;
  for (const CorpusRecord& r : batch) {
    const TagSequence gold = encode_gold(model, r, scheme);
    const EncoderState state =
        encode_tokens(model, lookup_ids(model, r.tokens), /*training=*/false, nullptr);
    total += -log_prob(model, state, gold);
  }
  return total / static_cast<double>(batch.size());
}

double nll_loss_backward(Model& model, const CorpusRecord& record, Scheme scheme,
                         Rng* dropout_rng) {
  const int n = static_cast<int>(record.tokens.size());
  const int m = model.config.max_offset;
  const TagSequence gold = encode_gold(model, record, scheme);

  EncoderState state = encode_tokens(model, lookup_ids(model, record.tokens),
                                     /*training=*/dropout_rng != nullptr, dropout_rng);
  const ScoreTable table = compute_scores(model, state, m);
  const Lattice lattice = make_lattice(n, m);
  PartitionGradients pg = partition_gradients(model, table, lattice);

  // Gold path score under the same emission table the lattice used.
  double gold_score = model.transition_score(kStartSym, static_cast<int>(gold.tags[0].sub));
  for (int i = 0; i < n; ++i) {
    gold_score += table.phi(i, gold.tags[i]);
    if (i + 1 < n)
      gold_score += model.transition_score(static_cast<int>(gold.tags[i].sub),
                                           static_cast<int>(gold.tags[i + 1].sub));
  }
  gold_score +=
      model.transition_score(static_cast<int>(gold.tags[n - 1].sub), kStopSym);
  const double loss = pg.log_z - gold_score;

  // d(loss)/d(emission): posterior minus gold indicator.
  for (int i = 0; i < n; ++i)
    pg.cell[i][find_tag_index(lattice.tags[i], gold.tags[i])] -= 1.0;

  // d(loss)/d(transition): expected minus observed counts.
  pg.transition[kStartSym][static_cast<int>(gold.tags[0].sub)] -= 1.0;
  for (int i = 0; i + 1 < n; ++i)
    pg.transition[static_cast<int>(gold.tags[i].sub)]
                 [static_cast<int>(gold.tags[i + 1].sub)] -= 1.0;
  pg.transition[static_cast<int>(gold.tags[n - 1].sub)][kStopSym] -= 1.0;
  for (int s = 0; s < kNumTransSyms; ++s)
    for (int t = 0; t < kNumTransSyms; ++t)
      model.transitions.grad.at(s, t) += pg.transition[s][t];

  backward_from_scores(model, state, lattice.tags, pg.cell);
  return loss;
}

void Adam::step(Model& model) {
  ++t_;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    model.for_each_parameter([&](const std::string&, Tensor& t) {
      for (double g : t.grad.data) sq += g * g;
    });
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) scale_grads(model, cfg_.grad_clip / norm);
  }

  const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  model.for_each_parameter([&](const std::string& name, Tensor& t) {
    if (name == "embedding" && !model.config.train_embeddings) return;
    auto& [m, v] = moments_[name];
    if (m.size() != t.size()) {
      m.assign(t.size(), 0.0);
      v.assign(t.size(), 0.0);
    }
    for (size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad.data[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bias1;
      const double vhat = v[i] / bias2;
      t.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  });
}

std::vector<std::vector<Triplet>> predict(const Model& model,
                                          const std::vector<CorpusRecord>& records,
                                          Scheme scheme) {
  std::vector<std::vector<Triplet>> out;
  out.reserve(records.size());
  for (const CorpusRecord& r : records) {
    const EncoderState state =
        encode_tokens(model, lookup_ids(model, r.tokens), /*training=*/false, nullptr);
    const ViterbiResult vr = viterbi(model, state, scheme, model.config.max_offset);
    out.push_back(decode(vr.seq));
  }
  return out;
}

TrainResult train(const TrainConfig& config, const std::vector<CorpusRecord>& train_set,
                  const std::vector<CorpusRecord>& dev_set,
                  const std::map<std::string, std::vector<double>>& pretrained,
                  std::ostream* log) {
  TrainResult result;
  const std::vector<CorpusRecord> data =
      filter_instances(train_set, config.scheme, config.model.max_offset, &result.filter);
  if (data.empty())
    throw Error(Errc::no_trainable_instances, "no sentence survived filtering");

  Model model;
  model.config = config.model;
  for (const CorpusRecord& r : data)
    for (const std::string& t : r.tokens) model.vocab.add(t);

  Rng init_rng(stream_seed(config.seed, kInitStream));
  model.init(init_rng);
  for (int id = 0; id < model.vocab.size(); ++id) {
    auto it = pretrained.find(model.vocab.tokens[id]);
    if (it == pretrained.end()) continue;
    if (static_cast<int>(it->second.size()) != model.config.word_dim)
      throw Error(Errc::config_error, "pretrained vector width mismatch for '" +
                                          model.vocab.tokens[id] + "'");
    std::memcpy(model.embedding.value.row(id), it->second.data(),
                sizeof(double) * model.config.word_dim);
  }

  std::vector<std::vector<Triplet>> train_gold, dev_gold;
  for (const CorpusRecord& r : data) train_gold.push_back(r.triplets);
  for (const CorpusRecord& r : dev_set) dev_gold.push_back(r.triplets);

  Adam adam(config.optim);
  const int batch = std::max(1, config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(stream_seed(config.seed, kShuffleStream, epoch));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(stream_seed(config.seed, kDropoutStream, epoch));
    Rng* drop = model.config.dropout > 0.0 ? &dropout_rng : nullptr;

    double loss_sum = 0.0;
    size_t done = 0;
    while (done < order.size()) {
      const size_t take = std::min<size_t>(batch, order.size() - done);
      model.zero_grads();
      for (size_t b = 0; b < take; ++b)
        loss_sum += nll_loss_backward(model, data[order[done + b]], config.scheme, drop);
      scale_grads(model, 1.0 / static_cast<double>(take));
      adam.step(model);
      done += take;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(data.size());
    stats.train_f1 = score(train_gold, predict(model, data, config.scheme),
                           MatchMode::exact)
                         .f1;
    if (!dev_set.empty())
      stats.dev_f1 = score(dev_gold, predict(model, dev_set, config.scheme),
                           MatchMode::exact)
                         .f1;
    result.history.push_back(stats);

    const bool improved = dev_set.empty() || stats.dev_f1 > result.best_dev_f1 ||
                          result.best_epoch < 0;
    if (improved) {
      result.best_model = model;
      result.best_dev_f1 = stats.dev_f1;
      result.best_epoch = epoch;
    }
    if (log)
      *log << "epoch " << epoch << " loss " << stats.train_loss << " train_f1 "
           << stats.train_f1 << " dev_f1 " << stats.dev_f1 << '\n';
  }
  return result;
}

// ---------------------------------------------------------------------------
// Config and checkpoint serialization.

namespace {

json optim_to_json(const OptimConfig& o) {
  return json{{"lr", o.lr},
              {"beta1", o.beta1},
              {"beta2", o.beta2},
              {"eps", o.eps},
              {"grad_clip", o.grad_clip}};
}

json model_to_json(const ModelConfig& m) {
  return json{{"word_dim", m.word_dim},
              {"hidden", m.hidden},
              {"offset_dim", m.offset_dim},
              {"max_offset", m.max_offset},
              {"dropout", m.dropout},
              {"use_offset_features", m.use_offset_features},
              {"use_opinion_features", m.use_opinion_features},
              {"transition_mask", m.transition_mask},
              {"train_embeddings", m.train_embeddings}};
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return key == k; }) == allowed.end())
      throw Error(Errc::config_error,
                  "unknown key '" + key + "' in " + std::string(where));
  }
}

OptimConfig optim_from_json(const json& j) {
  check_keys(j, {"lr", "beta1", "beta2", "eps", "grad_clip"}, "optimizer config");
  OptimConfig o;
  read_field(j, "lr", o.lr);
  read_field(j, "beta1", o.beta1);
  read_field(j, "beta2", o.beta2);
  read_field(j, "eps", o.eps);
  read_field(j, "grad_clip", o.grad_clip);
  return o;
}

ModelConfig model_from_json(const json& j) {
  check_keys(j,
             {"word_dim", "hidden", "offset_dim", "max_offset", "dropout",
              "use_offset_features", "use_opinion_features", "transition_mask",
              "train_embeddings"},
             "model config");
  ModelConfig m;
  read_field(j, "word_dim", m.word_dim);
  read_field(j, "hidden", m.hidden);
  read_field(j, "offset_dim", m.offset_dim);
  read_field(j, "max_offset", m.max_offset);
  read_field(j, "dropout", m.dropout);
  read_field(j, "use_offset_features", m.use_offset_features);
  read_field(j, "use_opinion_features", m.use_opinion_features);
  read_field(j, "transition_mask", m.transition_mask);
  read_field(j, "train_embeddings", m.train_embeddings);
  if (m.word_dim <= 0 || m.hidden <= 0 || m.offset_dim <= 0 || m.max_offset < 0)
    throw Error(Errc::config_error, "model dimensions must be positive");
  if (m.dropout < 0.0 || m.dropout >= 1.0)
    throw Error(Errc::config_error, "dropout must lie in [0, 1)");
  return m;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"scheme", std::string(1, scheme_letter(c.scheme))},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"model", model_to_json(c.model)},
              {"optim", optim_to_json(c.optim)}};
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j, {"scheme", "epochs", "batch_size", "seed", "model", "optim"},
             "train config");
  TrainConfig c;
  if (j.contains("scheme")) {
    const std::string s = j.at("scheme").get<std::string>();
    const auto scheme = s.size() == 1 ? scheme_from_letter(s[0]) : std::nullopt;
    if (!scheme) throw Error(Errc::config_error, "scheme must be 't' or 'o'");
    c.scheme = *scheme;
  }
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "seed", c.seed);
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("optim")) c.optim = optim_from_json(j.at("optim"));
  if (c.epochs < 0 || c.batch_size < 1)
    throw Error(Errc::config_error, "bad epochs or batch size");
  return c;
}

void append_le(std::string& out, uint64_t bits, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

uint64_t read_le(const char* p, int bytes) {
  uint64_t bits = 0;
  for (int b = 0; b < bytes; ++b)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return bits;
}

constexpr const char* kMagic = "ASTECKPT 1";

}  // namespace

std::string train_config_to_json_text(const TrainConfig& c) {
  return train_config_to_json(c).dump(2);
}

TrainConfig train_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return train_config_from_json(j);
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, std::string("bad config value: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt, bool float32) {
  json manifest;
  manifest["dtype"] = float32 ? "f32" : "f64";
  manifest["dev_f1"] = ckpt.dev_f1;
  manifest["epoch"] = ckpt.epoch;
  manifest["config"] = train_config_to_json(ckpt.config);
  manifest["vocab"] = ckpt.model.vocab.tokens;
  json tensors = json::array();
  ckpt.model.for_each_parameter([&](const std::string& name, const Tensor& t) {
    tensors.push_back(json{{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  manifest["tensors"] = std::move(tensors);

  std::string payload;
  ckpt.model.for_each_parameter([&](const std::string&, const Tensor& t) {
    for (double v : t.value.data) {
      if (float32)
        append_le(payload, std::bit_cast<uint32_t>(static_cast<float>(v)), 4);
      else
        append_le(payload, std::bit_cast<uint64_t>(v), 8);
    }
  });

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::io_error, "cannot write " + path);
  file << kMagic << '\n' << manifest.dump() << '\n' << payload;
  if (!file) throw Error(Errc::io_error, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::io_error, "cannot read " + path);
  std::string magic, manifest_line;
  if (!std::getline(file, magic) || magic != kMagic)
    throw Error(Errc::parse_error, path + " is not a checkpoint file");
  if (!std::getline(file, manifest_line))
    throw Error(Errc::parse_error, "checkpoint manifest missing");

  json manifest;
  try {
    manifest = json::parse(manifest_line);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad checkpoint manifest: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    const std::string dtype = manifest.at("dtype").get<std::string>();
    if (dtype != "f32" && dtype != "f64")
      throw Error(Errc::parse_error, "unknown checkpoint dtype " + dtype);
    const bool f32 = dtype == "f32";
    ckpt.dev_f1 = manifest.at("dev_f1").get<double>();
    ckpt.epoch = manifest.at("epoch").get<int>();
    ckpt.config = train_config_from_json(manifest.at("config"));
    ckpt.model.config = ckpt.config.model;
    ckpt.model.vocab.tokens.clear();
    ckpt.model.vocab.index.clear();
    for (const auto& tok : manifest.at("vocab")) {
      const std::string t = tok.get<std::string>();
      ckpt.model.vocab.index.emplace(t, ckpt.model.vocab.tokens.size());
      ckpt.model.vocab.tokens.push_back(t);
    }

    Rng dummy(0);
    ckpt.model.init(dummy);  // allocates shapes; values overwritten below

    std::string payload((std::istreambuf_iterator<char>(file)),
                        std::istreambuf_iterator<char>());
    const size_t elem = f32 ? 4 : 8;
    size_t offset = 0;
    size_t tensor_idx = 0;
    const json& tensors = manifest.at("tensors");
    ckpt.model.for_each_parameter([&](const std::string& name, Tensor& t) {
      if (tensor_idx >= tensors.size())
        throw Error(Errc::parse_error, "checkpoint tensor list too short");
      const json& meta = tensors.at(tensor_idx++);
      if (meta.at("name").get<std::string>() != name ||
          meta.at("rows").get<int>() != t.rows() ||
          meta.at("cols").get<int>() != t.cols())
        throw Error(Errc::parse_error, "checkpoint shape mismatch for " + name);
      if (offset + t.size() * elem > payload.size())
        throw Error(Errc::parse_error, "checkpoint payload truncated");
      for (size_t i = 0; i < t.size(); ++i) {
        const uint64_t bits = read_le(payload.data() + offset, static_cast<int>(elem));
        t.value.data[i] =
            f32 ? static_cast<double>(std::bit_cast<float>(static_cast<uint32_t>(bits)))
                : std::bit_cast<double>(bits);
        offset += elem;
      }
    });
    if (tensor_idx != tensors.size() || offset != payload.size())
      throw Error(Errc::parse_error, "checkpoint payload size mismatch");
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad checkpoint manifest: ") + e.what());
  }
  return ckpt;
}

}  // namespace aste
