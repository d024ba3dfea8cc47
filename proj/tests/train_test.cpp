#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "aste/selfcheck.hpp"
#include "aste/train.hpp"
#include "support/synthetic.hpp"

using namespace aste;

namespace {

std::string temp_path(const std::string& name) {
  static const auto dir =
      std::filesystem::temp_directory_path() / "aste_train_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.model.word_dim = 8;
  cfg.model.hidden = 8;
  cfg.model.offset_dim = 4;
  cfg.model.max_offset = 3;
  cfg.model.dropout = 0.0;
  cfg.optim.lr = 0.02;
  cfg.epochs = 12;
  cfg.batch_size = 1;
  cfg.seed = 5;
  return cfg;
}

bool models_identical(const Model& a, const Model& b) {
  bool same = a.vocab == b.vocab;
  std::vector<const Matrix*> av, bv;
  a.for_each_parameter(
      [&](const std::string&, const Tensor& t) { av.push_back(&t.value); });
  b.for_each_parameter(
      [&](const std::string&, const Tensor& t) { bv.push_back(&t.value); });
  if (av.size() != bv.size()) return false;
  for (size_t i = 0; i < av.size(); ++i) same = same && *av[i] == *bv[i];
  return same;
}

}  // namespace

TEST_CASE("instance filtering drops what the codec cannot express") {
  std::vector<CorpusRecord> data = testing::synthetic_corpus(0, 4);
  // overlapping targets
  data.push_back({{"a", "b", "c", "d"},
                  {{{0, 1}, {3, 3}, Sentiment::positive},
                   {{1, 2}, {3, 3}, Sentiment::negative}}});
  // one target, two opinion spans
  data.push_back({{"a", "b", "c", "d"},
                  {{{0, 0}, {1, 1}, Sentiment::positive},
                   {{0, 0}, {3, 3}, Sentiment::positive}}});
  // opinion further away than the offset bound
  data.push_back({{"a", "b", "c", "d", "e", "f"},
                  {{{0, 0}, {5, 5}, Sentiment::neutral}}});

  FilterReport report;
  const auto kept = filter_instances(data, Scheme::target_first, 3, &report);
  CHECK(kept.size() == 4);
  CHECK(report.kept == 4);
  CHECK(report.dropped == 3);
  CHECK(report.reasons[Errc::overlapping_primary_spans] == 1);
  CHECK(report.reasons[Errc::multiple_secondary_spans] == 1);
  CHECK(report.reasons[Errc::offset_exceeds_max] == 1);

  // negative bound lifts the offset restriction
  FilterReport wide;
  const auto kept_wide = filter_instances(data, Scheme::target_first, -1, &wide);
  CHECK(kept_wide.size() == 5);
  CHECK(wide.reasons.count(Errc::offset_exceeds_max) == 0);

  // the multi-opinion target is representable when opinions carry the tags
  FilterReport swapped;
  filter_instances(data, Scheme::opinion_first, 3, &swapped);
  CHECK(swapped.reasons.count(Errc::multiple_secondary_spans) == 0);
  CHECK(swapped.reasons[Errc::overlapping_primary_spans] == 1);
}

TEST_CASE("zero model loss is the log sequence count") {
  Rng rng(1);
  ModelConfig mc;
  mc.word_dim = 3;
  mc.hidden = 2;
  mc.offset_dim = 2;
  mc.max_offset = 1;
  mc.dropout = 0.0;
  Model model = random_model(mc, 4, rng);
  model.for_each_parameter([](const std::string&, Tensor& t) { t.value.zero(); });
  const CorpusRecord rec{{"a", "b"}, {{{0, 0}, {1, 1}, Sentiment::positive}}};
  CHECK(nll_loss(model, {rec}, Scheme::target_first) ==
        doctest::Approx(std::log(109.0)).epsilon(1e-12));
}

TEST_CASE("backward reports the same loss the forward pass computes") {
  Rng rng(2);
  ModelConfig mc;
  mc.word_dim = 4;
  mc.hidden = 3;
  mc.offset_dim = 3;
  mc.max_offset = 2;
  mc.dropout = 0.0;
  Model model = random_model(mc, 8, rng);
  const CorpusRecord rec{{"w0", "w1", "w2"}, {{{0, 0}, {1, 2}, Sentiment::negative}}};

  model.zero_grads();
  const double loss = nll_loss_backward(model, rec, Scheme::target_first, nullptr);
  CHECK(loss == doctest::Approx(nll_loss(model, {rec}, Scheme::target_first))
                    .epsilon(1e-12));

  // spot-check the gradient against central differences on a few coordinates
  struct Probe {
    std::string name;
    size_t idx;
    double analytic;
  };
  std::vector<Probe> probes;
  model.for_each_parameter([&](const std::string& name, Tensor& t) {
    probes.push_back({name, t.size() / 2, t.grad.data[t.size() / 2]});
  });
  const double h = 1e-5;
  for (const Probe& p : probes) {
    double fd = 0.0;
    model.for_each_parameter([&](const std::string& name, Tensor& t) {
      if (name != p.name) return;
      const double saved = t.value.data[p.idx];
      t.value.data[p.idx] = saved + h;
      const double up = nll_loss(model, {rec}, Scheme::target_first);
      t.value.data[p.idx] = saved - h;
      const double down = nll_loss(model, {rec}, Scheme::target_first);
      t.value.data[p.idx] = saved;
      fd = (up - down) / (2 * h);
    });
    CHECK(std::abs(p.analytic - fd) / std::max(1.0, std::abs(fd)) < 1e-5);
  }
}

TEST_CASE("adam with zero learning rate is an identity") {
  Rng rng(3);
  ModelConfig mc;
  mc.word_dim = 3;
  mc.hidden = 2;
  mc.offset_dim = 2;
  mc.max_offset = 1;
  Model model = random_model(mc, 5, rng);
  Model before = model;
  model.for_each_parameter([&](const std::string&, Tensor& t) {
    for (double& g : t.grad.data) g = rng.normal(0.0, 1.0);
  });
  OptimConfig oc;
  oc.lr = 0.0;
  Adam opt(oc);
  opt.step(model);
  CHECK(models_identical(model, before));
}

TEST_CASE("frozen embeddings stay put while everything else moves") {
  Rng rng(4);
  ModelConfig mc;
  mc.word_dim = 3;
  mc.hidden = 2;
  mc.offset_dim = 2;
  mc.max_offset = 1;
  mc.train_embeddings = false;
  Model model = random_model(mc, 5, rng);
  const Matrix emb_before = model.embedding.value;
  const Matrix wt_before = model.w_t.value;
  model.for_each_parameter([&](const std::string&, Tensor& t) {
    for (double& g : t.grad.data) g = 0.5;
  });
  OptimConfig oc;
  oc.lr = 0.1;
  Adam opt(oc);
  opt.step(model);
  CHECK(model.embedding.value == emb_before);
  CHECK(!(model.w_t.value == wt_before));
}

TEST_CASE("training reduces the loss and is seed-deterministic") {
  const auto corpus = testing::synthetic_corpus(0, 8);
  const TrainConfig cfg = tiny_train_config();

  const TrainResult a = train(cfg, corpus, {});
  const TrainResult b = train(cfg, corpus, {});
  REQUIRE(!a.history.empty());
  CHECK(a.history.back().train_loss < a.history.front().train_loss);

  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].train_f1 == b.history[i].train_f1);
  }
  CHECK(models_identical(a.best_model, b.best_model));

  // empty dev set: the last epoch is kept
  CHECK(a.best_epoch == cfg.epochs);

  TrainConfig other = cfg;
  other.seed = 6;
  const TrainResult c = train(other, corpus, {});
  CHECK(!models_identical(a.best_model, c.best_model));
}

TEST_CASE("training with a dev set keeps the earliest best epoch") {
  const auto corpus = testing::synthetic_corpus(0, 8);
  const auto dev = testing::synthetic_corpus(8, 4);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 6;
  const TrainResult r = train(cfg, corpus, dev);
  REQUIRE(r.best_epoch >= 1);
  // the recorded best dev score is the maximum, achieved first at best_epoch
  for (const EpochStats& e : r.history) {
    CHECK(e.dev_f1 <= r.best_dev_f1 + 1e-15);
    if (e.epoch < r.best_epoch) CHECK(e.dev_f1 < r.best_dev_f1);
  }
}

TEST_CASE("training refuses a corpus with nothing usable") {
  std::vector<CorpusRecord> bad;
  bad.push_back({{"a", "b", "c", "d", "e", "f", "g"},
                 {{{0, 0}, {6, 6}, Sentiment::positive}}});
  TrainConfig cfg = tiny_train_config();
  try {
    train(cfg, bad, {});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code == Errc::no_trainable_instances);
  }
}

TEST_CASE("pretrained rows seed the embedding and can be frozen") {
  const auto corpus = testing::synthetic_corpus(0, 4);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  cfg.model.train_embeddings = false;
  std::map<std::string, std::vector<double>> pretrained;
  pretrained["pizza"] = {9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0};
  const TrainResult r = train(cfg, corpus, {}, pretrained);
  const int id = r.best_model.vocab.lookup("pizza");
  REQUIRE(id != Vocabulary::kUnk);
  for (int c = 0; c < 8; ++c)
    CHECK(r.best_model.embedding.value.at(id, c) == 9.0 - c);
}

TEST_CASE("checkpoints round-trip bit-exactly in the double format") {
  const auto corpus = testing::synthetic_corpus(0, 6);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 2;
  const TrainResult r = train(cfg, corpus, {});

  Checkpoint out{r.best_model, cfg, r.best_dev_f1, r.best_epoch};
  const std::string path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, out);
  const Checkpoint in = load_checkpoint(path);

  CHECK(models_identical(in.model, out.model));
  CHECK(in.config == cfg);
  CHECK(in.dev_f1 == out.dev_f1);
  CHECK(in.epoch == out.epoch);
  CHECK(predict(in.model, corpus, cfg.scheme) ==
        predict(out.model, corpus, cfg.scheme));
}

TEST_CASE("float32 checkpoints load with rounded values") {
  const auto corpus = testing::synthetic_corpus(0, 4);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  const TrainResult r = train(cfg, corpus, {});
  const std::string path = temp_path("narrow.ckpt");
  save_checkpoint(path, {r.best_model, cfg, r.best_dev_f1, r.best_epoch}, true);
  const Checkpoint in = load_checkpoint(path);
  CHECK(in.config == cfg);
  double worst = 0.0;
  in.model.for_each_parameter([&](const std::string& name, const Tensor& t) {
    r.best_model.for_each_parameter([&](const std::string& other, const Tensor& s) {
      if (name != other) return;
      for (size_t i = 0; i < t.size(); ++i)
        worst = std::max(worst,
                         std::abs(t.value.data[i] - s.value.data[i]) /
                             std::max(1.0, std::abs(s.value.data[i])));
    });
  });
  CHECK(worst > 0.0);      // narrowing really happened
  CHECK(worst < 1e-6);     // but stays within float precision
}

TEST_CASE("corrupt checkpoints are rejected as data errors") {
  const std::string path = temp_path("corrupt.ckpt");
  {
    FILE* f = fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    fputs("not a checkpoint at all", f);
    fclose(f);
  }
  try {
    load_checkpoint(path);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code == Errc::parse_error);
    CHECK(is_data_error(e.code));
  }
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ckpt")), Error);
}

TEST_CASE("train configs round-trip through JSON and reject junk") {
  TrainConfig cfg = tiny_train_config();
  cfg.scheme = Scheme::opinion_first;
  cfg.model.use_offset_features = false;
  cfg.optim.grad_clip = 5.0;
  const std::string text = train_config_to_json_text(cfg);
  CHECK(train_config_from_json_text(text) == cfg);

  CHECK_THROWS_AS(train_config_from_json_text("{\"banana\": 1}"), Error);
  CHECK_THROWS_AS(train_config_from_json_text("{\"model\": {\"hidden\": -3}}"), Error);
  CHECK_THROWS_AS(train_config_from_json_text("{\"scheme\": \"x\"}"), Error);
  CHECK_THROWS_AS(train_config_from_json_text("not json"), Error);
  // missing fields keep defaults
  const TrainConfig sparse = train_config_from_json_text("{\"epochs\": 3}");
  CHECK(sparse.epochs == 3);
  CHECK(sparse.model.hidden == TrainConfig{}.model.hidden);
}
