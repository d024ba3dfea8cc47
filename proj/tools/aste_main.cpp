// Command line front end: train, predict, eval, encode, decode, merge,
// stats, selfcheck. Exit codes: 0 success, 1 usage, 2 bad data, 3 internal
// invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "aste/eval.hpp"
#include "aste/io.hpp"
#include "aste/selfcheck.hpp"
#include "aste/train.hpp"
#include "json.hpp"

namespace {

using namespace aste;
using json = nlohmann::json;

// Paths may live under a data directory named by this variable.
std::string resolve_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::exists(path)) return path;
  const char* base = std::getenv("ASTE_DATA_DIR");
  if (base && *base) {
    const fs::path joined = fs::path(base) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

Scheme parse_scheme(const std::string& s) {
  const auto scheme = s.size() == 1 ? scheme_from_letter(s[0]) : std::nullopt;
  if (!scheme)
    throw CLI::ValidationError("--scheme", "must be 't' (targets) or 'o' (opinions)");
  return *scheme;
}

struct TrainArgs {
  std::string config_path, train_path, dev_path, embeddings_path, out_path;
  std::string scheme;
  bool float32 = false;
  // flag overrides; unset = keep config value
  std::optional<int> max_offset, epochs, batch_size, hidden, word_dim, offset_dim;
  std::optional<uint64_t> seed;
  std::optional<double> lr, dropout, grad_clip;
  bool no_offset_features = false, no_opinion_features = false;
  bool no_transition_mask = false, freeze_embeddings = false;
};

int cmd_train(const TrainArgs& args) {
  TrainConfig config;
  if (!args.config_path.empty())
    config = train_config_from_json_text(read_text_file(resolve_path(args.config_path)));
  if (!args.scheme.empty()) config.scheme = parse_scheme(args.scheme);
  if (args.max_offset) config.model.max_offset = *args.max_offset;
  if (args.epochs) config.epochs = *args.epochs;
  if (args.batch_size) config.batch_size = *args.batch_size;
  if (args.hidden) config.model.hidden = *args.hidden;
  if (args.word_dim) config.model.word_dim = *args.word_dim;
  if (args.offset_dim) config.model.offset_dim = *args.offset_dim;
  if (args.seed) config.seed = *args.seed;
  if (args.lr) config.optim.lr = *args.lr;
  if (args.dropout) config.model.dropout = *args.dropout;
  if (args.grad_clip) config.optim.grad_clip = *args.grad_clip;
  if (args.no_offset_features) config.model.use_offset_features = false;
  if (args.no_opinion_features) config.model.use_opinion_features = false;
  if (args.no_transition_mask) config.model.transition_mask = false;
  if (args.freeze_embeddings) config.model.train_embeddings = false;

  const auto train_set = load_corpus(resolve_path(args.train_path));
  std::vector<CorpusRecord> dev_set;
  if (!args.dev_path.empty()) dev_set = load_corpus(resolve_path(args.dev_path));
  std::map<std::string, std::vector<double>> pretrained;
  if (!args.embeddings_path.empty())
    pretrained = load_embeddings_text(resolve_path(args.embeddings_path));

  const TrainResult result = train(config, train_set, dev_set, pretrained, &std::cout);
  std::cout << "kept " << result.filter.kept << " sentences, dropped "
            << result.filter.dropped;
  for (const auto& [code, count] : result.filter.reasons)
    std::cout << "  " << errc_name(code) << " x" << count;
  std::cout << '\n';
  std::cout << "best epoch " << result.best_epoch << " dev_f1 " << result.best_dev_f1
            << '\n';

  Checkpoint ckpt{result.best_model, config, result.best_dev_f1, result.best_epoch};
  save_checkpoint(args.out_path, ckpt, args.float32);
  std::cout << "saved " << args.out_path << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path) {
  const Checkpoint ckpt = load_checkpoint(resolve_path(model_path));
  const auto records = load_corpus(resolve_path(input_path));
  const auto predictions = predict(ckpt.model, records, ckpt.config.scheme);
  std::vector<CorpusRecord> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i)
    out.push_back(CorpusRecord{records[i].tokens, predictions[i]});
  write_jsonl(output_path, out);
  std::cout << "wrote " << out.size() << " sentences to " << output_path << '\n';
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& mode_name, const std::string& by_length,
             const std::string& csv_path) {
  const auto gold_records = load_corpus(resolve_path(gold_path));
  const auto pred_records = load_corpus(resolve_path(pred_path));
  std::vector<std::vector<Triplet>> gold, pred;
  for (const auto& r : gold_records) gold.push_back(r.triplets);
  for (const auto& r : pred_records) pred.push_back(r.triplets);

  MatchMode mode;
  if (mode_name == "exact")
    mode = MatchMode::exact;
  else if (mode_name == "partial-target")
    mode = MatchMode::partial_target;
  else if (mode_name == "partial-opinion")
    mode = MatchMode::partial_opinion;
  else
    throw CLI::ValidationError("--mode",
                               "must be exact, partial-target or partial-opinion");

  std::cout << format_prf(score(gold, pred, mode));

  if (!by_length.empty()) {
    LengthFacet facet;
    if (by_length == "target")
      facet = LengthFacet::target_len;
    else if (by_length == "opinion")
      facet = LengthFacet::opinion_len;
    else if (by_length == "offset")
      facet = LengthFacet::offset_len;
    else
      throw CLI::ValidationError("--by-length", "must be target, opinion or offset");
    const auto buckets = length_breakdown(gold, pred, facet);
    std::cout << '\n' << format_buckets(buckets, facet);
    if (!csv_path.empty()) write_text_file(csv_path, buckets_to_csv(buckets, facet));
  }
  return 0;
}

int cmd_encode(const std::string& input_path, const std::string& scheme_name,
               int max_offset, bool plain, const std::string& output_path) {
  const Scheme scheme = parse_scheme(scheme_name);
  const auto records = load_corpus(resolve_path(input_path));
  std::ostringstream out;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    TagSequence seq;
    try {
      seq = encode(static_cast<int>(r.tokens.size()), r.triplets, scheme, max_offset);
    } catch (const Error& e) {
      throw Error(e.code, "sentence " + std::to_string(i + 1) + ": " + e.what());
    }
    for (const std::string& w : codec_warnings(r.triplets))
      std::cerr << "warning: sentence " << i + 1 << ": " << w << '\n';
    if (plain) {
      out << sequence_to_string(seq) << '\n';
    } else {
      json j{{"tokens", r.tokens},
             {"scheme", std::string(1, scheme_letter(scheme))},
             {"max_offset", max_offset},
             {"tags", sequence_to_string(seq)}};
      out << j.dump() << '\n';
    }
  }
  if (output_path.empty())
    std::cout << out.str();
  else
    write_text_file(output_path, out.str());
  return 0;
}

int cmd_decode(const std::string& input_path, const std::string& output_path) {
  std::ifstream file(resolve_path(input_path));
  if (!file) throw Error(Errc::io_error, "cannot read " + input_path);
  std::vector<CorpusRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, std::string("not valid JSON: ") + e.what(), line_no);
    }
    try {
      TagSequence seq;
      const std::string scheme_str = j.at("scheme").get<std::string>();
      const auto scheme =
          scheme_str.size() == 1 ? scheme_from_letter(scheme_str[0]) : std::nullopt;
      if (!scheme) throw Error(Errc::parse_error, "bad scheme", line_no);
      seq.scheme = *scheme;
      seq.max_offset = j.at("max_offset").get<int>();
      seq.tags = tags_from_string(j.at("tags").get<std::string>());
      CorpusRecord rec;
      for (const auto& t : j.at("tokens")) rec.tokens.push_back(t.get<std::string>());
      if (rec.tokens.size() != seq.tags.size())
        throw Error(Errc::parse_error, "tags and tokens differ in length", line_no);
      rec.triplets = decode(seq);
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, std::string("bad record: ") + e.what(), line_no);
    } catch (const Error& e) {
      if (e.line >= 0) throw;
      throw Error(e.code, e.what(), line_no);
    }
  }
  write_jsonl(output_path, out);
  std::cout << "wrote " << out.size() << " sentences to " << output_path << '\n';
  return 0;
}

int cmd_merge(const std::string& base_path, const std::string& donor_path,
              const std::string& output_path) {
  const auto base_records = load_corpus(resolve_path(base_path));
  const auto donor_records = load_corpus(resolve_path(donor_path));
  std::vector<std::vector<Triplet>> base, donor;
  for (const auto& r : base_records) base.push_back(r.triplets);
  for (const auto& r : donor_records) donor.push_back(r.triplets);
  const auto merged = ensemble_merge(base, donor);
  std::vector<CorpusRecord> out;
  for (size_t i = 0; i < merged.size(); ++i)
    out.push_back(CorpusRecord{base_records[i].tokens, merged[i]});
  write_jsonl(output_path, out);
  std::cout << "wrote " << out.size() << " sentences to " << output_path << '\n';
  return 0;
}

int cmd_stats(const std::string& input_path) {
  const auto records = load_corpus(resolve_path(input_path));
  std::cout << format_stats(dataset_stats(records));
  return 0;
}

int cmd_selfcheck(uint64_t seed, bool quick) {
  SelfCheckOptions opt;
  opt.seed = seed;
  if (quick) {
    opt.codec_cases = 200;
    opt.inference_models = 10;
    opt.gradient_instances = 1;
  }
  bool all_ok = true;
  for (const CheckResult& r : run_selfcheck(opt)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all_ok = all_ok && r.passed;
  }
  if (!all_ok) {
    std::cout << "selfcheck failed\n";
    return 3;
  }
  std::cout << "selfcheck ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect sentiment triplet extraction with a position-aware tagger"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", targs.config_path, "JSON config file");
  train_cmd->add_option("--train", targs.train_path, "training corpus")->required();
  train_cmd->add_option("--dev", targs.dev_path, "development corpus");
  train_cmd->add_option("--embeddings", targs.embeddings_path,
                        "pretrained text embeddings");
  train_cmd->add_option("--out", targs.out_path, "checkpoint output path")->required();
  train_cmd->add_option("--scheme", targs.scheme, "t or o");
  train_cmd->add_option("--max-offset", targs.max_offset, "offset window bound");
  train_cmd->add_option("--epochs", targs.epochs, "training epochs");
  train_cmd->add_option("--batch-size", targs.batch_size, "sentences per update");
  train_cmd->add_option("--hidden", targs.hidden, "encoder width per direction");
  train_cmd->add_option("--word-dim", targs.word_dim, "word embedding width");
  train_cmd->add_option("--offset-dim", targs.offset_dim, "offset embedding width");
  train_cmd->add_option("--seed", targs.seed, "random seed");
  train_cmd->add_option("--lr", targs.lr, "Adam learning rate");
  train_cmd->add_option("--dropout", targs.dropout, "dropout rate");
  train_cmd->add_option("--grad-clip", targs.grad_clip, "global gradient norm cap");
  train_cmd->add_flag("--no-offset-features", targs.no_offset_features,
                      "ablate the offset score");
  train_cmd->add_flag("--no-opinion-features", targs.no_opinion_features,
                      "ablate the opinion span score");
  train_cmd->add_flag("--no-transition-mask", targs.no_transition_mask,
                      "allow all sub-tag transitions");
  train_cmd->add_flag("--freeze-embeddings", targs.freeze_embeddings,
                      "skip embedding updates");
  train_cmd->add_flag("--float32", targs.float32, "store checkpoint values as f32");

  std::string model_path, input_path, output_path;
  auto* predict_cmd = app.add_subcommand("predict", "Decode a corpus with a model");
  predict_cmd->add_option("--model", model_path, "checkpoint")->required();
  predict_cmd->add_option("--input", input_path, "corpus to decode")->required();
  predict_cmd->add_option("--output", output_path, "predictions JSONL")->required();

  std::string gold_path, pred_path, mode_name = "exact", by_length, csv_path;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold");
  eval_cmd->add_option("--gold", gold_path, "gold corpus")->required();
  eval_cmd->add_option("--pred", pred_path, "predictions")->required();
  eval_cmd->add_option("--mode", mode_name, "exact | partial-target | partial-opinion");
  eval_cmd->add_option("--by-length", by_length,
                       "bucket report: target | opinion | offset");
  eval_cmd->add_option("--csv", csv_path, "write bucket report as CSV");

  std::string enc_input, enc_scheme = "t", enc_output;
  int enc_max_offset = 6;
  bool enc_plain = false;
  auto* encode_cmd = app.add_subcommand("encode", "Triplets to tag sequences");
  encode_cmd->add_option("--input", enc_input, "corpus")->required();
  encode_cmd->add_option("--scheme", enc_scheme, "t or o");
  encode_cmd->add_option("--max-offset", enc_max_offset, "offset window bound");
  encode_cmd->add_flag("--plain", enc_plain, "print bare tag strings");
  encode_cmd->add_option("--output", enc_output, "output path (default stdout)");

  std::string dec_input, dec_output;
  auto* decode_cmd = app.add_subcommand("decode", "Tag sequences back to triplets");
  decode_cmd->add_option("--input", dec_input, "encoded JSONL")->required();
  decode_cmd->add_option("--output", dec_output, "corpus JSONL")->required();

  std::string base_path, donor_path, merge_output;
  auto* merge_cmd = app.add_subcommand("merge", "Union two prediction files");
  merge_cmd->add_option("--base", base_path, "kept in full")->required();
  merge_cmd->add_option("--donor", donor_path, "adds non-overlapping triplets")
      ->required();
  merge_cmd->add_option("--output", merge_output, "merged JSONL")->required();

  std::string stats_input;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--input", stats_input, "corpus")->required();

  uint64_t check_seed = 7;
  bool check_quick = false;
  auto* check_cmd = app.add_subcommand("selfcheck", "Randomized consistency checks");
  check_cmd->add_option("--seed", check_seed, "random seed");
  check_cmd->add_flag("--quick", check_quick, "reduced case counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(train_cmd)) return cmd_train(targs);
    if (app.got_subcommand(predict_cmd))
      return cmd_predict(model_path, input_path, output_path);
    if (app.got_subcommand(eval_cmd))
      return cmd_eval(gold_path, pred_path, mode_name, by_length, csv_path);
    if (app.got_subcommand(encode_cmd))
      return cmd_encode(enc_input, enc_scheme, enc_max_offset, enc_plain, enc_output);
    if (app.got_subcommand(decode_cmd)) return cmd_decode(dec_input, dec_output);
    if (app.got_subcommand(merge_cmd))
      return cmd_merge(base_path, donor_path, merge_output);
    if (app.got_subcommand(stats_cmd)) return cmd_stats(stats_input);
    if (app.got_subcommand(check_cmd)) return cmd_selfcheck(check_seed, check_quick);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code) << "]: " << e.what() << '\n';
    return is_data_error(e.code) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
