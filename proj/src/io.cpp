#include "aste/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace aste {

namespace {

using json = nlohmann::json;

Span span_from_json(const json& j, int n_tokens, int line_no) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw Error(Errc::parse_error, "span must be [start, end]", line_no);
  const Span s{j[0].get<int>(), j[1].get<int>()};
  if (s.start < 0 || s.end >= n_tokens || s.start > s.end)
    throw Error(Errc::span_out_of_bounds,
                "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                    "] invalid for " + std::to_string(n_tokens) + " tokens",
                line_no);
  return s;
}

// --- minimal parser for the text release's Python-style triplet list ---

struct TxtParser {
  const std::string& text;
  size_t pos = 0;
  int line_no;

  explicit TxtParser(const std::string& t, int line) : text(t), line_no(line) {}

  [[noreturn]] void fail(const std::string& why) {
    throw Error(Errc::parse_error, "bad triplet list: " + why, line_no);
  }
  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  int parse_int() {
    skip_ws();
    size_t start = pos;
    if (pos < text.size() && text[pos] == '-') ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos == start) fail("expected integer");
    return std::stoi(text.substr(start, pos - start));
  }

  std::vector<int> parse_index_list() {
    expect('[');
    std::vector<int> out;
    skip_ws();
    if (eat(']')) return out;
    out.push_back(parse_int());
    while (eat(',')) out.push_back(parse_int());
    expect(']');
    return out;
  }

  std::string parse_quoted() {
    skip_ws();
    if (pos >= text.size() || (text[pos] != '\'' && text[pos] != '"'))
      fail("expected quoted sentiment");
    const char quote = text[pos++];
    const size_t start = pos;
    while (pos < text.size() && text[pos] != quote) ++pos;
    if (pos >= text.size()) fail("unterminated string");
    return text.substr(start, pos++ - start);
  }
};

Span span_from_indices(const std::vector<int>& ids, int n_tokens, int line_no) {
  if (ids.empty())
    throw Error(Errc::parse_error, "empty index list", line_no);
  for (size_t i = 1; i < ids.size(); ++i)
    if (ids[i] != ids[i - 1] + 1)
      throw Error(Errc::non_contiguous_span,
                  "index list is not a contiguous ascending run", line_no);
  const Span s{ids.front(), ids.back()};
  if (s.start < 0 || s.end >= n_tokens)
    throw Error(Errc::span_out_of_bounds,
                "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                    "] invalid for " + std::to_string(n_tokens) + " tokens",
                line_no);
  return s;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

CorpusRecord record_from_json_line(const std::string& line, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("not valid JSON: ") + e.what(), line_no);
  }
  try {
    if (!j.is_object() || !j.contains("tokens") || !j.contains("triplets"))
      throw Error(Errc::parse_error, "record needs 'tokens' and 'triplets'", line_no);
    CorpusRecord rec;
    for (const auto& t : j.at("tokens")) {
      if (!t.is_string())
        throw Error(Errc::parse_error, "tokens must be strings", line_no);
      rec.tokens.push_back(t.get<std::string>());
    }
    if (rec.tokens.empty())
      throw Error(Errc::parse_error, "sentence has no tokens", line_no);
    const int n = static_cast<int>(rec.tokens.size());
    for (const auto& tj : j.at("triplets")) {
      if (!tj.is_object() || !tj.contains("target") || !tj.contains("opinion") ||
          !tj.contains("sentiment"))
        throw Error(Errc::parse_error,
                    "triplet needs 'target', 'opinion' and 'sentiment'", line_no);
      Triplet t;
      t.target = span_from_json(tj.at("target"), n, line_no);
      t.opinion = span_from_json(tj.at("opinion"), n, line_no);
      const auto pol = sentiment_from_code(tj.at("sentiment").get<std::string>());
      if (!pol)
        throw Error(Errc::parse_error,
                    "sentiment must be POS, NEU or NEG", line_no);
      t.sentiment = *pol;
      rec.triplets.push_back(t);
    }
    return rec;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad record: ") + e.what(), line_no);
  }
}

std::string record_to_json_line(const CorpusRecord& record) {
  json j;
  j["tokens"] = record.tokens;
  json triplets = json::array();
  for (const Triplet& t : record.triplets)
    triplets.push_back(json{{"target", {t.target.start, t.target.end}},
                            {"opinion", {t.opinion.start, t.opinion.end}},
                            {"sentiment", sentiment_code(t.sentiment)}});
  j["triplets"] = std::move(triplets);
  return j.dump();
}

std::vector<CorpusRecord> load_jsonl(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(Errc::io_error, "cannot read " + path);
  std::vector<CorpusRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json_line(line, line_no));
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<CorpusRecord>& records) {
  std::ofstream file(path);
  if (!file) throw Error(Errc::io_error, "cannot write " + path);
  for (const CorpusRecord& r : records) file << record_to_json_line(r) << '\n';
  if (!file) throw Error(Errc::io_error, "failed writing " + path);
}

std::vector<CorpusRecord> load_aste_txt(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(Errc::io_error, "cannot read " + path);
  std::vector<CorpusRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const size_t sep = line.find("####");
    if (sep == std::string::npos)
      throw Error(Errc::parse_error, "missing '####' separator", line_no);

    CorpusRecord rec;
    rec.tokens = split_ws(line.substr(0, sep));
    if (rec.tokens.empty())
      throw Error(Errc::parse_error, "sentence has no tokens", line_no);
    const int n = static_cast<int>(rec.tokens.size());

    const std::string body = line.substr(sep + 4);
    TxtParser p(body, line_no);
    p.expect('[');
    p.skip_ws();
    if (!p.eat(']')) {
      do {
        p.expect('(');
        const std::vector<int> target_ids = p.parse_index_list();
        p.expect(',');
        const std::vector<int> opinion_ids = p.parse_index_list();
        p.expect(',');
        const std::string code = p.parse_quoted();
        p.expect(')');
        Triplet t;
        t.target = span_from_indices(target_ids, n, line_no);
        t.opinion = span_from_indices(opinion_ids, n, line_no);
        const auto pol = sentiment_from_code(code);
        if (!pol)
          throw Error(Errc::parse_error, "unknown sentiment '" + code + "'", line_no);
        t.sentiment = *pol;
        rec.triplets.push_back(t);
      } while (p.eat(','));
      p.expect(']');
    }
    p.skip_ws();
    if (p.pos != body.size())
      throw Error(Errc::parse_error, "trailing characters after triplet list", line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  if (ends_with(path, ".txt")) return load_aste_txt(path);
  return load_jsonl(path);
}

DatasetStats dataset_stats(const std::vector<CorpusRecord>& records) {
  DatasetStats s;
  s.sentences = records.size();
  for (const CorpusRecord& r : records) {
    s.triplets += r.triplets.size();
    std::map<Span, std::vector<Span>> opinions_of, targets_of;
    for (const Triplet& t : r.triplets) {
      ++s.by_polarity[static_cast<int>(t.sentiment)];
      opinions_of[t.target].push_back(t.opinion);
      targets_of[t.opinion].push_back(t.target);
    }
    auto tally = [](std::map<Span, std::vector<Span>>& groups, size_t& one,
                    size_t& multi) {
      for (auto& [span, partners] : groups) {
        std::sort(partners.begin(), partners.end());
        partners.erase(std::unique(partners.begin(), partners.end()), partners.end());
        (partners.size() == 1 ? one : multi) += 1;
      }
    };
    tally(opinions_of, s.targets_one_opinion, s.targets_multi_opinion);
    tally(targets_of, s.opinions_one_target, s.opinions_multi_target);
  }
  return s;
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream os;
  os << "sentences                 " << s.sentences << '\n'
     << "triplets                  " << s.triplets << '\n'
     << "  positive                " << s.by_polarity[0] << '\n'
     << "  neutral                 " << s.by_polarity[1] << '\n'
     << "  negative                " << s.by_polarity[2] << '\n'
     << "targets w/ one opinion    " << s.targets_one_opinion << '\n'
     << "targets w/ more opinions  " << s.targets_multi_opinion << '\n'
     << "opinions w/ one target    " << s.opinions_one_target << '\n'
     << "opinions w/ more targets  " << s.opinions_multi_target << '\n';
  return os.str();
}

std::map<std::string, std::vector<double>> load_embeddings_text(
    const std::string& path) {
  std::ifstream file(path);
  if (!file) throw Error(Errc::io_error, "cannot read " + path);
  std::map<std::string, std::vector<double>> out;
  std::string line;
  int line_no = 0;
  int width = -1;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    if (!(is >> token))
      throw Error(Errc::parse_error, "missing token", line_no);
    std::vector<double> vec;
    double v;
    while (is >> v) vec.push_back(v);
    if (!is.eof())
      throw Error(Errc::parse_error, "non-numeric embedding value", line_no);
    if (vec.empty()) throw Error(Errc::parse_error, "no embedding values", line_no);
    if (width < 0) width = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != width)
      throw Error(Errc::parse_error,
                  "expected " + std::to_string(width) + " values, got " +
                      std::to_string(vec.size()),
                  line_no);
    out[token] = std::move(vec);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::io_error, "cannot read " + path);
  std::ostringstream os;
  os << file.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::io_error, "cannot write " + path);
  file << content;
  if (!file) throw Error(Errc::io_error, "failed writing " + path);
}

}  // namespace aste
