#include "aste/tagging.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <map>
#include <sstream>

namespace aste {

const char* subtag_name(SubTag s) {
  switch (s) {
    case SubTag::B: return "B";
    case SubTag::I: return "I";
    case SubTag::O: return "O";
    case SubTag::E: return "E";
    case SubTag::S: return "S";
  }
  return "?";
}

namespace {

// Family rank in canonical order: I, E, O, B..., S...
int family_rank(SubTag s) {
  switch (s) {
    case SubTag::I: return 0;
    case SubTag::E: return 1;
    case SubTag::O: return 2;
    case SubTag::B: return 3;
    case SubTag::S: return 4;
  }
  return 5;
}

Span primary_of(const Triplet& t, Scheme scheme) {
  return scheme == Scheme::target_first ? t.target : t.opinion;
}

Span secondary_of(const Triplet& t, Scheme scheme) {
  return scheme == Scheme::target_first ? t.opinion : t.target;
}

void check_span_in_bounds(const Span& s, int n) {
  if (s.start < 0 || s.end >= n || s.start > s.end)
    throw Error(Errc::span_out_of_bounds,
                "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                    "] out of bounds for " + std::to_string(n) + " tokens");
}

}  // namespace

bool canonical_less(const Tag& a, const Tag& b) {
  const int fa = family_rank(a.sub), fb = family_rank(b.sub);
  if (fa != fb) return fa < fb;
  if (!a.has_window()) return false;  // same simple family -> equal
  if (a.pol != b.pol) return static_cast<int>(a.pol) < static_cast<int>(b.pol);
  if (a.j != b.j) return a.j < b.j;
  return a.k < b.k;
}

TagSequence encode(int n_tokens, const std::vector<Triplet>& triplets,
                   Scheme scheme, int max_offset) {
  for (const Triplet& t : triplets) {
    check_span_in_bounds(t.target, n_tokens);
    check_span_in_bounds(t.opinion, n_tokens);
  }

  // Group by primary span: exactly one secondary span per primary.
  std::map<Span, Triplet> by_primary;
  for (const Triplet& t : triplets) {
    const Span p = primary_of(t, scheme);
    auto [it, inserted] = by_primary.emplace(p, t);
    if (!inserted && !(it->second == t))
      throw Error(Errc::multiple_secondary_spans,
                  "primary span [" + std::to_string(p.start) + "," +
                      std::to_string(p.end) + "] linked to more than one secondary span");
  }

  // Primaries must be pairwise disjoint (map iterates in span order).
  const Span* prev = nullptr;
  for (const auto& [span, t] : by_primary) {
    if (prev && span.start <= prev->end)
      throw Error(Errc::overlapping_primary_spans,
                  "primary spans [" + std::to_string(prev->start) + "," +
                      std::to_string(prev->end) + "] and [" + std::to_string(span.start) +
                      "," + std::to_string(span.end) + "] overlap");
    prev = &span;
  }

  TagSequence seq;
  seq.scheme = scheme;
  seq.max_offset = max_offset;
  seq.tags.assign(n_tokens, Tag::simple(SubTag::O));

  for (const auto& [p, t] : by_primary) {
    const Span s = secondary_of(t, scheme);
    const int j = s.start - p.start;
    const int k = s.end - p.start;
    if (std::abs(j) > max_offset || std::abs(k) > max_offset)
      throw Error(Errc::offset_exceeds_max,
                  "offset window (" + std::to_string(j) + "," + std::to_string(k) +
                      ") exceeds bound " + std::to_string(max_offset));
    if (p.start == p.end) {
      seq.tags[p.start] = Tag::with_window(SubTag::S, t.sentiment, j, k);
    } else {
      seq.tags[p.start] = Tag::with_window(SubTag::B, t.sentiment, j, k);
      for (int i = p.start + 1; i < p.end; ++i) seq.tags[i] = Tag::simple(SubTag::I);
      seq.tags[p.end] = Tag::simple(SubTag::E);
    }
  }
  return seq;
}

std::vector<Triplet> decode(const TagSequence& seq) {
  check_well_formed(seq);
  const int n = seq.size();
  std::vector<Triplet> out;

  auto make_triplet = [&](Span primary, const Tag& head) {
    const Span secondary{primary.start + head.j, primary.start + head.k};
    Triplet t;
    if (seq.scheme == Scheme::target_first) {
      t.target = primary;
      t.opinion = secondary;
    } else {
      t.target = secondary;
      t.opinion = primary;
    }
    t.sentiment = head.pol;
    out.push_back(t);
  };

  for (int i = 0; i < n; ++i) {
    const Tag& tag = seq.tags[i];
    if (tag.sub == SubTag::O) continue;
    if (tag.sub == SubTag::S) {
      make_triplet(Span{i, i}, tag);
      continue;
    }
    // check_well_formed guarantees this is a B with an E ahead.
    int e = i + 1;
    while (seq.tags[e].sub == SubTag::I) ++e;
    make_triplet(Span{i, e}, tag);
    i = e;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Tag> enumerate_tagset(int n, int i, int max_offset) {
  if (i < 0 || i >= n) throw Error(Errc::index_out_of_range, "position outside sentence");
  std::vector<Tag> tags;
  tags.push_back(Tag::simple(SubTag::I));
  tags.push_back(Tag::simple(SubTag::E));
  tags.push_back(Tag::simple(SubTag::O));
  const int lo = std::max(-max_offset, -i);
  const int hi = std::min(max_offset, n - 1 - i);
  for (SubTag family : {SubTag::B, SubTag::S})
    for (Sentiment pol : kAllSentiments)
      for (int j = lo; j <= hi; ++j)
        for (int k = j; k <= hi; ++k)
          tags.push_back(Tag::with_window(family, pol, j, k));
  return tags;
}

int window_pair_count(int n, int i, int max_offset) {
  const int lo = std::max(-max_offset, -i);
  const int hi = std::min(max_offset, n - 1 - i);
  const int w = hi - lo + 1;
  return w <= 0 ? 0 : w * (w + 1) / 2;
}

void check_well_formed(const TagSequence& seq) {
  const int n = seq.size();
  if (n == 0) throw Error(Errc::malformed_sequence, "empty tag sequence");
  bool inside = false;  // between a B and its E
  for (int i = 0; i < n; ++i) {
    const Tag& t = seq.tags[i];
    switch (t.sub) {
      case SubTag::B:
        if (inside) throw Error(Errc::malformed_sequence, "B inside an open span");
        inside = true;
        break;
      case SubTag::I:
        if (!inside) throw Error(Errc::malformed_sequence, "I without a preceding B");
        break;
      case SubTag::E:
        if (!inside) throw Error(Errc::malformed_sequence, "E without a preceding B");
        inside = false;
        break;
      case SubTag::O:
      case SubTag::S:
        if (inside)
          throw Error(Errc::malformed_sequence,
                      std::string(subtag_name(t.sub)) + " inside an open span");
        break;
    }
    if (t.has_window()) {
      if (t.j > t.k) throw Error(Errc::malformed_sequence, "window with j > k");
      if (std::abs(t.j) > seq.max_offset || std::abs(t.k) > seq.max_offset)
        throw Error(Errc::offset_exceeds_max, "window exceeds offset bound");
      if (i + t.j < 0 || i + t.k >= n)
        throw Error(Errc::window_out_of_bounds,
                    "window [" + std::to_string(i + t.j) + "," + std::to_string(i + t.k) +
                        "] outside sentence");
    }
  }
  if (inside) throw Error(Errc::malformed_sequence, "unclosed B at end of sequence");
}

bool is_well_formed(const TagSequence& seq) noexcept {
  try {
    check_well_formed(seq);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> codec_warnings(const std::vector<Triplet>& triplets) {
  std::vector<std::string> warnings;
  for (size_t idx = 0; idx < triplets.size(); ++idx) {
    const Triplet& t = triplets[idx];
    if (std::max(t.target.start, t.opinion.start) <= std::min(t.target.end, t.opinion.end)) {
      std::ostringstream os;
      os << "triplet " << idx << ": target [" << t.target.start << "," << t.target.end
         << "] overlaps its opinion [" << t.opinion.start << "," << t.opinion.end << "]";
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

std::string tag_to_string(const Tag& tag) {
  if (!tag.has_window()) return subtag_name(tag.sub);
  std::ostringstream os;
  os << subtag_name(tag.sub) << '^' << sentiment_symbol(tag.pol) << "_{" << tag.j << ','
     << tag.k << '}';
  return os.str();
}

Tag tag_from_string(std::string_view text) {
  auto fail = [&]() -> Tag {
    throw Error(Errc::parse_error, "bad tag '" + std::string(text) + "'");
  };
  if (text == "I") return Tag::simple(SubTag::I);
  if (text == "E") return Tag::simple(SubTag::E);
  if (text == "O") return Tag::simple(SubTag::O);
  if (text.size() < 8) fail();  // shortest: B^+_{0,0}
  SubTag family;
  if (text[0] == 'B')
    family = SubTag::B;
  else if (text[0] == 'S')
    family = SubTag::S;
  else
    return fail();
  if (text[1] != '^') fail();
  const auto pol = sentiment_from_symbol(text[2]);
  if (!pol) fail();
  if (text.substr(3, 2) != "_{" || text.back() != '}') fail();
  const std::string_view body = text.substr(5, text.size() - 6);
  const size_t comma = body.find(',');
  if (comma == std::string_view::npos) fail();
  int j = 0, k = 0;
  auto parse_int = [&](std::string_view s, int& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail();
  };
  parse_int(body.substr(0, comma), j);
  parse_int(body.substr(comma + 1), k);
  return Tag::with_window(family, *pol, j, k);
}

std::string sequence_to_string(const TagSequence& seq) {
  std::string out;
  for (int i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += tag_to_string(seq.tags[i]);
  }
  return out;
}

std::vector<Tag> tags_from_string(std::string_view text) {
  std::vector<Tag> tags;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    tags.push_back(tag_from_string(text.substr(pos, end - pos)));
    pos = end;
  }
  return tags;
}

}  // namespace aste
