#include "tokenswap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tokenswap/error.hpp"
#include "tokenswap/parallel.hpp"
#include "tokenswap/unicode.hpp"

namespace tokenswap {

std::string_view to_string(Normalization n) noexcept {
  return n == Normalization::StripPunctuation ? "strip_punctuation" : "none";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "none") return Normalization::None;
  if (name == "strip_punctuation") return Normalization::StripPunctuation;
  throw Error(ErrorKind::InvalidArgument, "unknown normalization '" + std::string(name) + "'");
}

void ExtractionTask::validate() const {
  if (prefix.empty()) throw Error(ErrorKind::InvalidArgument, "task " + id + " has an empty prefix");
  if (reference_suffix.empty()) {
    throw Error(ErrorKind::InvalidArgument, "task " + id + " has an empty reference suffix");
  }
}

std::string normalize_text(std::string_view text, Normalization normalization) {
  if (normalization == Normalization::StripPunctuation) return unicode::strip_punctuation(text);
  return std::string(text);
}

MatchingLength matching_length(std::span<const TokenId> generated, std::span<const TokenId> reference,
                               const Tokenizer& tokenizer) {
  const auto [g, r] = std::mismatch(generated.begin(), generated.end(), reference.begin(), reference.end());
  MatchingLength ml;
  ml.tokens = static_cast<std::size_t>(g - generated.begin());
  ml.chars = unicode::code_point_count(tokenizer.decode(generated.first(ml.tokens)));
  return ml;
}

bool exact_match(std::string_view generated, std::string_view reference, Normalization normalization) {
  return normalize_text(generated, normalization) == normalize_text(reference, normalization);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::string_view generated, std::string_view reference) {
  const auto ref = unicode::split_whitespace(reference);
  if (ref.empty()) throw Error(ErrorKind::EmptyReference, "reference has no words");
  const auto gen = unicode::split_whitespace(generated);
  return static_cast<double>(lcs_length(gen, ref)) / static_cast<double>(ref.size());
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(unicode::decode_utf8(a), unicode::decode_utf8(b));
}

double norm_levenshtein(std::string_view generated, std::string_view reference) {
  const auto g = unicode::decode_utf8(generated);
  const auto r = unicode::decode_utf8(reference);
  if (g.empty() && r.empty()) throw Error(ErrorKind::BothEmpty, "both texts are empty");
  return static_cast<double>(levenshtein(g, r)) / static_cast<double>(std::max(g.size(), r.size()));
}

SequenceScores score_sequence(std::span<const TokenId> generated_tokens,
                              std::span<const TokenId> reference_tokens,
                              std::string_view generated_text, std::string_view reference_text,
                              const Tokenizer& tokenizer, Normalization normalization) {
  SequenceScores s;
  const MatchingLength ml = matching_length(generated_tokens, reference_tokens, tokenizer);
  s.ml_tokens = ml.tokens;
  s.ml_chars = ml.chars;
  const std::string gen = normalize_text(generated_text, normalization);
  const std::string ref = normalize_text(reference_text, normalization);
  s.exact_match = gen == ref;
  s.rouge_l = rouge_l(gen, ref);
  s.norm_levenshtein = norm_levenshtein(gen, ref);
  return s;
}

double threshold_rate(std::span<const SequenceScores> scores, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1]");
  }
  if (scores.empty()) throw Error(ErrorKind::EmptyList, "no scores");
  const auto above = std::count_if(scores.begin(), scores.end(),
                                   [&](const SequenceScores& s) { return s.rouge_l > threshold; });
  return 100.0 * static_cast<double>(above) / static_cast<double>(scores.size());
}

double cross_entropy(const ProbabilitySource& provider, std::span<const std::string> texts, int jobs) {
  const Tokenizer& tok = provider.tokenizer();
  std::vector<double> nll(texts.size(), 0.0);
  std::vector<std::size_t> positions(texts.size(), 0);
  parallel_for(texts.size(), jobs, [&](std::size_t t) {
    const auto ids = tok.encode(texts[t]);
    std::vector<TokenId> context = with_bos(tok, {});
    for (TokenId id : ids) {
      const TokenDist dist = provider.query(context).dist;
      nll[t] -= std::log(std::max(dist[id], kProbabilityFloor));
      context.push_back(id);
    }
    positions[t] = ids.size();
  });
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < texts.size(); ++t) {
    total += nll[t];
    count += positions[t];
  }
  if (count == 0) throw Error(ErrorKind::EmptyCorpus, "no tokens to score");
  return total / static_cast<double>(count);
}

std::vector<ModeAggregate> aggregate(std::span<const SequenceRow> rows, double rouge_threshold) {
  std::vector<ModeAggregate> out;
  std::vector<std::vector<SequenceScores>> grouped;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ModeAggregate& a) { return a.mode == row.mode; });
    if (it == out.end()) {
      out.push_back({row.mode});
      grouped.emplace_back();
      it = out.end() - 1;
    }
    grouped[static_cast<std::size_t>(it - out.begin())].push_back(row.scores);
  }
  for (std::size_t m = 0; m < out.size(); ++m) {
    const auto& g = grouped[m];
    ModeAggregate& a = out[m];
    a.count = g.size();
    const double n = static_cast<double>(g.size());
    std::size_t exact = 0;
    for (const auto& s : g) {
      a.mean_ml_tokens += static_cast<double>(s.ml_tokens);
      a.mean_ml_chars += static_cast<double>(s.ml_chars);
      a.mean_rouge_l += s.rouge_l;
      a.mean_norm_levenshtein += s.norm_levenshtein;
      exact += s.exact_match ? 1 : 0;
    }
    a.mean_ml_tokens /= n;
    a.mean_ml_chars /= n;
    a.mean_rouge_l /= n;
    a.mean_norm_levenshtein /= n;
    a.emr_percent = 100.0 * static_cast<double>(exact) / n;
    a.rouge_l_above_threshold_percent = threshold_rate(g, rouge_threshold);
  }
  return out;
}

const ModeAggregate* MemorizationReport::find(DecodeMode mode) const {
  auto it = std::find_if(aggregates.begin(), aggregates.end(),
                         [&](const ModeAggregate& a) { return a.mode == mode; });
  return it == aggregates.end() ? nullptr : &*it;
}

}  // namespace tokenswap
