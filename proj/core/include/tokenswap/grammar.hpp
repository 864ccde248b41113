#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenswap/tokenizer.hpp"
#include "tokenswap/types.hpp"

namespace tokenswap {

// Word-level grammar set: unique, non-empty, lowercase words without internal
// whitespace, in a meaningful order (frequency order for the embedded list).
class GrammarSet {
 public:
  // Validates the word invariants; throws EmptySet or MalformedWord.
  GrammarSet(std::vector<std::string> words, std::string provenance);

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool contains(std::string_view word) const;
  const std::string& provenance() const noexcept { return provenance_; }

  // First n words, for size ablations. Throws InvalidArgument if n is 0 or
  // exceeds size().
  GrammarSet prefix(std::size_t n) const;

  friend bool operator==(const GrammarSet& a, const GrammarSet& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::string provenance_;
};

inline constexpr std::string_view kEmbeddedProvenance = "embedded-110";

// The 110 high-frequency function words (determiners, prepositions,
// conjunctions, pronouns, modals, wh-words, be/do/have forms), most frequent
// first.
GrammarSet default_grammar_set();

// One word per line; '#' comment lines and blank lines ignored; words are
// lowercased and deduplicated keeping the first occurrence.
GrammarSet parse_grammar_set(std::string_view content, std::string provenance);
GrammarSet load_grammar_set(const std::filesystem::path& path);

// A GrammarSet realized as token ids in one vocabulary.
class BoundGrammarSet {
 public:
  std::span<const TokenId> token_ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(TokenId id) const noexcept { return id < mask_.size() && mask_[id]; }
  // Grammar word realized by a bound id.
  const std::string& word_of(TokenId id) const;

  const GrammarSet& source() const noexcept { return source_; }
  std::uint64_t vocab_fingerprint() const noexcept { return vocab_fingerprint_; }
  std::size_t vocab_size() const noexcept { return mask_.size(); }
  const std::vector<std::string>& dropped_words() const noexcept { return dropped_; }

 private:
  friend BoundGrammarSet bind(const GrammarSet&, const Tokenizer&);
  explicit BoundGrammarSet(GrammarSet source) : source_(std::move(source)) {}

  std::vector<TokenId> ids_;  // sorted ascending
  std::vector<std::string> words_;  // aligned with ids_
  std::vector<bool> mask_;
  GrammarSet source_;
  std::uint64_t vocab_fingerprint_ = 0;
  std::vector<std::string> dropped_;
};

// Surface variants tried for each word: bare, leading space, capitalized,
// leading-space capitalized, ALL-CAPS.
std::vector<std::string> surface_variants(std::string_view word);

// Keeps every variant that encodes to exactly one token whose trimmed,
// lowercased surface is the word. Words with no such variant are reported in
// dropped_words(). Throws EmptyBinding when nothing binds.
BoundGrammarSet bind(const GrammarSet& gs, const Tokenizer& tokenizer);

// Sum of dist over the bound ids. Throws VocabMismatch if the distribution
// length differs from the bound vocabulary size.
double grammar_mass(const TokenDist& dist, const BoundGrammarSet& bg);
// Additionally checks the vocabulary fingerprint.
double grammar_mass(const TokenDist& dist, const BoundGrammarSet& bg, const Vocabulary& vocab);

struct GammaReport {
  double gamma = 0.0;
  std::uint64_t token_count = 0;
  std::uint64_t grammar_token_count = 0;
  std::string corpus_label;
};

// Fraction of corpus positions whose id is bound. Throws EmptyCorpus.
GammaReport measure_gamma(std::span<const TokenId> corpus, const BoundGrammarSet& bg,
                          std::string corpus_label = {});
GammaReport measure_gamma(std::span<const std::string> texts, const Tokenizer& tokenizer,
                          const BoundGrammarSet& bg, std::string corpus_label = {});

}  // namespace tokenswap
