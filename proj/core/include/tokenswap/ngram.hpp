#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tokenswap/source.hpp"
#include "tokenswap/tokenizer.hpp"
#include "tokenswap/types.hpp"

namespace tokenswap {

struct NGramOptions {
  int order = 3;
  // Each text is counted dup_factor times, the count-level analogue of
  // training for that many epochs.
  std::uint64_t dup_factor = 1;
  double backoff = 0.4;  // stupid-backoff factor, in (0, 1]
  bool lowercase = false;

  void validate() const;
};

// Word-level n-gram model with stupid backoff. Texts are padded with <s> and
// </s>; counts are kept for every context length 0..order-1. Immutable after
// construction and safe to query concurrently.
class NGramModel final : public ProbabilitySource {
 public:
  static constexpr std::uint8_t kFormatVersion = 1;

  // Throws EmptyCorpus when corpus is empty or holds no tokens.
  static NGramModel train(std::span<const std::string> corpus, const NGramOptions& options);

  // load(save(m)) answers every query identically to m. Throws Io or Format.
  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);

  // Scores each token with the relative frequency at the longest context
  // suffix where it was observed, times backoff^(levels skipped), then
  // normalizes. Contexts longer than order-1 are truncated to their suffix.
  TokenDist distribution(std::span<const TokenId> context) const;

  SourceOutput query(std::span<const TokenId> context) const override {
    return {distribution(context), true, {}};
  }
  const Tokenizer& tokenizer() const noexcept override { return *tokenizer_; }
  std::string describe() const override;

  int order() const noexcept { return order_; }
  double backoff() const noexcept { return backoff_; }
  bool lowercase() const noexcept { return tokenizer_->options().lowercase; }
  const Vocabulary& vocabulary() const noexcept { return tokenizer_->vocabulary(); }

  // Count of next after context (context length < order). 0 when unseen.
  std::uint64_t count(std::span<const TokenId> context, TokenId next) const;
  std::size_t context_count() const noexcept { return table_.size(); }

  friend bool operator==(const NGramModel& a, const NGramModel& b);

 private:
  struct ContextHash {
    std::size_t operator()(const std::vector<TokenId>& ctx) const noexcept;
  };
  struct Continuations {
    std::vector<std::pair<TokenId, std::uint64_t>> next;  // ascending by id
    std::uint64_t total = 0;
  };
  using Table = std::unordered_map<std::vector<TokenId>, Continuations, ContextHash>;

  NGramModel(std::shared_ptr<const WordTokenizer> tokenizer, int order, double backoff, Table table);
  void finalize();

  std::shared_ptr<const WordTokenizer> tokenizer_;
  int order_;
  double backoff_;
  Table table_;
  std::vector<double> unigram_;  // relative frequencies of the empty context
};

}  // namespace tokenswap
